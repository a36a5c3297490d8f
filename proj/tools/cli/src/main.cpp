#include "ddocp/cli/commands.hpp"

int main(int argc, char** argv) { return ddocp::cli::run(argc, argv); }

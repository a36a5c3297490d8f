#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ddocp/msr_model.hpp"
#include "ddocp/simulator.hpp"

namespace ddocp::cli {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  void add(std::vector<double> row);
  /// Index of a header entry; ConfigFailure if absent.
  std::size_t column(const std::string& name) const;
};

/// Writes `<path>.tmp` and renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

/// Columns t, C_1..C_6, C_n, rho_th, T_r, T_hx, rho_ext_pcm, dP_Pa,
/// Q_g_MW, v_avg_mps.
CsvTable trajectory_table(const Trajectory& traj, const msr::Params& params);

}  // namespace ddocp::cli

#include "ddocp/cli/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ddocp/cli/config.hpp"

namespace ddocp::cli {

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  out.append(buf, res.ptr);
}

}  // namespace

void CsvTable::add(std::vector<double> row) {
  if (row.size() != header.size()) throw std::logic_error("csv row width does not match the header");
  rows.push_back(std::move(row));
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ConfigFailure("missing csv column \"" + name + "\"");
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  std::string text;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) text += ',';
    text += table.header[i];
  }
  text += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) text += ',';
      append_number(text, row[i]);
    }
    text += '\n';
  }
  write_text_atomic(path, text);
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigFailure("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigFailure(path.string() + ": empty file");
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) t.header.push_back(cell);
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream rs(line);
    for (std::string cell; std::getline(rs, cell, ',');) {
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc()) {
        throw ConfigFailure(path.string() + ":" + std::to_string(line_no) + ": not a number: " + cell);
      }
      row.push_back(v);
    }
    if (row.size() != t.header.size()) {
      throw ConfigFailure(path.string() + ":" + std::to_string(line_no) + ": wrong number of columns");
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

CsvTable trajectory_table(const Trajectory& traj, const msr::Params& params) {
  CsvTable t;
  t.header = {"t"};
  for (int i = 1; i <= msr::kGroups; ++i) t.header.push_back("C_" + std::to_string(i));
  t.header.insert(t.header.end(),
                  {"C_n", "rho_th", "T_r", "T_hx", "rho_ext_pcm", "dP_Pa", "Q_g_MW", "v_avg_mps"});
  for (int j = 0; j < traj.size(); ++j) {
    std::vector<double> row{traj.time[j]};
    const Vector& x = traj.states[j];
    const Vector& u = traj.inputs[j];
    row.insert(row.end(), x.data(), x.data() + x.size());
    row.push_back(u[msr::kRhoExt]);
    row.push_back(u[msr::kPressureDrop]);
    row.push_back(msr::thermal_power(x, params));
    row.push_back(msr::average_velocity(u[msr::kPressureDrop], params));
    t.add(std::move(row));
  }
  return t;
}

}  // namespace ddocp::cli

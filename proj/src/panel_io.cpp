#include "bdi/panel_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace bdi {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  return out;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

PanelData read_panel_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw invalid_panel("panel csv: empty input");
  // Strip a UTF-8 BOM if present.
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = split_csv_row(line);
  if (header.size() != 3 || header[0] != "id" || header[1] != "time" || header[2] != "count")
    throw invalid_panel("panel csv: expected header 'id,time,count'");

  std::map<std::string, std::vector<std::pair<double, std::int64_t>>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cells = split_csv_row(line);
    if (cells.size() != 3)
      throw invalid_panel("panel csv line " + std::to_string(lineno) + ": expected 3 cells");
    try {
      std::size_t pos = 0;
      const double t = std::stod(cells[1], &pos);
      if (pos != cells[1].size()) throw std::invalid_argument("trailing junk");
      pos = 0;
      const long long c = std::stoll(cells[2], &pos);
      if (pos != cells[2].size()) throw std::invalid_argument("trailing junk");
      rows[cells[0]].emplace_back(t, c);
    } catch (const std::exception&) {
      throw invalid_panel("panel csv line " + std::to_string(lineno) + ": parse error");
    }
  }

  PanelData panel;
  for (auto& [id, obs] : rows) {
    std::sort(obs.begin(), obs.end());
    ObservationSeries s;
    s.id = id;
    for (const auto& [t, c] : obs) {
      s.times.push_back(t);
      s.counts.push_back(c);
    }
    panel.individuals.push_back(std::move(s));
  }
  validate_panel(panel);
  return panel;
}

PanelData read_panel_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open panel file: " + path);
  return read_panel_csv(in);
}

void write_panel_csv(std::ostream& out, const PanelData& panel) {
  out << "id,time,count\n";
  for (const auto& s : panel.individuals)
    for (std::size_t k = 0; k < s.times.size(); ++k)
      out << s.id << ',' << format_double(s.times[k]) << ',' << s.counts[k] << '\n';
}

void write_panel_csv_file(const std::string& path, const PanelData& panel) {
  std::ofstream out(path);
  if (!out) throw error("cannot open output file: " + path);
  write_panel_csv(out, panel);
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "time,state\n";
  std::int64_t x = traj.initial_state;
  out << format_double(0.0) << ',' << x << '\n';
  for (const auto& j : traj.jumps) {
    x += j.direction;
    out << format_double(j.time) << ',' << x << '\n';
  }
  out << format_double(traj.horizon) << ',' << x << '\n';
}

void write_trajectory_csv_file(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw error("cannot open output file: " + path);
  write_trajectory_csv(out, traj);
}

}  // namespace bdi

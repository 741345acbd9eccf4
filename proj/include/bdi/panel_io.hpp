#pragma once

#include <iosfwd>
#include <string>

#include "bdi/model.hpp"

namespace bdi {

// Panel CSV format: header `id,time,count`, one row per observation.  Rows may
// arrive unsorted; they are grouped by id and sorted by time on read.
PanelData read_panel_csv(std::istream& in);
PanelData read_panel_csv_file(const std::string& path);

void write_panel_csv(std::ostream& out, const PanelData& panel);
void write_panel_csv_file(const std::string& path, const PanelData& panel);

// Debug dump of a complete path: CSV `time,state` including t=0 and t=T rows.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv_file(const std::string& path, const Trajectory& traj);

}  // namespace bdi

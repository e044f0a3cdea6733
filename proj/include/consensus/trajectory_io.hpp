#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "consensus/graph.hpp"
#include "consensus/simulate.hpp"

namespace consensus {

// Writes the trajectory table: header `t, x<i>_<k>, ..., y<e>_<k>, ...` with
// agents in external order, then fundamental edges labeled by their child's
// external id. Values are printed with 17 significant digits so a reload is
// bit-exact.
void write_trajectory_csv(const std::filesystem::path& path, const SimulationResult& result,
                          const SpanningTree& tree);

struct CsvTable {
    std::vector<std::string> header;
    Eigen::MatrixXd values;
};

// Reads a numeric CSV with one header row (the inverse of the writer).
CsvTable read_trajectory_csv(const std::filesystem::path& path);

// Emits one SVG per state component k: agent trajectories x_i,k(t) as
// polylines in a fixed 800x500 viewBox. Returns the file paths written.
std::vector<std::string> write_svg_plots(const std::filesystem::path& directory,
                                         const std::string& stem,
                                         const SimulationResult& result);

} // namespace consensus

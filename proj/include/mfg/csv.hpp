#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mfg/grid.hpp"
#include "mfg/measure.hpp"

namespace mfg::csv {

// Shortest round-trip decimal representation (byte-stable across runs).
std::string format_double(double v);

void write_rows(const std::filesystem::path& path, const std::vector<std::string>& header,
                const std::vector<std::vector<double>>& rows);

// Layout shared by flows, value fields and policies: header "t,x0,x1,...",
// one row per time node.
void write_field(const std::filesystem::path& path, const Grid& grid,
                 const std::vector<double>& values_nt_nx);

void write_flow(const std::filesystem::path& path, const MeasureFlow& flow);

// Two-column (t, threshold) file; NaN thresholds serialize as "nan".
void write_boundary(const std::filesystem::path& path, const Grid& grid,
                    const std::vector<double>& threshold);

void write_column(const std::filesystem::path& path, const std::string& header,
                  const std::vector<double>& values);

}  // namespace mfg::csv

#include "mfg/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mfg::csv {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("csv: cannot open " + path.string());
    return out;
}

}  // namespace

void write_rows(const std::filesystem::path& path, const std::vector<std::string>& header,
                const std::vector<std::vector<double>>& rows) {
    auto out = open_out(path);
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << format_double(row[i]);
        }
        out << '\n';
    }
}

void write_field(const std::filesystem::path& path, const Grid& grid,
                 const std::vector<double>& values_nt_nx) {
    auto out = open_out(path);
    out << 't';
    for (int i = 0; i < grid.nx; ++i) out << ',' << format_double(grid.x(i));
    out << '\n';
    for (int k = 0; k < grid.nt; ++k) {
        out << format_double(grid.t(k));
        for (int i = 0; i < grid.nx; ++i)
            out << ',' << format_double(values_nt_nx[static_cast<size_t>(k) * grid.nx + i]);
        out << '\n';
    }
}

void write_flow(const std::filesystem::path& path, const MeasureFlow& flow) {
    const Grid& g = flow.grid;
    std::vector<double> values;
    values.reserve(static_cast<size_t>(flow.size()) * g.nx);
    for (int k = 0; k < flow.size(); ++k)
        values.insert(values.end(), flow.at(k).density.begin(), flow.at(k).density.end());
    Grid gg = g;
    gg.nt = flow.size();
    write_field(path, gg, values);
}

void write_boundary(const std::filesystem::path& path, const Grid& grid,
                    const std::vector<double>& threshold) {
    auto out = open_out(path);
    out << "t,threshold\n";
    for (int k = 0; k < grid.nt && k < static_cast<int>(threshold.size()); ++k)
        out << format_double(grid.t(k)) << ',' << format_double(threshold[k]) << '\n';
}

void write_column(const std::filesystem::path& path, const std::string& header,
                  const std::vector<double>& values) {
    auto out = open_out(path);
    out << header << '\n';
    for (double v : values) out << format_double(v) << '\n';
}

}  // namespace mfg::csv

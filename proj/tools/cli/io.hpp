#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fdemle/likelihood.hpp"

namespace fdemle::cli {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::vector<std::size_t> lines;  // source line of each row

    // Throws ConfigError naming the available columns.
    std::size_t column_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
};

// Numeric CSV with a header row; blank lines and '#' comments are skipped.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

// Columns t, Y1..Ym; the first row holds t0 and the initial state.
Observations observations_from_csv(const CsvTable& table, int m);

std::string format_number(double v);
std::string csv_line(std::span<const double> values);

// Writes to a temporary sibling and renames it into place.
void write_atomic(const std::string& path, const std::string& content);

struct Histogram {
    double lower = 0.0;
    double width = 0.0;
    std::vector<int> counts;
};

// Freedman-Diaconis bin width 2 IQR n^{-1/3}; a single bin when the spread vanishes.
Histogram freedman_diaconis(std::vector<double> values, int max_bins = 100);

}  // namespace fdemle::cli

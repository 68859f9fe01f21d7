#include "cli/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fdemle/errors.hpp"

namespace fdemle::cli {

namespace {

std::string trim(std::string_view s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return std::string(s.substr(a, b - a + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos
                                                                                            : comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_number(const std::string& field, std::size_t line) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = first + field.size();
    if (!field.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (field.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ParseError("'" + field + "' is not a finite number", line);
    return v;
}

}  // namespace

std::size_t CsvTable::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    std::string names;
    for (const auto& h : header) names += (names.empty() ? "" : ", ") + h;
    throw ConfigError("column '" + name + "' not found (available: " + names + ")");
}

std::vector<double> CsvTable::column(const std::string& name) const {
    const auto k = column_index(name);
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[k]);
    return out;
}

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        auto fields = split(s);
        if (t.header.empty()) {
            for (const auto& f : fields)
                if (f.empty()) throw ParseError("empty column name in header", no);
            t.header = std::move(fields);
            continue;
        }
        if (fields.size() != t.header.size())
            throw ParseError("expected " + std::to_string(t.header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             no);
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(parse_number(f, no));
        t.rows.push_back(std::move(row));
        t.lines.push_back(no);
    }
    if (t.header.empty()) throw ParseError("missing header row", no == 0 ? 1 : no);
    return t;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str());
}

Observations observations_from_csv(const CsvTable& table, int m) {
    const auto tcol = table.column_index("t");
    std::vector<std::size_t> ycols;
    for (int i = 1; i <= m; ++i) ycols.push_back(table.column_index("Y" + std::to_string(i)));
    if (table.rows.size() < 2) throw ConfigError("observation file needs the initial row and at least one observation");
    Observations obs;
    obs.m = m;
    obs.t0 = table.rows[0][tcol];
    for (auto k : ycols) obs.initial.push_back(table.rows[0][k]);
    double last = obs.t0;
    for (std::size_t r = 1; r < table.rows.size(); ++r) {
        const double t = table.rows[r][tcol];
        if (!(t > last)) throw ParseError("observation times must increase", table.lines[r]);
        last = t;
        obs.times.push_back(t);
        for (auto k : ycols) obs.values.push_back(table.rows[r][k]);
    }
    return obs;
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_line(std::span<const double> values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ',';
        s += format_number(values[i]);
    }
    return s + '\n';
}

void write_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    std::error_code ec;
    if (target.has_parent_path()) {
        fs::create_directories(target.parent_path(), ec);
        if (ec) throw IoError("cannot create directory '" + target.parent_path().string() + "': " + ec.message());
    }
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw IoError("short write to '" + tmp.string() + "'");
    }
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move output into '" + path + "'");
    }
}

Histogram freedman_diaconis(std::vector<double> values, int max_bins) {
    Histogram h;
    if (values.empty()) return h;
    std::sort(values.begin(), values.end());
    const double lo = values.front(), hi = values.back();
    const std::size_t n = values.size();
    auto quantile = [&](double p) {
        const double pos = p * (n - 1);
        const auto i = static_cast<std::size_t>(pos);
        const double f = pos - i;
        return i + 1 < n ? values[i] * (1 - f) + values[i + 1] * f : values[i];
    };
    const double iqr = quantile(0.75) - quantile(0.25);
    h.lower = lo;
    if (!(iqr > 0.0) || !(hi > lo)) {
        h.width = hi > lo ? hi - lo : 1.0;
        h.counts = {static_cast<int>(n)};
        return h;
    }
    double width = 2.0 * iqr / std::cbrt(static_cast<double>(n));
    int bins = static_cast<int>(std::ceil((hi - lo) / width));
    if (bins > max_bins) {
        bins = max_bins;
        width = (hi - lo) / bins;
    }
    bins = std::max(bins, 1);
    h.width = width;
    h.counts.assign(bins, 0);
    for (double v : values) {
        int b = static_cast<int>((v - lo) / width);
        h.counts[std::clamp(b, 0, bins - 1)]++;
    }
    return h;
}

}  // namespace fdemle::cli

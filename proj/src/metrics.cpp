#include "skillforge/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace skillforge {

std::string format_metric(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

MetricsTable::MetricsTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void MetricsTable::add_row(std::vector<std::string> cells) {
    if (cells.size() != columns_.size())
        throw std::invalid_argument("metrics row has " + std::to_string(cells.size()) +
                                    " cells, expected " + std::to_string(columns_.size()));
    rows_.push_back(std::move(cells));
}

namespace {

std::string csv_escape(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

}  // namespace

void MetricsTable::write(const std::filesystem::path& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw IoError("cannot write metrics file: " + path.string());
    for (std::size_t i = 0; i < columns_.size(); ++i)
        os << (i ? "," : "") << csv_escape(columns_[i]);
    os << "\n";
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << csv_escape(row[i]);
        os << "\n";
    }
    os.flush();
    if (!os) throw IoError("failed writing metrics file: " + path.string());
}

MetricsTable MetricsTable::read(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot read metrics file: " + path.string());
    std::string line;
    MetricsTable t;
    if (!std::getline(is, line)) throw ConfigError("empty metrics file: " + path.string());
    t.columns_ = split_csv_line(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != t.columns_.size())
            throw ConfigError(path.string() + ": row has " + std::to_string(cells.size()) +
                              " cells, header has " + std::to_string(t.columns_.size()));
        t.rows_.push_back(std::move(cells));
    }
    return t;
}

std::vector<double> MetricsTable::numeric_column(const std::string& name) const {
    std::size_t idx = columns_.size();
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i] == name) idx = i;
    if (idx == columns_.size()) throw ConfigError("metrics: no column named '" + name + "'");
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& row : rows_) {
        try {
            out.push_back(std::stod(row[idx]));
        } catch (const std::exception&) {
            throw ConfigError("metrics: non-numeric cell '" + row[idx] + "' in column '" + name + "'");
        }
    }
    return out;
}

void MetricsTable::save(BlobWriter& w) const {
    w.put_u64(columns_.size());
    for (const auto& c : columns_) w.put_string(c);
    w.put_u64(rows_.size());
    for (const auto& row : rows_) {
        w.put_u64(row.size());
        for (const auto& cell : row) w.put_string(cell);
    }
}

void MetricsTable::load(BlobReader& r) {
    columns_.clear();
    rows_.clear();
    auto nc = r.get_u64();
    for (std::uint64_t i = 0; i < nc; ++i) columns_.push_back(r.get_string());
    auto nr = r.get_u64();
    for (std::uint64_t i = 0; i < nr; ++i) {
        auto n = r.get_u64();
        std::vector<std::string> row;
        row.reserve(n);
        for (std::uint64_t j = 0; j < n; ++j) row.push_back(r.get_string());
        rows_.push_back(std::move(row));
    }
}

}  // namespace skillforge

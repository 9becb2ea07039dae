#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "skillforge/checkpoint.hpp"

namespace skillforge {

/// Deterministic CSV formatting; the same values always produce the same
/// bytes.
std::string format_metric(double v);

/// An in-memory metrics table. The whole file is rewritten on every flush so
/// an interrupted-and-resumed run reproduces the uninterrupted file exactly.
class MetricsTable {
public:
    MetricsTable() = default;
    explicit MetricsTable(std::vector<std::string> columns);

    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }
    std::size_t row_count() const { return rows_.size(); }

    void add_row(std::vector<std::string> cells);
    void write(const std::filesystem::path& path) const;

    void save(BlobWriter& w) const;
    void load(BlobReader& r);

    static MetricsTable read(const std::filesystem::path& path);
    /// Numeric column by name; throws ConfigError if absent or non-numeric.
    std::vector<double> numeric_column(const std::string& name) const;

private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace skillforge

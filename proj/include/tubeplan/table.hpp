#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace tubeplan {

// Comma-separated table with a header row and a leading format-version
// comment. Doubles are printed with 17 significant digits so re-parsing is
// lossless.
class Table {
public:
    Table() = default;
    explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

    static std::string fmt(double v);
    static double to_double(const std::string& cell);

    const std::vector<std::string>& header() const { return header_; }
    std::size_t row_count() const { return rows_.size(); }
    const std::vector<std::string>& row(std::size_t i) const { return rows_[i]; }

    void add_row(std::vector<std::string> cells);
    int col(const std::string& name) const;  // -1 if absent
    const std::string& cell(std::size_t row, const std::string& name) const;
    double value(std::size_t row, const std::string& name) const;
    std::vector<double> column_values(const std::string& name) const;

    std::string to_string() const;
    void write(const std::filesystem::path& path) const;
    static Table parse(const std::string& text);
    static Table read(const std::filesystem::path& path);

    // Equality over all cells except the named columns (used to compare
    // reruns while ignoring wall-clock timing fields).
    static bool equal_ignoring(const Table& a, const Table& b,
                               const std::vector<std::string>& ignored_cols);

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace tubeplan

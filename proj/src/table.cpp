#include "tubeplan/table.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "tubeplan/errors.hpp"

namespace tubeplan {

namespace {
constexpr const char* kVersionLine = "# tubeplan-table v1";

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}
}  // namespace

std::string Table::fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double Table::to_double(const std::string& cell) {
    return std::strtod(cell.c_str(), nullptr);
}

void Table::add_row(std::vector<std::string> cells) {
    if (cells.size() != header_.size())
        throw ShapeError("table row has " + std::to_string(cells.size()) + " cells, header has " +
                         std::to_string(header_.size()));
    rows_.push_back(std::move(cells));
}

int Table::col(const std::string& name) const {
    auto it = std::find(header_.begin(), header_.end(), name);
    return it == header_.end() ? -1 : static_cast<int>(it - header_.begin());
}

const std::string& Table::cell(std::size_t row, const std::string& name) const {
    int c = col(name);
    if (c < 0) throw ShapeError("no such column: " + name);
    return rows_.at(row)[static_cast<std::size_t>(c)];
}

double Table::value(std::size_t row, const std::string& name) const {
    return to_double(cell(row, name));
}

std::vector<double> Table::column_values(const std::string& name) const {
    std::vector<double> out;
    out.reserve(rows_.size());
    for (std::size_t i = 0; i < rows_.size(); ++i) out.push_back(value(i, name));
    return out;
}

std::string Table::to_string() const {
    std::ostringstream os;
    os << kVersionLine << "\n";
    for (std::size_t i = 0; i < header_.size(); ++i)
        os << (i ? "," : "") << header_[i];
    os << "\n";
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << row[i];
        os << "\n";
    }
    return os.str();
}

void Table::write(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << to_string();
    if (!out) throw IoError("write failed: " + path.string());
}

Table Table::parse(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kVersionLine)
        throw FormatError("missing table version line");
    if (!std::getline(in, line)) throw FormatError("missing table header");
    Table t(split_csv(line));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.add_row(split_csv(line));
    }
    return t;
}

Table Table::read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return parse(os.str());
}

bool Table::equal_ignoring(const Table& a, const Table& b,
                           const std::vector<std::string>& ignored_cols) {
    if (a.header_ != b.header_ || a.rows_.size() != b.rows_.size()) return false;
    std::vector<bool> skip(a.header_.size(), false);
    for (const auto& name : ignored_cols) {
        int c = a.col(name);
        if (c >= 0) skip[static_cast<std::size_t>(c)] = true;
    }
    for (std::size_t r = 0; r < a.rows_.size(); ++r)
        for (std::size_t c = 0; c < a.header_.size(); ++c)
            if (!skip[c] && a.rows_[r][c] != b.rows_[r][c]) return false;
    return true;
}

}  // namespace tubeplan

#include "maxgrad/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace maxgrad::report {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Table::Table(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw std::invalid_argument("table needs at least one column");
}

void Table::add_row(std::vector<std::string> row) {
    if (row.size() != header_.size())
        throw std::invalid_argument("table row width does not match header");
    rows_.push_back(std::move(row));
}

std::string Table::to_string() const {
    std::vector<std::size_t> width(header_.size());
    for (std::size_t c = 0; c < header_.size(); ++c) width[c] = header_[c].size();
    for (const auto& row : rows_)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());

    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << row[c];
            if (c + 1 < row.size()) out << std::string(width[c] - row[c].size() + 2, ' ');
        }
        out << '\n';
    };
    emit(header_);
    std::size_t total = 0;
    for (std::size_t c = 0; c < width.size(); ++c) total += width[c] + (c + 1 < width.size() ? 2 : 0);
    out << std::string(total, '-') << '\n';
    for (const auto& row : rows_) emit(row);
    return out.str();
}

void write_text_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open file for writing: " + tmp);
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot move file into place: " + path);
    }
}

namespace {

void check_cell(const std::string& cell) {
    if (cell.find(',') != std::string::npos || cell.find('\n') != std::string::npos)
        throw std::invalid_argument("csv cells must not contain commas or newlines");
}

}  // namespace

std::string to_csv(const CsvFile& file) {
    std::ostringstream out;
    for (const std::string& c : file.comments) out << "# " << c << '\n';
    auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            check_cell(row[i]);
            out << row[i];
            if (i + 1 < row.size()) out << ',';
        }
        out << '\n';
    };
    if (file.header.empty()) throw std::invalid_argument("csv file needs a header row");
    emit(file.header);
    for (const auto& row : file.rows) {
        if (row.size() != file.header.size())
            throw std::invalid_argument("csv row width does not match header");
        emit(row);
    }
    return out.str();
}

void write_csv(const std::string& path, const CsvFile& file) {
    write_text_atomic(path, to_csv(file));
}

CsvFile read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open csv file: " + path);
    CsvFile file;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::size_t start = 1;
            if (start < line.size() && line[start] == ' ') ++start;
            file.comments.push_back(line.substr(start));
            continue;
        }
        std::vector<std::string> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(cell);
        if (!line.empty() && line.back() == ',') row.emplace_back();
        if (file.header.empty())
            file.header = std::move(row);
        else
            file.rows.push_back(std::move(row));
    }
    if (file.header.empty()) throw std::runtime_error("csv file has no header: " + path);
    return file;
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace maxgrad::report

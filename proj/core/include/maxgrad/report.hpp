#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace maxgrad::report {

// Formats with enough digits to round-trip a double exactly.
std::string format_double(double v);

// Simple aligned text table for terminal output.
class Table {
  public:
    explicit Table(std::vector<std::string> header);
    void add_row(std::vector<std::string> row);
    std::string to_string() const;

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

// Writes via a temp file in the same directory plus rename, so readers never
// observe a partially written file.
void write_text_atomic(const std::string& path, const std::string& content);

// CSV result files: optional '#'-prefixed provenance lines, then a header row,
// then data rows. Cells must not contain commas or newlines.
struct CsvFile {
    std::vector<std::string> comments;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

std::string to_csv(const CsvFile& file);
void write_csv(const std::string& path, const CsvFile& file);
CsvFile read_csv(const std::string& path);

// FNV-1a over a string; used to stamp result files with a config fingerprint.
std::uint64_t fnv1a64(const std::string& data);

}  // namespace maxgrad::report

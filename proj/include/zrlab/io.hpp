#pragma once

// Flat-file formats shared by the CLI, the tests and the plotting scripts:
// CSV with one fixed header row and '.' as decimal separator.

#include <charconv>
#include <concepts>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace zrlab {

/// Shortest round-trip decimal representation (locale independent).
std::string format_number(double v);

class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::vector<std::string> header);

  template <class... Ts>
  void row(const Ts&... values) {
    if (sizeof...(Ts) != columns_) throw_width_mismatch();
    bool first = true;
    ((write_cell(values, first)), ...);
    os_ << '\n';
    ++rows_;
  }

  std::size_t rows() const noexcept { return rows_; }

 private:
  template <class T>
  void write_cell(const T& v, bool& first) {
    if (!first) os_ << ',';
    first = false;
    if constexpr (std::is_floating_point_v<T>) {
      os_ << format_number(static_cast<double>(v));
    } else if constexpr (std::is_integral_v<T>) {
      os_ << v;
    } else {
      os_ << std::string_view(v);
    }
  }
  [[noreturn]] void throw_width_mismatch() const;

  std::ostream& os_;
  std::size_t columns_;
  std::size_t rows_ = 0;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column_index(std::string_view name) const;
  std::vector<double> column(std::string_view name) const;
  std::vector<std::string> text_column(std::string_view name) const;
};

CsvTable read_csv(std::istream& is);
CsvTable read_csv_file(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// Body of a CSV document (everything after the header line).
std::string csv_body(std::string_view document);
std::size_t csv_row_count(std::string_view document);

}  // namespace zrlab

#pragma once

#include "interprobe/common.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace interprobe::report {

/// Shortest decimal text that reads back to the same double ("nan", "inf").
std::string format_number(double v);

inline std::string cell(double v) { return format_number(v); }
inline std::string cell(long v) { return std::to_string(v); }
inline std::string cell(int v) { return std::to_string(v); }
inline std::string cell(std::size_t v) { return std::to_string(v); }
inline std::string cell(bool v) { return v ? "1" : "0"; }
inline std::string cell(std::string v) { return v; }
inline std::string cell(const char* v) { return v; }

/// A header plus rows of text cells; the unit of CSV output.
class Table {
 public:
  Table() = default;
  explicit Table(std::vector<std::string> columns);

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }

  /// Throws DimensionError when the cell count differs from the header.
  void add_row(std::vector<std::string> cells);

  /// Index of a column; throws ValidationError when absent.
  std::size_t column(std::string_view name) const;
  std::string text(std::size_t row, std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;

  std::string to_csv() const;
  static Table parse_csv(std::string_view text);

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);
void write_csv(const Table& table, const std::filesystem::path& path);
Table read_csv(const std::filesystem::path& path);

// --- SVG charts ---------------------------------------------------------------

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  /// Optional error bars (same length as y when present).
  std::vector<double> low;
  std::vector<double> high;
  bool dashed = false;
  bool markers_only = false;
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log2_x = false;
  /// Horizontal shaded band [low, high].
  std::optional<std::pair<double, double>> band;
  std::optional<std::pair<double, double>> y_range;
  /// Category names for an integer-indexed x axis (0, 1, ...).
  std::vector<std::string> x_categories;
  /// Draw a horizontal reference line.
  std::optional<double> reference_y;
};

std::string line_chart(const std::vector<Series>& series, const ChartOptions& options);

/// Vertical bars with optional error bars; x positions are category indices.
std::string bar_chart(const std::vector<std::string>& categories, const std::vector<double>& values,
                      const std::vector<double>& low, const std::vector<double>& high, const ChartOptions& options);

}  // namespace interprobe::report

#include "interprobe/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace interprobe::report {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Table::Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void Table::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size())
    throw DimensionError("table row", static_cast<long>(columns_.size()), static_cast<long>(cells.size()));
  rows_.push_back(std::move(cells));
}

std::size_t Table::column(std::string_view name) const {
  const auto it = std::find(columns_.begin(), columns_.end(), name);
  if (it == columns_.end()) throw ValidationError("table has no column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - columns_.begin());
}

std::string Table::text(std::size_t row, std::string_view name) const { return rows_.at(row)[column(name)]; }

double Table::number(std::size_t row, std::string_view name) const {
  const std::string t = text(row, name);
  if (t == "nan") return std::nan("");
  if (t == "inf") return INFINITY;
  if (t == "-inf") return -INFINITY;
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ValidationError("column '" + std::string(name) + "' row " + std::to_string(row) + ": not a number: " + t);
  return v;
}

namespace {

void put_cell(std::string& out, const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) {
    out += cell;
    return;
  }
  out += '"';
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

void put_line(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    put_cell(out, cells[i]);
  }
  out += '\n';
}

}  // namespace

std::string Table::to_csv() const {
  std::string out;
  put_line(out, columns_);
  for (const auto& r : rows_) put_line(out, r);
  return out;
}

Table Table::parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
      any = true;
    } else if (c == '\n') {
      if (any || !cell.empty()) {
        cells.push_back(std::move(cell));
        lines.push_back(std::move(cells));
      }
      cells.clear();
      cell.clear();
      any = false;
    } else if (c != '\r') {
      cell += c;
    }
  }
  if (quoted) throw ValidationError("csv: unterminated quote");
  if (any || !cell.empty()) {
    cells.push_back(std::move(cell));
    lines.push_back(std::move(cells));
  }
  if (lines.empty()) throw ValidationError("csv: missing header");
  Table t(lines.front());
  for (std::size_t i = 1; i < lines.size(); ++i) t.add_row(std::move(lines[i]));
  return t;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("short write to " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_csv(const Table& table, const std::filesystem::path& path) { write_text(path, table.to_csv()); }

Table read_csv(const std::filesystem::path& path) { return Table::parse_csv(read_text(path)); }

// --- SVG -------------------------------------------------------------------------------

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 420;
constexpr double kLeft = 70;
constexpr double kRight = 160;
constexpr double kTop = 40;
constexpr double kBottom = 60;

const char* const kPalette[] = {"#440154", "#3b528b", "#21908d", "#5dc863", "#fde725", "#e66101", "#b2182b", "#7f7f7f"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log2 = false;

  double t(double v) const {
    const double a = log2 ? std::log2(lo) : lo;
    const double b = log2 ? std::log2(hi) : hi;
    const double x = log2 ? std::log2(v) : v;
    return b > a ? (x - a) / (b - a) : 0.5;
  }
};

std::vector<double> nice_ticks(double lo, double hi) {
  const double span = hi - lo;
  if (!(span > 0)) return {lo};
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  std::vector<double> ticks;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * span; v += step) ticks.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  return ticks;
}

class Canvas {
 public:
  Canvas(const ChartOptions& opt, Axis x, Axis y) : opt_(opt), x_(x), y_(y) {
    out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
         << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
         << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!opt.title.empty())
      out_ << "<text x=\"" << kLeft << "\" y=\"22\" font-size=\"14\" font-weight=\"bold\">" << esc(opt.title)
           << "</text>\n";
  }

  double px(double v) const { return kLeft + x_.t(v) * (kWidth - kLeft - kRight); }
  double py(double v) const { return kHeight - kBottom - y_.t(v) * (kHeight - kTop - kBottom); }

  void band(double lo, double hi) {
    out_ << "<rect x=\"" << kLeft << "\" y=\"" << num(py(hi)) << "\" width=\"" << kWidth - kLeft - kRight
         << "\" height=\"" << num(py(lo) - py(hi)) << "\" fill=\"#d9d9d9\" opacity=\"0.6\"/>\n";
  }

  void hline(double y, const char* colour) {
    out_ << "<line x1=\"" << kLeft << "\" x2=\"" << kWidth - kRight << "\" y1=\"" << num(py(y)) << "\" y2=\""
         << num(py(y)) << "\" stroke=\"" << colour << "\" stroke-dasharray=\"4 3\"/>\n";
  }

  void axes(const std::vector<double>& xticks) {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    out_ << "<path d=\"M" << x0 << ' ' << y1 << " V" << y0 << " H" << x1 << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double t : nice_ticks(y_.lo, y_.hi)) {
      out_ << "<line x1=\"" << x0 - 4 << "\" x2=\"" << x0 << "\" y1=\"" << num(py(t)) << "\" y2=\"" << num(py(t))
           << "\" stroke=\"black\"/>\n<text x=\"" << x0 - 7 << "\" y=\"" << num(py(t) + 4)
           << "\" text-anchor=\"end\">" << num(t) << "</text>\n";
    }
    for (double t : xticks) {
      std::string label = num(t);
      if (!opt_.x_categories.empty()) {
        const auto i = static_cast<std::size_t>(std::llround(t));
        label = i < opt_.x_categories.size() ? opt_.x_categories[i] : "";
      }
      out_ << "<line x1=\"" << num(px(t)) << "\" x2=\"" << num(px(t)) << "\" y1=\"" << y0 << "\" y2=\"" << y0 + 4
           << "\" stroke=\"black\"/>\n<text x=\"" << num(px(t)) << "\" y=\"" << y0 + 18
           << "\" text-anchor=\"middle\">" << esc(label) << "</text>\n";
    }
    out_ << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 18 << "\" text-anchor=\"middle\">"
         << esc(opt_.x_label) << "</text>\n"
         << "<text transform=\"translate(18 " << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
         << esc(opt_.y_label) << "</text>\n";
  }

  void legend(std::size_t i, const std::string& name, const char* colour, bool dashed) {
    const double y = kTop + 10 + 18 * static_cast<double>(i);
    const double x = kWidth - kRight + 14;
    out_ << "<line x1=\"" << x << "\" x2=\"" << x + 22 << "\" y1=\"" << y << "\" y2=\"" << y << "\" stroke=\"" << colour
         << "\" stroke-width=\"2\"" << (dashed ? " stroke-dasharray=\"5 3\"" : "") << "/>\n<text x=\"" << x + 28
         << "\" y=\"" << y + 4 << "\">" << esc(name) << "</text>\n";
  }

  std::ostringstream& out() { return out_; }
  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  const ChartOptions& opt_;
  Axis x_;
  Axis y_;
  std::ostringstream out_;
};

Axis fit_axis(std::vector<double> values, bool log2, std::optional<std::pair<double, double>> fixed) {
  if (fixed) return {fixed->first, fixed->second, log2};
  values.erase(std::remove_if(values.begin(), values.end(), [](double v) { return !std::isfinite(v); }), values.end());
  if (values.empty()) return {0.0, 1.0, log2};
  auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  double a = *lo, b = *hi;
  if (log2) return {a, b > a ? b : a * 2, true};
  const double pad = b > a ? 0.05 * (b - a) : (a == 0 ? 1.0 : 0.05 * std::abs(a));
  return {a - pad, b + pad, false};
}

}  // namespace

std::string line_chart(const std::vector<Series>& series, const ChartOptions& options) {
  std::vector<double> xs, ys;
  for (const auto& s : series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
    ys.insert(ys.end(), s.low.begin(), s.low.end());
    ys.insert(ys.end(), s.high.begin(), s.high.end());
  }
  if (options.band) {
    ys.push_back(options.band->first);
    ys.push_back(options.band->second);
  }
  if (options.reference_y) ys.push_back(*options.reference_y);
  Axis xa = fit_axis(xs, options.log2_x, std::nullopt);
  if (!options.x_categories.empty()) xa = {-0.5, static_cast<double>(options.x_categories.size()) - 0.5, false};
  Canvas c(options, xa, fit_axis(ys, false, options.y_range));
  if (options.band) c.band(options.band->first, options.band->second);
  if (options.reference_y) c.hline(*options.reference_y, "#555555");

  std::vector<double> xticks;
  if (!options.x_categories.empty()) {
    for (std::size_t i = 0; i < options.x_categories.size(); ++i) xticks.push_back(static_cast<double>(i));
  } else if (options.log2_x) {
    for (double v = std::exp2(std::floor(std::log2(xa.lo))); v <= xa.hi * 1.0001; v *= 2)
      if (v >= xa.lo * 0.9999) xticks.push_back(v);
  } else {
    xticks = nice_ticks(xa.lo, xa.hi);
  }
  c.axes(xticks);

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* colour = kPalette[k % std::size(kPalette)];
    auto& out = c.out();
    auto finite_at = [&](std::size_t i) { return std::isfinite(s.x[i]) && std::isfinite(s.y[i]); };
    // One polyline per run of finite points.
    for (std::size_t i = 0; !s.markers_only && i < s.x.size();) {
      std::size_t j = i;
      while (j < s.x.size() && finite_at(j)) ++j;
      if (j - i > 1) {
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\""
            << (s.dashed ? " stroke-dasharray=\"5 3\"" : "") << " points=\"";
        for (std::size_t p = i; p < j; ++p) out << num(c.px(s.x[p])) << ',' << num(c.py(s.y[p])) << ' ';
        out << "\"/>\n";
      }
      i = j + 1;
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!finite_at(i)) continue;
      if (i < s.low.size() && i < s.high.size() && std::isfinite(s.low[i]) && std::isfinite(s.high[i]))
        out << "<line x1=\"" << num(c.px(s.x[i])) << "\" x2=\"" << num(c.px(s.x[i])) << "\" y1=\""
            << num(c.py(s.low[i])) << "\" y2=\"" << num(c.py(s.high[i])) << "\" stroke=\"" << colour << "\"/>\n";
      out << "<circle cx=\"" << num(c.px(s.x[i])) << "\" cy=\"" << num(c.py(s.y[i])) << "\" r=\"3\" fill=\""
          << colour << "\"/>\n";
    }
    if (!s.name.empty()) c.legend(k, s.name, colour, s.dashed);
  }
  return c.finish();
}

std::string bar_chart(const std::vector<std::string>& categories, const std::vector<double>& values,
                      const std::vector<double>& low, const std::vector<double>& high, const ChartOptions& options) {
  std::vector<double> ys(values);
  ys.insert(ys.end(), low.begin(), low.end());
  ys.insert(ys.end(), high.begin(), high.end());
  ys.push_back(0.0);
  ChartOptions opt = options;
  opt.x_categories = categories;
  const Axis xa{-0.5, static_cast<double>(categories.size()) - 0.5, false};
  Canvas c(opt, xa, fit_axis(ys, false, options.y_range));
  std::vector<double> xticks;
  for (std::size_t i = 0; i < categories.size(); ++i) xticks.push_back(static_cast<double>(i));
  c.axes(xticks);
  const double bar = 0.6 * (c.px(1.0) - c.px(0.0));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = static_cast<double>(i);
    const double top = c.py(std::max(values[i], 0.0));
    const double bottom = c.py(std::min(values[i], 0.0));
    c.out() << "<rect x=\"" << num(c.px(x) - bar / 2) << "\" y=\"" << num(top) << "\" width=\"" << num(bar)
            << "\" height=\"" << num(bottom - top) << "\" fill=\"" << kPalette[(i + 1) % std::size(kPalette)]
            << "\"/>\n";
    if (i < low.size() && i < high.size())
      c.out() << "<line x1=\"" << num(c.px(x)) << "\" x2=\"" << num(c.px(x)) << "\" y1=\"" << num(c.py(low[i]))
              << "\" y2=\"" << num(c.py(high[i])) << "\" stroke=\"black\"/>\n";
  }
  return c.finish();
}

}  // namespace interprobe::report

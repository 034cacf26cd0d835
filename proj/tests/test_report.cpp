#include "doctest.h"

#include "interprobe/report.hpp"
#include "test_util.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>

using namespace interprobe;
using namespace interprobe::report;

TEST_SUITE("report.numbers") {
  TEST_CASE("formatted doubles read back exactly") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 2000; ++i) {
      const double v = testutil::random_matrix(1, 1, rng)(0, 0) * std::pow(10.0, testutil::uniform_int(rng, -20, 20));
      const std::string s = format_number(v);
      double back = 0.0;
      std::from_chars(s.data(), s.data() + s.size(), back);
      CHECK(back == v);
    }
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(-INFINITY) == "-inf");
    CHECK(cell(true) == "1");
    CHECK(cell(7L) == "7");
  }
}

TEST_SUITE("report.table") {
  TEST_CASE("rows must match the header") {
    Table t({"a", "b"});
    t.add_row({"1", "2"});
    CHECK_THROWS_AS(t.add_row({"1"}), DimensionError);
    CHECK(t.number(0, "b") == 2.0);
    CHECK_THROWS_AS(t.column("c"), ValidationError);
  }

  TEST_CASE("CSV quoting round-trips") {
    Table t({"name", "value"});
    t.add_row({"plain", "1.5"});
    t.add_row({"with,comma", "2"});
    t.add_row({"with \"quotes\"", "nan"});
    t.add_row({"", "-inf"});
    const auto back = Table::parse_csv(t.to_csv());
    CHECK(back.columns() == t.columns());
    CHECK(back.rows() == t.rows());
    CHECK(std::isnan(back.number(2, "value")));
    CHECK(back.number(3, "value") == -INFINITY);
  }

  TEST_CASE("files are written under created parent directories") {
    const auto dir = std::filesystem::temp_directory_path() / "interprobe-report-test";
    std::filesystem::remove_all(dir);
    Table t({"x"});
    t.add_row({"3"});
    write_csv(t, dir / "nested" / "t.csv");
    CHECK(read_csv(dir / "nested" / "t.csv").rows() == t.rows());
    std::filesystem::remove_all(dir);
  }
}

TEST_SUITE("report.svg") {
  TEST_CASE("line and bar charts are self-contained SVG documents") {
    Series s{"curve", {2, 4, 8, 16}, {0.8, 0.95, 1.0, 1.0}, {0.7, 0.9, 0.99, 0.99}, {0.9, 1.0, 1.01, 1.01}};
    ChartOptions opt;
    opt.title = "a < b & c";
    opt.log2_x = true;
    opt.band = std::make_pair(0.99, 1.01);
    const auto svg = line_chart({s}, opt);
    CHECK(svg.starts_with("<svg"));
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK(svg.find("a &lt; b &amp; c") != std::string::npos);
    CHECK(svg.find("<a ") == std::string::npos);
    const auto bars = bar_chart({"x", "y"}, {0.2, 0.3}, {0.1, 0.25}, {0.3, 0.35}, {});
    CHECK(bars.starts_with("<svg"));
    CHECK(bars.find("</svg>") != std::string::npos);
  }

  TEST_CASE("non-finite points are skipped rather than emitted") {
    Series s{"gaps", {1, 2, 3}, {0.5, std::nan(""), 0.7}};
    const auto svg = line_chart({s}, {});
    CHECK(svg.find("nan") == std::string::npos);
    CHECK(svg.find("inf") == std::string::npos);
  }
}

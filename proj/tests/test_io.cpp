#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "doctest.h"

#include "cwkbmf/io.hpp"

using namespace cwkbmf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("cwkbmf_io_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path file(const std::string& name) const { return path / name; }
  static int counter;
};
int TempDir::counter = 0;

fs::path write(const TempDir& dir, const std::string& name, const std::string& text) {
  const fs::path p = dir.file(name);
  write_text_file(p, text);
  return p;
}

}  // namespace

TEST_CASE("expression csv is transposed to samples x features") {
  TempDir dir;
  const auto p = write(dir, "expr.csv",
                       "gene,s1,s2,s3\n"
                       "EGFR,1.5,2,-0.25\n"
                       "KRAS,4,5e-1,6\n");
  const FeatureMatrix fm = read_expression_csv(p);
  CHECK(fm.sample_ids == std::vector<std::string>{"s1", "s2", "s3"});
  CHECK(fm.feature_ids == std::vector<std::string>{"EGFR", "KRAS"});
  REQUIRE(fm.values.rows() == 3);
  REQUIRE(fm.values.cols() == 2);
  CHECK(fm.values(0, 0) == 1.5);
  CHECK(fm.values(2, 0) == -0.25);
  CHECK(fm.values(1, 1) == 0.5);
}

TEST_CASE("malformed expression rows and numbers raise parse errors") {
  TempDir dir;
  CHECK_THROWS_AS(read_expression_csv(dir.file("missing.csv")), ParseError);
  CHECK_THROWS_AS(read_expression_csv(write(dir, "a.csv", "gene,s1\n")), ParseError);
  CHECK_THROWS_AS(read_expression_csv(write(dir, "b.csv", "gene,s1,s2\nE,1\n")), ParseError);
  CHECK_THROWS_AS(read_expression_csv(write(dir, "c.csv", "gene,s1\nE,abc\n")), ParseError);
  CHECK_THROWS_AS(read_expression_csv(write(dir, "d.csv", "gene,s1\nE,1.5x\n")), ParseError);
}

TEST_CASE("response csv reads blanks as missing and round-trips") {
  TempDir dir;
  const auto p = write(dir, "y.csv",
                       "sample,drugA,drugB,drugC\n"
                       "s1,0.5,,1\n"
                       "s2,,-2.25,0.125\n");
  const ResponseMatrix y = read_response_csv(p);
  CHECK(y.row_ids == std::vector<std::string>{"s1", "s2"});
  CHECK(y.col_ids == std::vector<std::string>{"drugA", "drugB", "drugC"});
  CHECK(y.observed_count() == 4);
  CHECK(!y.mask(0, 1));
  CHECK(!y.mask(1, 0));
  CHECK(y.values(0, 0) == 0.5);
  CHECK(y.values(1, 1) == -2.25);

  const auto q = dir.file("y2.csv");
  write_response_csv(q, y);
  const ResponseMatrix y2 = read_response_csv(q);
  CHECK(y2.row_ids == y.row_ids);
  CHECK(y2.col_ids == y.col_ids);
  CHECK((y2.mask == y.mask).all());
  CHECK((y2.values - y.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gmt parsing keeps set order, trims fields, rejects bare lines") {
  TempDir dir;
  const auto p = write(dir, "sets.gmt",
                       "RAS_PATHWAY\tsig\tKRAS\tBRAF\t\n"
                       "\n"
                       "GROWTH\thttp://x\tMYC \t EGFR\n");
  const auto sets = read_gmt(p);
  REQUIRE(sets.size() == 2);
  CHECK(sets[0].name == "RAS_PATHWAY");
  CHECK(sets[0].description == "sig");
  CHECK(sets[0].genes == std::vector<std::string>{"KRAS", "BRAF"});
  CHECK(sets[1].genes == std::vector<std::string>{"MYC", "EGFR"});

  CHECK_THROWS_AS(read_gmt(write(dir, "bad.gmt", "NAME\tdesc\n")), ParseError);
  CHECK_THROWS_AS(read_gmt(write(dir, "empty.gmt", "\n")), ParseError);
}

TEST_CASE("name lists drop blank lines and trim whitespace") {
  TempDir dir;
  const auto p = write(dir, "names.txt", "  alpha\t\n\nbeta\r\n   \ngamma");
  CHECK(read_name_list(p) == std::vector<std::string>{"alpha", "beta", "gamma"});
}

TEST_CASE("labeled csv writes exact doubles") {
  TempDir dir;
  Matrix m(2, 2);
  m << 0.1, 1.0 / 3.0, -7, 1e-300;
  const auto p = dir.file("m.csv");
  write_labeled_csv(p, m, {"r1", "r2"}, {"c1", "c2"}, "corner");
  const FeatureMatrix back = read_expression_csv(p);  // same grid layout
  CHECK(back.values(0, 0) == 0.1);
  CHECK(back.values(1, 0) == 1.0 / 3.0);
  CHECK(back.values(0, 1) == -7.0);
  CHECK(back.values(1, 1) == 1e-300);

  CHECK_THROWS_AS(write_labeled_csv(p, m, {"r1"}, {"c1", "c2"}, "x"), DimensionError);
}

TEST_CASE("format_double round-trips exactly and stays short") {
  for (const double x : {0.1, 1.0 / 3.0, 2.5, -0.0, 1e17, 6.02e23, 1.0000000000000002}) {
    CHECK(std::strtod(format_double(x).c_str(), nullptr) == x);
  }
  CHECK(format_double(2.5) == "2.5");
  CHECK(format_double(100.0) == "100");
}

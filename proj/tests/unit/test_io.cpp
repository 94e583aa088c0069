#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hcdd/io.hpp"

using namespace hcdd;

namespace {
std::filesystem::path tmp(const std::string& name) { return std::filesystem::temp_directory_path() / ("hcdd_" + name); }
}  // namespace

TEST_CASE("csv quoting") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("EH+Rot;Rand") == "EH+Rot;Rand");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_escape("two\nlines") == "\"two\nlines\"");
  std::ostringstream out;
  write_csv_row(out, {"x", "1,5", ""});
  CHECK(out.str() == "x,\"1,5\",\r\n");
}

TEST_CASE("PGM export") {
  const auto m = build_fine_mesh(5, 3);
  SUBCASE("constant field gives equal pixels") {
    std::vector<double> f(15, 7.0);
    export_field_image(m, f, tmp("const.pgm"));
    const auto img = read_pgm(tmp("const.pgm"));
    CHECK(img.width == 5);
    CHECK(img.height == 3);
    for (auto p : img.pixels) CHECK(p == img.pixels[0]);
  }
  SUBCASE("round trip reproduces the quantized field") {
    std::vector<double> f(15);
    for (int e = 0; e < 15; ++e) f[e] = 0.1 * e * e;
    export_field_image(m, f, tmp("ramp.pgm"));
    const auto img = read_pgm(tmp("ramp.pgm"));
    CHECK(img.pixels == quantize_field(m, f));
    // Top-left pixel is element (0, ny-1); extremes map to 0 and 255.
    CHECK(img.pixels[0] == quantize_field(m, f)[0]);
    CHECK(img.pixels[4] == 255);
    CHECK(img.pixels[10] == 0);
  }
  CHECK_THROWS(export_field_image(m, std::vector<double>(14, 1.0), tmp("bad.pgm")));
  CHECK_THROWS(export_field_image(m, std::vector<double>(15, 1.0), "/nonexistent-dir/x.pgm"));
}

TEST_CASE("coefficient text round trip is exact") {
  const auto m = build_fine_mesh(4, 2);
  std::vector<double> f{1e-6, 1.0, 0.1, 1.0 / 3.0, 2.5e-300, 7, 8, 9};
  write_coefficient_text(m, f, tmp("coeff.txt"));
  int nx = 0, ny = 0;
  const auto back = read_coefficient_text(tmp("coeff.txt"), nx, ny);
  CHECK(nx == 4);
  CHECK(ny == 2);
  CHECK(back == f);
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125})
    CHECK(std::stod(format_double(v)) == v);
}

#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "hcdd/grid.hpp"

namespace hcdd {

using CsvRow = std::vector<std::string>;

/// RFC 4180: fields containing a comma, quote, CR or LF are quoted and
/// embedded quotes doubled. Lines end with CRLF.
std::string csv_escape(const std::string& field);
void write_csv_row(std::ostream& out, const CsvRow& row);
void write_csv(const std::filesystem::path& path, const CsvRow& header, const std::vector<CsvRow>& rows);

/// 8-bit levels, row 0 is the top of the domain. A constant field maps to 0.
std::vector<std::uint8_t> quantize_field(const FineMesh& mesh, std::span<const double> field);

/// Binary PGM (P5), one pixel per element.
void export_field_image(const FineMesh& mesh, std::span<const double> field, const std::filesystem::path& path);

struct GreyImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};
GreyImage read_pgm(const std::filesystem::path& path);

/// Plain text: first line `nx ny`, then ny rows of nx values, bottom row first.
void write_coefficient_text(const FineMesh& mesh, std::span<const double> field, const std::filesystem::path& path);
std::vector<double> read_coefficient_text(const std::filesystem::path& path, int& nx, int& ny);

/// Shortest decimal form that reads back to the same double.
std::string format_double(double v);

}  // namespace hcdd

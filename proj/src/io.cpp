#include "hcdd/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hcdd {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_csv_row(std::ostream& out, const CsvRow& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(row[i]);
  }
  out << "\r\n";
}

void write_csv(const std::filesystem::path& path, const CsvRow& header, const std::vector<CsvRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv_row(out, header);
  for (const auto& r : rows) write_csv_row(out, r);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<std::uint8_t> quantize_field(const FineMesh& mesh, std::span<const double> field) {
  if (static_cast<int>(field.size()) != mesh.num_elements())
    throw std::invalid_argument("field size does not match the mesh");
  const auto [lo, hi] = std::minmax_element(field.begin(), field.end());
  const double range = *hi - *lo;
  std::vector<std::uint8_t> px(field.size());
  for (int row = 0; row < mesh.ny; ++row) {
    const int j = mesh.ny - 1 - row;
    for (int i = 0; i < mesh.nx; ++i) {
      const double t = range > 0.0 ? (field[mesh.element(i, j)] - *lo) / range : 0.0;
      px[static_cast<std::size_t>(row) * mesh.nx + i] = static_cast<std::uint8_t>(std::lround(255.0 * t));
    }
  }
  return px;
}

void export_field_image(const FineMesh& mesh, std::span<const double> field, const std::filesystem::path& path) {
  const auto px = quantize_field(mesh, field);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << mesh.nx << ' ' << mesh.ny << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

// Next header token, skipping whitespace and comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  for (;;) {
    const int c = in.get();
    if (c == EOF) break;
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok += static_cast<char>(c);
  }
  return tok;
}

}  // namespace

GreyImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  if (pgm_token(in) != "P5") throw std::runtime_error("not a binary PGM: " + path.string());
  GreyImage img;
  img.width = std::stoi(pgm_token(in));
  img.height = std::stoi(pgm_token(in));
  if (std::stoi(pgm_token(in)) != 255) throw std::runtime_error("only 8-bit PGM is supported");
  img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
  if (!in) throw std::runtime_error("truncated PGM: " + path.string());
  return img;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_coefficient_text(const FineMesh& mesh, std::span<const double> field, const std::filesystem::path& path) {
  if (static_cast<int>(field.size()) != mesh.num_elements())
    throw std::invalid_argument("field size does not match the mesh");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << mesh.nx << ' ' << mesh.ny << '\n';
  for (int j = 0; j < mesh.ny; ++j) {
    for (int i = 0; i < mesh.nx; ++i) out << (i ? " " : "") << format_double(field[mesh.element(i, j)]);
    out << '\n';
  }
}

std::vector<double> read_coefficient_text(const std::filesystem::path& path, int& nx, int& ny) {
  std::ifstream in(path);
  if (!in || !(in >> nx >> ny) || nx < 1 || ny < 1) throw std::runtime_error("bad coefficient file " + path.string());
  std::vector<double> v(static_cast<std::size_t>(nx) * ny);
  for (double& x : v)
    if (!(in >> x)) throw std::runtime_error("truncated coefficient file " + path.string());
  return v;
}

}  // namespace hcdd

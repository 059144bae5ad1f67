#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "oamsim/core/error.hpp"
#include "oamsim/core/field.hpp"
#include "oamsim/core/image.hpp"
#include "oamsim/core/units.hpp"

namespace oamsim::io {

using Metadata = std::vector<std::pair<std::string, std::string>>;

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

/// Sidecar metadata: one `key = value` per line, `#` comments allowed.
inline void write_sidecar(const std::filesystem::path& path, const Metadata& meta) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  for (const auto& [key, value] : meta) out << key << " = " << value << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::map<std::string, std::string> read_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::map<std::string, std::string> meta;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw IoError("malformed sidecar line: " + line);
    meta[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return meta;
}

namespace detail {

inline void write_le_double(std::ostream& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  char bytes[8];
  std::memcpy(bytes, &bits, 8);
  out.write(bytes, 8);
}

inline double read_le_double(std::istream& in) {
  char bytes[8];
  in.read(bytes, 8);
  std::uint64_t bits = 0;
  std::memcpy(&bits, bytes, 8);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
  return std::bit_cast<double>(bits);
}

inline std::string require(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw IoError("sidecar missing key: " + key);
  return it->second;
}

}  // namespace detail

/// Binary field dump.  Writes `<base>.meta` (sidecar) then `<base>.bin`:
/// little-endian float64 (re, im) pairs, row-major with y fastest, values in m^-1.
inline void write_field_dump(const std::filesystem::path& base, const TransverseField& field,
                             const UnitSystem& units, int component) {
  const auto& g = field.grid();
  write_sidecar(std::filesystem::path(base).concat(".meta"),
                {{"format", "oamsim-field"},
                 {"version", "1"},
                 {"n_y", std::to_string(g.n_y())},
                 {"n_z", std::to_string(g.n_z())},
                 {"extent_y_m", format_double(units.length_to_si(g.extent_y()))},
                 {"extent_z_m", format_double(units.length_to_si(g.extent_z()))},
                 {"length_unit_m", format_double(units.length_unit_m())},
                 {"value_units", "m^-1"},
                 {"dtype", "complex128-le (re, im)"},
                 {"layout", "row-major, y fastest"},
                 {"component", std::to_string(component)}});
  const auto bin = std::filesystem::path(base).concat(".bin");
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw IoError("cannot write " + bin.string());
  for (const auto& v : field.values()) {
    detail::write_le_double(out, units.amplitude_to_si(v.real()));
    detail::write_le_double(out, units.amplitude_to_si(v.imag()));
  }
  if (!out) throw IoError("write failed: " + bin.string());
}

struct FieldDump {
  TransverseField field;  // internal units of the dump's own length unit
  int component = 0;
  double length_unit_m = 1.0;
};

inline FieldDump read_field_dump(const std::filesystem::path& base) {
  const auto meta = read_sidecar(std::filesystem::path(base).concat(".meta"));
  if (detail::require(meta, "format") != "oamsim-field") throw IoError("not an oamsim field dump");
  FieldDump dump;
  try {
    dump.length_unit_m = std::stod(detail::require(meta, "length_unit_m"));
    const auto n_y = std::stoul(detail::require(meta, "n_y"));
    const auto n_z = std::stoul(detail::require(meta, "n_z"));
    const double ey = std::stod(detail::require(meta, "extent_y_m")) / dump.length_unit_m;
    const double ez = std::stod(detail::require(meta, "extent_z_m")) / dump.length_unit_m;
    dump.component = std::stoi(detail::require(meta, "component"));
    dump.field = TransverseField(Grid2D(n_y, n_z, ey, ez));
  } catch (const std::logic_error& e) {
    throw IoError(std::string("bad field sidecar: ") + e.what());
  }
  const auto bin = std::filesystem::path(base).concat(".bin");
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw IoError("cannot read " + bin.string());
  for (auto& v : dump.field.values()) {
    const double re = detail::read_le_double(in);
    const double im = detail::read_le_double(in);
    v = Complex(re, im) * dump.length_unit_m;
  }
  if (!in) throw IoError("truncated field dump: " + bin.string());
  return dump;
}

/// 16-bit binary PGM plus `<path>.meta`.  Rows are written from +z (top) to -z.
inline void write_pgm16(const std::filesystem::path& path, const ImagePlane& image,
                        const UnitSystem& units, Metadata extra = {}) {
  if (image.n_y == 0 || image.n_z == 0) throw InvalidArgument("empty image");
  const double peak = image.max_value();
  const double scale = peak > 0.0 ? peak / 65535.0 : 1.0;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << image.n_y << ' ' << image.n_z << "\n65535\n";
  for (std::size_t r = 0; r < image.n_z; ++r) {
    const std::size_t iz = image.n_z - 1 - r;
    for (std::size_t iy = 0; iy < image.n_y; ++iy) {
      const double v = std::clamp(image.at(iy, iz) / scale, 0.0, 65535.0);
      const auto count = static_cast<std::uint16_t>(std::lround(v));
      const char bytes[2] = {static_cast<char>(count >> 8), static_cast<char>(count & 0xff)};
      out.write(bytes, 2);
    }
  }
  if (!out) throw IoError("write failed: " + path.string());
  Metadata meta{{"format", "pgm16"},
                {"label", image.label},
                {"width_pixels_y", std::to_string(image.n_y)},
                {"height_pixels_z", std::to_string(image.n_z)},
                {"pitch_m", format_double(units.length_to_si(image.pitch))},
                {"value_per_count", format_double(scale)},
                {"row_order", "top row is +z"}};
  meta.insert(meta.end(), extra.begin(), extra.end());
  write_sidecar(std::filesystem::path(path).concat(".meta"), meta);
}

/// Reads back the raw 16-bit counts of a PGM written by write_pgm16.
inline std::vector<std::uint16_t> read_pgm16_counts(const std::filesystem::path& path,
                                                    std::size_t& width, std::size_t& height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::string magic;
  std::size_t maxval = 0;
  in >> magic >> width >> height >> maxval;
  in.get();
  if (magic != "P5" || maxval != 65535) throw IoError("not a 16-bit PGM: " + path.string());
  std::vector<std::uint16_t> counts(width * height);
  for (auto& c : counts) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    c = static_cast<std::uint16_t>((b[0] << 8) | b[1]);
  }
  if (!in) throw IoError("truncated PGM: " + path.string());
  return counts;
}

}  // namespace oamsim::io

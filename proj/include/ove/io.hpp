#pragma once

// File formats: "ivol-1" index volumes and "cfield-1" complex fields (raw
// little-endian payload plus a key = value sidecar at path + ".meta"), P5
// graymap renders and CSV tables. Every file is written to a temporary name
// and renamed into place.

#include "ove/error.hpp"
#include "ove/interconnect.hpp"
#include "ove/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace ove::io
{

inline constexpr std::string_view volume_format = "ivol-1";
inline constexpr std::string_view field_format = "cfield-1";

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v)
{
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_number(std::int64_t v) { return std::to_string(v); }
inline std::string format_number(int v) { return std::to_string(v); }

inline bool parse_double(std::string_view s, double& out)
{
  if (s == "nan") {
    out = std::nan("");
    return true;
  }
  if (s == "inf" || s == "-inf") {
    out = s[0] == '-' ? -INFINITY : INFINITY;
    return true;
  }
  if (!s.empty() && s.front() == '+')
    s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && !s.empty();
}

inline bool parse_int(std::string_view s, long long& out)
{
  if (!s.empty() && s.front() == '+')
    s.remove_prefix(1);
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && !s.empty();
}

inline void write_atomic(const std::filesystem::path& path, std::string_view bytes)
{
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw FormatError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out)
      throw FormatError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec)
    throw FormatError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& path)
{
  auto p = path;
  p += ".meta";
  return p;
}

using Sidecar = std::map<std::string, std::string>;

inline Sidecar parse_sidecar(const std::string& text, const std::string& where)
{
  Sidecar meta;
  std::istringstream in(text);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#')
      continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(where + ": line " + std::to_string(n) + " is not key = value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    meta[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return meta;
}

inline const std::string& meta_get(const Sidecar& meta, const std::string& key, const std::string& where)
{
  auto it = meta.find(key);
  if (it == meta.end())
    throw FormatError(where + ": missing key '" + key + "'");
  return it->second;
}

inline double meta_double(const Sidecar& meta, const std::string& key, const std::string& where)
{
  double v;
  if (!parse_double(meta_get(meta, key, where), v))
    throw FormatError(where + ": key '" + key + "' is not a number");
  return v;
}

inline int meta_int(const Sidecar& meta, const std::string& key, const std::string& where)
{
  long long v;
  if (!parse_int(meta_get(meta, key, where), v) || v < 0 || v > (1LL << 30))
    throw FormatError(where + ": key '" + key + "' is not a valid count");
  return static_cast<int>(v);
}

inline void check_version(const Sidecar& meta, std::string_view expected, const std::string& where)
{
  const auto& v = meta_get(meta, "format", where);
  if (v != expected)
    throw FormatError(where + ": unsupported format version '" + v + "' (expected " + std::string(expected) + ")");
}

template <class T> void put_le(std::string& out, T value)
{
  static_assert(std::is_trivially_copyable_v<T>);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(T); ++b)
    out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

template <class T> T get_le(const char* p)
{
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b)
    bits |= static_cast<U>(static_cast<unsigned char>(p[b])) << (8 * b);
  return std::bit_cast<T>(bits);
}

inline std::string volume_sidecar(const IndexVolume& v)
{
  const auto& g = v.grid();
  std::ostringstream s;
  s << "format = " << volume_format << '\n'
    << "nx = " << g.nx << '\n'
    << "ny = " << g.ny << '\n'
    << "nz = " << v.nz() << '\n'
    << "dx = " << format_number(g.dx) << '\n'
    << "dy = " << format_number(g.dy) << '\n'
    << "dz = " << format_number(v.dz()) << '\n'
    << "n0 = " << format_number(v.n0()) << '\n'
    << "dn_min = " << format_number(v.dn_min()) << '\n'
    << "dn_max = " << format_number(v.dn_max()) << '\n';
  return s.str();
}

inline std::string volume_payload(const IndexVolume& v)
{
  std::string out;
  out.reserve(v.voxel_count() * 4);
  for (double x : v.dn())
    put_le(out, static_cast<float>(x));
  return out;
}

inline void export_volume(const IndexVolume& v, const std::filesystem::path& path)
{
  write_atomic(path, volume_payload(v));
  write_atomic(sidecar_path(path), volume_sidecar(v));
}

inline IndexVolume import_volume(const std::filesystem::path& path)
{
  const std::string where = path.string();
  const auto meta = parse_sidecar(read_file(sidecar_path(path)), sidecar_path(path).string());
  check_version(meta, volume_format, where);
  Grid2D g{meta_int(meta, "nx", where), meta_int(meta, "ny", where), meta_double(meta, "dx", where),
           meta_double(meta, "dy", where)};
  const int nz = meta_int(meta, "nz", where);
  const double dz = meta_double(meta, "dz", where);
  const double n0 = meta_double(meta, "n0", where);
  const double lo = meta_double(meta, "dn_min", where);
  const double hi = meta_double(meta, "dn_max", where);
  const std::string payload = read_file(path);
  const std::size_t count = g.size() * static_cast<std::size_t>(nz);
  if (payload.size() != count * 4)
    throw FormatError(where + ": size mismatch, payload has " + std::to_string(payload.size()) +
                      " bytes but the sidecar implies " + std::to_string(count * 4));
  IndexVolume vol;
  try {
    vol = IndexVolume(g, nz, dz, n0, lo, hi);
  } catch (const InvalidArgument& e) {
    throw FormatError(where + ": " + e.what());
  }
  // bounds are checked at payload precision, then voxels are clamped into the double bounds
  const float flo = static_cast<float>(lo), fhi = static_cast<float>(hi);
  auto dn = vol.dn();
  for (std::size_t k = 0; k < count; ++k) {
    const float f = get_le<float>(payload.data() + 4 * k);
    if (!std::isfinite(f))
      throw FormatError(where + ": non-finite voxel " + std::to_string(k));
    if (f < flo || f > fhi)
      throw FormatError(where + ": bound violation at voxel " + std::to_string(k) + " (" + format_number(f) +
                        " outside [" + format_number(lo) + ", " + format_number(hi) + "])");
    dn[k] = std::clamp(static_cast<double>(f), lo, hi);
  }
  return vol;
}

inline void export_field(const ComplexField& f, const std::filesystem::path& path)
{
  std::string payload;
  payload.reserve(f.values().size() * 16);
  for (const auto& v : f.values()) {
    put_le(payload, v.real());
    put_le(payload, v.imag());
  }
  const auto& g = f.grid();
  std::ostringstream s;
  s << "format = " << field_format << '\n'
    << "nx = " << g.nx << '\n'
    << "ny = " << g.ny << '\n'
    << "dx = " << format_number(g.dx) << '\n'
    << "dy = " << format_number(g.dy) << '\n'
    << "wavelength_um = " << format_number(f.wavelength()) << '\n';
  write_atomic(path, payload);
  write_atomic(sidecar_path(path), s.str());
}

inline ComplexField import_field(const std::filesystem::path& path)
{
  const std::string where = path.string();
  const auto meta = parse_sidecar(read_file(sidecar_path(path)), sidecar_path(path).string());
  check_version(meta, field_format, where);
  Grid2D g{meta_int(meta, "nx", where), meta_int(meta, "ny", where), meta_double(meta, "dx", where),
           meta_double(meta, "dy", where)};
  const double wl = meta_double(meta, "wavelength_um", where);
  const std::string payload = read_file(path);
  if (payload.size() != g.size() * 16)
    throw FormatError(where + ": size mismatch, payload has " + std::to_string(payload.size()) +
                      " bytes but the sidecar implies " + std::to_string(g.size() * 16));
  ComplexField f;
  try {
    f = ComplexField(g, wl);
  } catch (const InvalidArgument& e) {
    throw FormatError(where + ": " + e.what());
  }
  auto vals = f.values();
  for (std::size_t k = 0; k < vals.size(); ++k) {
    const double re = get_le<double>(payload.data() + 16 * k);
    const double im = get_le<double>(payload.data() + 16 * k + 8);
    if (!std::isfinite(re) || !std::isfinite(im))
      throw FormatError(where + ": non-finite sample " + std::to_string(k));
    vals[k] = {re, im};
  }
  return f;
}

/// 8-bit P5 graymap of |field| scaled so the peak is 255; image row j is grid row j.
inline std::string render_pgm(const ComplexField& f)
{
  double peak = 0.0;
  for (const auto& v : f.values())
    peak = std::max(peak, std::abs(v));
  if (!(peak > 0.0) || !std::isfinite(peak))
    throw InvalidArgument("degenerate field");
  const auto& g = f.grid();
  std::string out = "P5\n" + std::to_string(g.nx) + " " + std::to_string(g.ny) + "\n255\n";
  for (const auto& v : f.values())
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(255.0 * std::abs(v) / peak))));
  return out;
}

inline void render_field(const ComplexField& f, const std::filesystem::path& path)
{
  write_atomic(path, render_pgm(f));
}

/// Reads a binary (P5) or ASCII (P2) graymap with maxval <= 255.
inline Image read_pgm(const std::filesystem::path& path)
{
  const std::string data = read_file(path);
  const std::string where = path.string();
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < data.size()) {
      if (data[pos] == '#') {
        while (pos < data.size() && data[pos] != '\n')
          ++pos;
      } else if (std::isspace(static_cast<unsigned char>(data[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos])) && data[pos] != '#')
      ++pos;
    return data.substr(start, pos - start);
  };
  auto number = [&]() {
    long long v;
    if (!parse_int(token(), v) || v <= 0 || v > (1 << 20))
      throw FormatError(where + ": malformed graymap header");
    return static_cast<int>(v);
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P2")
    throw FormatError(where + ": not a graymap (magic '" + magic + "')");
  Image img;
  img.cols = number();
  img.rows = number();
  const int maxval = number();
  if (maxval > 255)
    throw FormatError(where + ": only 8-bit graymaps are supported");
  const std::size_t n = static_cast<std::size_t>(img.rows) * img.cols;
  img.pixels.resize(n);
  if (magic == "P5") {
    ++pos; // single whitespace after maxval
    if (data.size() < pos + n)
      throw FormatError(where + ": truncated graymap payload");
    for (std::size_t k = 0; k < n; ++k)
      img.pixels[k] = static_cast<unsigned char>(data[pos + k]);
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      long long v;
      if (!parse_int(token(), v) || v < 0 || v > maxval)
        throw FormatError(where + ": malformed graymap sample");
      img.pixels[k] = static_cast<double>(v);
    }
  }
  return img;
}

inline std::string write_pgm(const Image& img)
{
  std::string out = "P5\n" + std::to_string(img.cols) + " " + std::to_string(img.rows) + "\n255\n";
  for (double v : img.pixels)
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L))));
  return out;
}

/// CSV table with a header row; cells are written verbatim.
class Csv
{
public:
  explicit Csv(std::vector<std::string> header) : columns_(header.size()) { add(header); }

  template <class... Cells> void row(const Cells&... cells)
  {
    std::vector<std::string> r{cell(cells)...};
    if (r.size() != columns_)
      throw InvalidArgument("CSV row width does not match header");
    add(r);
  }

  const std::string& text() const { return text_; }
  void write(const std::filesystem::path& path) const { write_atomic(path, text_); }

private:
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(std::string_view s) { return std::string(s); }
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::int64_t v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }

  void add(const std::vector<std::string>& r)
  {
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (k)
        text_ += ',';
      text_ += r[k];
    }
    text_ += '\n';
  }

  std::size_t columns_;
  std::string text_;
};

} // namespace ove::io

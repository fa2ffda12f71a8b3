#pragma once

/// @file field_io.hpp
/// @brief F2D text format for node-centered fields.
///
///   F2D <nx> <ny> <x0> <x1> <y0> <y1> <scalar|vector>
///   one node per line, y rows outer, x inner; vector nodes carry two values.
///
/// '#' starts a comment anywhere on a line. Numbers are written with 17
/// significant digits so that read followed by write reproduces the bytes.

#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <variant>
#include <vector>

#include <unistd.h>

#include "selfsim/errors.hpp"
#include "selfsim/field.hpp"

namespace selfsim {

using AnyField = std::variant<ScalarField, VectorField>;

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes text to `path` via a sibling temporary file and rename, so readers
/// never observe a partially written file.
inline void write_text_atomic(const std::filesystem::path& path, std::string_view text) {
  namespace fs = std::filesystem;
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail(ErrorKind::Io, "cannot open '" + tmp.string() + "' for writing");
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    os.flush();
    if (!os) {
      os.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      fail(ErrorKind::Io, "write to '" + tmp.string() + "' failed");
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignore;
    fs::remove(tmp, ignore);
    fail(ErrorKind::Io, "cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

namespace detail {

inline std::string f2d_header(const Grid2D& g, const char* kind) {
  std::string s = "F2D " + std::to_string(g.nx()) + " " + std::to_string(g.ny());
  for (double b : {g.x0(), g.x1(), g.y0(), g.y1()}) s += " " + format_double(b);
  s += " ";
  s += kind;
  s += "\n";
  return s;
}

inline std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
  std::size_t k = 0;
  while (k < line.size()) {
    while (k < line.size() && std::isspace(static_cast<unsigned char>(line[k]))) ++k;
    std::size_t e = k;
    while (e < line.size() && !std::isspace(static_cast<unsigned char>(line[e]))) ++e;
    if (e > k) out.push_back(line.substr(k, e - k));
    k = e;
  }
  return out;
}

[[noreturn]] inline void format_error(const std::string& source, std::size_t line,
                                      const std::string& msg) {
  fail(ErrorKind::Format, source + ":" + std::to_string(line) + ": " + msg);
}

template <class T>
T parse_number(std::string_view tok, const std::string& source, std::size_t line) {
  T v{};
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    format_error(source, line, "cannot parse number '" + std::string(tok) + "'");
  }
  return v;
}

}  // namespace detail

inline std::string to_f2d(const ScalarField& f) {
  std::string s = detail::f2d_header(f.grid(), "scalar");
  s.reserve(s.size() + f.size() * 25);
  for (double v : f.values()) {
    s += format_double(v);
    s += '\n';
  }
  return s;
}

inline std::string to_f2d(const VectorField& f) {
  std::string s = detail::f2d_header(f.grid(), "vector");
  s.reserve(s.size() + f.u.size() * 50);
  for (std::size_t k = 0; k < f.u.size(); ++k) {
    s += format_double(f.u[k]);
    s += ' ';
    s += format_double(f.v[k]);
    s += '\n';
  }
  return s;
}

/// Parses F2D text. `source` names the origin in error messages.
inline AnyField parse_f2d(std::string_view text, const std::string& source = "<f2d>") {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto next_line = [&](std::string_view& out) {
    while (pos < text.size()) {
      std::size_t e = text.find('\n', pos);
      if (e == std::string_view::npos) e = text.size();
      out = text.substr(pos, e - pos);
      pos = e + 1;
      ++line_no;
      if (!detail::tokens(out).empty()) return true;
    }
    return false;
  };

  std::string_view line;
  if (!next_line(line)) detail::format_error(source, line_no == 0 ? 1 : line_no, "missing F2D header");
  auto head = detail::tokens(line);
  if (head.size() != 8 || head[0] != "F2D") {
    detail::format_error(source, line_no,
                         "header must read 'F2D nx ny x0 x1 y0 y1 scalar|vector'");
  }
  const int nx = detail::parse_number<int>(head[1], source, line_no);
  const int ny = detail::parse_number<int>(head[2], source, line_no);
  double b[4];
  for (int k = 0; k < 4; ++k) b[k] = detail::parse_number<double>(head[3 + k], source, line_no);
  const bool vector = head[7] == "vector";
  if (!vector && head[7] != "scalar") {
    detail::format_error(source, line_no, "field kind must be scalar or vector");
  }
  Grid2D grid;
  try {
    grid = Grid2D(b[0], b[1], b[2], b[3], nx, ny);
  } catch (const Error& e) {
    detail::format_error(source, line_no, e.what());
  }

  const std::size_t per_node = vector ? 2 : 1;
  std::vector<double> u, v;
  u.reserve(grid.size());
  if (vector) v.reserve(grid.size());
  while (next_line(line)) {
    auto tok = detail::tokens(line);
    if (tok.size() != per_node) {
      detail::format_error(source, line_no,
                           "expected " + std::to_string(per_node) + " value(s) per node");
    }
    if (u.size() == grid.size()) {
      fail(ErrorKind::DimensionMismatch, source + ":" + std::to_string(line_no) +
                                             ": more nodes than the header declares");
    }
    u.push_back(detail::parse_number<double>(tok[0], source, line_no));
    if (vector) v.push_back(detail::parse_number<double>(tok[1], source, line_no));
  }
  if (u.size() != grid.size()) {
    fail(ErrorKind::DimensionMismatch, source + ": header declares " + std::to_string(grid.size()) +
                                           " nodes, found " + std::to_string(u.size()));
  }
  if (vector) return VectorField(ScalarField(grid, std::move(u)), ScalarField(grid, std::move(v)));
  return ScalarField(grid, std::move(u));
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::Io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

inline AnyField read_field(const std::filesystem::path& path) {
  return parse_f2d(read_text(path), path.string());
}

inline ScalarField read_scalar_field(const std::filesystem::path& path) {
  AnyField f = read_field(path);
  if (auto* s = std::get_if<ScalarField>(&f)) return std::move(*s);
  fail(ErrorKind::Format, path.string() + ": expected a scalar field");
}

inline VectorField read_vector_field(const std::filesystem::path& path) {
  AnyField f = read_field(path);
  if (auto* v = std::get_if<VectorField>(&f)) return std::move(*v);
  fail(ErrorKind::Format, path.string() + ": expected a vector field");
}

inline void write_field(const ScalarField& f, const std::filesystem::path& path) {
  write_text_atomic(path, to_f2d(f));
}

inline void write_field(const VectorField& f, const std::filesystem::path& path) {
  write_text_atomic(path, to_f2d(f));
}

}  // namespace selfsim

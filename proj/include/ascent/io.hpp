#pragma once

#include <cctype>
#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "ascent/error.hpp"
#include "ascent/mesh.hpp"
#include "ascent/point_cloud.hpp"

namespace ascent::io {

namespace detail {

inline std::string_view strip_comment(std::string_view line) {
  if (auto pos = line.find('#'); pos != std::string_view::npos) line = line.substr(0, pos);
  return line;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t start = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

template <class T>
bool parse_number(std::string_view tok, T& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path.string() + "'");
  return out;
}

inline void append_double(std::string& buf, double v) {
  char tmp[32];
  const auto [ptr, ec] = std::to_chars(tmp, tmp + sizeof(tmp), v);
  buf.append(tmp, ptr);
}

}  // namespace detail

/// Reads "x y z" lines; '#' starts a comment, blank lines are skipped.
inline PointCloud read_xyz(std::istream& in, const std::string& name = "<stream>") {
  PointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto toks = detail::split_ws(detail::strip_comment(line));
    if (toks.empty()) continue;
    Vec3 p;
    bool ok = toks.size() == 3;
    for (std::size_t k = 0; ok && k < 3; ++k) ok = detail::parse_number(toks[k], p[k]);
    if (!ok || !p.allFinite())
      throw InvalidInput(name + ":" + std::to_string(lineno) + ": expected 3 finite numbers");
    cloud.points.push_back(p);
  }
  if (cloud.empty()) throw InvalidInput(name + ": no points");
  return cloud;
}

inline PointCloud read_xyz(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_xyz(in, path.string());
}

/// Shortest round-trip decimal output, one point per line.
inline void write_xyz(std::ostream& out, const PointCloud& cloud) {
  std::string buf;
  for (const auto& p : cloud.points) {
    detail::append_double(buf, p.x());
    buf += ' ';
    detail::append_double(buf, p.y());
    buf += ' ';
    detail::append_double(buf, p.z());
    buf += '\n';
  }
  out << buf;
}

inline void write_xyz(const std::filesystem::path& path, const PointCloud& cloud) {
  auto out = detail::open_out(path);
  write_xyz(out, cloud);
}

struct OffLoad {
  TriMesh mesh;
  std::size_t dropped_faces = 0;
};

/// Reads an OFF triangle mesh. Zero-area faces are dropped and counted.
inline OffLoad read_off(std::istream& in, const std::string& name = "<stream>") {
  std::vector<std::string_view> toks;
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(std::move(line));
  for (const auto& l : lines)
    for (auto t : detail::split_ws(detail::strip_comment(l))) toks.push_back(t);

  auto fail = [&](const std::string& what) { throw InvalidInput(name + ": " + what); };
  std::size_t pos = 0;
  if (toks.empty() || toks[pos] != "OFF") fail("missing OFF header");
  ++pos;
  auto next_count = [&]() {
    std::size_t v = 0;
    if (pos >= toks.size() || !detail::parse_number(toks[pos], v)) fail("malformed counts");
    ++pos;
    return v;
  };
  const std::size_t nv = next_count();
  const std::size_t nf = next_count();
  next_count();  // edge count, unused

  OffLoad r;
  r.mesh.vertices.resize(nv);
  for (std::size_t i = 0; i < nv; ++i)
    for (int k = 0; k < 3; ++k) {
      if (pos >= toks.size() || !detail::parse_number(toks[pos], r.mesh.vertices[i][k]))
        fail("malformed vertex " + std::to_string(i));
      ++pos;
    }
  r.mesh.faces.resize(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    std::size_t count = 0;
    if (pos >= toks.size() || !detail::parse_number(toks[pos], count) || count != 3)
      fail("face " + std::to_string(f) + " is not a triangle");
    ++pos;
    for (int k = 0; k < 3; ++k) {
      if (pos >= toks.size() || !detail::parse_number(toks[pos], r.mesh.faces[f][k]))
        fail("malformed face " + std::to_string(f));
      ++pos;
    }
  }
  r.dropped_faces = sanitize(r.mesh);
  if (r.mesh.empty()) fail("no usable faces");
  return r;
}

inline OffLoad read_off(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  return read_off(in, path.string());
}

inline void write_off(std::ostream& out, const TriMesh& mesh) {
  std::string buf = "OFF\n" + std::to_string(mesh.vertices.size()) + ' ' +
                    std::to_string(mesh.faces.size()) + " 0\n";
  for (const auto& v : mesh.vertices) {
    detail::append_double(buf, v.x());
    buf += ' ';
    detail::append_double(buf, v.y());
    buf += ' ';
    detail::append_double(buf, v.z());
    buf += '\n';
  }
  for (const auto& f : mesh.faces)
    buf += "3 " + std::to_string(f[0]) + ' ' + std::to_string(f[1]) + ' ' + std::to_string(f[2]) + '\n';
  out << buf;
}

inline void write_off(const std::filesystem::path& path, const TriMesh& mesh) {
  auto out = detail::open_out(path);
  write_off(out, mesh);
}

}  // namespace ascent::io

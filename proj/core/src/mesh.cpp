#include "ncgs/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "ncgs/error.hpp"

namespace ncgs {

Vec3 TriangleMesh::face_cross(std::size_t face) const {
  const Vec3& a = vertices[faces[face][0]];
  const Vec3& b = vertices[faces[face][1]];
  const Vec3& c = vertices[faces[face][2]];
  return (b - a).cross(c - a);
}

double TriangleMesh::total_area() const {
  double sum = 0.0;
  for (std::size_t f = 0; f < faces.size(); ++f) sum += face_area(f);
  return sum;
}

AxisBox bounding_box(const TriangleMesh& mesh) {
  AxisBox box;
  for (const Vec3& v : mesh.vertices) box.extend(v);
  return box;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_double(std::string_view tok, std::size_t line) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    fail(ErrorCode::kParse, "line " + std::to_string(line) + ": bad number '" + std::string(tok) + "'");
  }
  return value;
}

long parse_index(std::string_view tok, std::size_t line) {
  tok = tok.substr(0, tok.find('/'));
  long value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size() || value == 0) {
    fail(ErrorCode::kParse, "line " + std::to_string(line) + ": bad face index '" + std::string(tok) + "'");
  }
  return value;
}

bool is_degenerate(const TriangleMesh& mesh, const Face& f) {
  if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) return true;
  const Vec3& a = mesh.vertices[f[0]];
  const Vec3& b = mesh.vertices[f[1]];
  const Vec3& c = mesh.vertices[f[2]];
  const double longest = std::max({(b - a).squaredNorm(), (c - b).squaredNorm(), (a - c).squaredNorm()});
  return (b - a).cross(c - a).norm() <= 1e-12 * longest;
}

}  // namespace

TriangleMesh parse_obj(std::string_view text) {
  TriangleMesh mesh;
  struct PendingFace {
    std::array<long, 3> idx;
    std::size_t line;
  };
  std::vector<PendingFace> pending;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;

    auto tokens = split_ws(line);
    if (tokens[0] == "v") {
      if (tokens.size() < 4) fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": vertex needs 3 coordinates");
      mesh.vertices.emplace_back(parse_double(tokens[1], line_no), parse_double(tokens[2], line_no),
                                 parse_double(tokens[3], line_no));
    } else if (tokens[0] == "f") {
      if (tokens.size() < 4) fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": face needs >= 3 indices");
      const long nv = static_cast<long>(mesh.vertices.size());
      std::vector<long> poly;
      poly.reserve(tokens.size() - 1);
      for (std::size_t i = 1; i < tokens.size(); ++i) {
        long idx = parse_index(tokens[i], line_no);
        poly.push_back(idx > 0 ? idx - 1 : nv + idx);
      }
      for (std::size_t i = 1; i + 1 < poly.size(); ++i) {
        pending.push_back({{poly[0], poly[i], poly[i + 1]}, line_no});
      }
    }
    if (end == text.size()) break;
  }

  const long nv = static_cast<long>(mesh.vertices.size());
  for (const PendingFace& pf : pending) {
    for (long idx : pf.idx) {
      if (idx < 0 || idx >= nv) {
        fail(ErrorCode::kStructural,
             "line " + std::to_string(pf.line) + ": face index " + std::to_string(idx + 1) + " out of range (" +
                 std::to_string(nv) + " vertices)");
      }
    }
    Face f{static_cast<std::int32_t>(pf.idx[0]), static_cast<std::int32_t>(pf.idx[1]),
           static_cast<std::int32_t>(pf.idx[2])};
    if (!is_degenerate(mesh, f)) mesh.faces.push_back(f);
  }
  return mesh;
}

TriangleMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_obj(buf.str());
}

std::string format_obj(const TriangleMesh& mesh) {
  std::string out;
  out.reserve(mesh.vertices.size() * 40 + mesh.faces.size() * 24);
  char line[128];
  for (const Vec3& v : mesh.vertices) {
    int n = std::snprintf(line, sizeof(line), "v %.9g %.9g %.9g\n", v.x(), v.y(), v.z());
    out.append(line, n);
  }
  for (const Face& f : mesh.faces) {
    int n = std::snprintf(line, sizeof(line), "f %d %d %d\n", f[0] + 1, f[1] + 1, f[2] + 1);
    out.append(line, n);
  }
  return out;
}

void save_obj(const TriangleMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  const std::string text = format_obj(mesh);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

TriangleMesh normalize_unit_cube(const TriangleMesh& mesh, double margin) {
  if (mesh.vertices.empty()) fail(ErrorCode::kInvalidArgument, "cannot normalize an empty mesh");
  if (!(margin >= 0.0 && margin < 1.0)) fail(ErrorCode::kInvalidArgument, "margin must lie in [0, 1)");
  const AxisBox box = bounding_box(mesh);
  const double longest = box.extent().maxCoeff();
  if (!(longest > 0.0)) fail(ErrorCode::kInvalidArgument, "degenerate mesh: bounding box has zero extent");

  const double scale = 2.0 * (1.0 - margin) / longest;
  const Vec3 center = box.center();
  TriangleMesh out = mesh;
  for (Vec3& v : out.vertices) v = (v - center) * scale;
  return out;
}

SurfaceSamples sample_surface(const TriangleMesh& mesh, std::size_t count, std::uint64_t seed) {
  if (mesh.faces.empty()) fail(ErrorCode::kInvalidArgument, "cannot sample a mesh without faces");
  if (count == 0) fail(ErrorCode::kInvalidArgument, "sample count must be positive");

  std::vector<double> cdf(mesh.faces.size());
  double acc = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    acc += mesh.face_area(f);
    cdf[f] = acc;
  }
  if (!(acc > 0.0)) fail(ErrorCode::kInvalidArgument, "mesh has zero total area");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  SurfaceSamples out;
  out.points.reserve(count);
  out.normals.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double pick = uni(rng) * acc;
    std::size_t f = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), pick) - cdf.begin());
    f = std::min(f, cdf.size() - 1);
    while (f > 0 && mesh.face_area(f) == 0.0) --f;

    const double r1 = std::sqrt(uni(rng));
    const double r2 = uni(rng);
    const Vec3& a = mesh.corner(f, 0);
    const Vec3& b = mesh.corner(f, 1);
    const Vec3& c = mesh.corner(f, 2);
    out.points.push_back((1.0 - r1) * a + r1 * (1.0 - r2) * b + r1 * r2 * c);
    out.normals.push_back(mesh.face_cross(f).normalized());
  }
  return out;
}

}  // namespace ncgs

#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "transcad/errors.hpp"
#include "transcad/vec3.hpp"

namespace transcad {

// n oriented points. After surface sampling, shapes are normalized so the
// bounding box fits the unit cube [-0.5, 0.5]^3 centered at the origin.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  bool operator==(const PointCloud&) const = default;
};

// ---------------------------------------------------------------------------
// Binary little-endian PLY with float32 properties x,y,z,nx,ny,nz.

inline void save_ply(const PointCloud& pc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "ply\n"
      << "format binary_little_endian 1.0\n"
      << "element vertex " << pc.size() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property float nx\nproperty float ny\nproperty float nz\n"
      << "end_header\n";
  std::vector<float> row(6);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    row[0] = static_cast<float>(pc.points[i].x);
    row[1] = static_cast<float>(pc.points[i].y);
    row[2] = static_cast<float>(pc.points[i].z);
    row[3] = static_cast<float>(pc.normals[i].x);
    row[4] = static_cast<float>(pc.normals[i].y);
    row[5] = static_cast<float>(pc.normals[i].z);
    out.write(reinterpret_cast<const char*>(row.data()), 6 * sizeof(float));
  }
}

inline PointCloud load_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  std::string line;
  std::size_t count = 0;
  std::vector<std::string> props;
  bool is_binary_le = false;
  if (!std::getline(in, line) || line != "ply") throw ParseError(path + ": not a PLY file");
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      is_binary_le = fmt == "binary_little_endian";
    } else if (tok == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex") throw ParseError(path + ": unsupported element '" + name + "'");
    } else if (tok == "property") {
      std::string type, name;
      ls >> type >> name;
      if (type != "float") throw ParseError(path + ": unsupported property type '" + type + "'");
      props.push_back(name);
    } else if (tok == "end_header") {
      break;
    }
  }
  if (!is_binary_le) throw ParseError(path + ": expected binary_little_endian format");
  const std::vector<std::string> expected{"x", "y", "z", "nx", "ny", "nz"};
  if (props != expected) throw ParseError(path + ": expected properties x,y,z,nx,ny,nz");

  PointCloud pc;
  pc.points.resize(count);
  pc.normals.resize(count);
  std::vector<float> row(6);
  for (std::size_t i = 0; i < count; ++i) {
    in.read(reinterpret_cast<char*>(row.data()), 6 * sizeof(float));
    if (!in) throw ParseError(path + ": truncated vertex data");
    pc.points[i] = {row[0], row[1], row[2]};
    pc.normals[i] = {row[3], row[4], row[5]};
  }
  return pc;
}

// ---------------------------------------------------------------------------
// Plain-text XYZ + normals (6 columns per line).

inline void save_xyz(const PointCloud& pc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  char buf[256];
  for (std::size_t i = 0; i < pc.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %.9g %.9g %.9g\n", pc.points[i].x,
                  pc.points[i].y, pc.points[i].z, pc.normals[i].x, pc.normals[i].y,
                  pc.normals[i].z);
    out << buf;
  }
}

inline PointCloud load_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  PointCloud pc;
  double x, y, z, nx, ny, nz;
  while (in >> x >> y >> z >> nx >> ny >> nz) {
    pc.points.push_back({x, y, z});
    pc.normals.push_back({nx, ny, nz});
  }
  if (pc.empty()) throw ParseError(path + ": no points parsed");
  return pc;
}

}  // namespace transcad

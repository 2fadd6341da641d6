#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "pesgen/structure.hpp"

namespace pesgen {

/// One extended-XYZ frame: a structure, the comment-line key/value metadata
/// (order preserved; Lattice and Properties are handled structurally and do
/// not appear here), and any extra per-atom 3-vector columns such as forces.
struct Frame {
  Structure structure;
  std::vector<std::pair<std::string, std::string>> info;
  std::vector<std::pair<std::string, std::vector<Vec3>>> vec3_arrays;

  const std::string* find_info(const std::string& key) const;
  void set_info(const std::string& key, const std::string& value);
  const std::vector<Vec3>* find_array(const std::string& key) const;
};

/// Floats in files carry 10 significant digits.
std::string format_double(double v);
std::string format_vec3(const Vec3& v);
std::string format_mat3_row_major(const Mat3& m);
Mat3 parse_mat3_row_major(const std::string& nine_numbers);
std::vector<Vec3> parse_vec3_list(const std::string& numbers);

std::vector<Frame> read_extxyz(std::istream& in, const std::string& source_name);
std::vector<Frame> read_extxyz_file(const std::string& path);
void write_extxyz(std::ostream& out, const std::vector<Frame>& frames);
void write_extxyz_file(const std::string& path, const std::vector<Frame>& frames);

}  // namespace pesgen

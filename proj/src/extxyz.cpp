#include "pesgen/extxyz.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pesgen/elements.hpp"
#include "pesgen/error.hpp"

namespace pesgen {

const std::string* Frame::find_info(const std::string& key) const {
  for (const auto& kv : info)
    if (kv.first == key) return &kv.second;
  return nullptr;
}

void Frame::set_info(const std::string& key, const std::string& value) {
  for (auto& kv : info)
    if (kv.first == key) {
      kv.second = value;
      return;
    }
  info.emplace_back(key, value);
}

const std::vector<Vec3>* Frame::find_array(const std::string& key) const {
  for (const auto& kv : vec3_arrays)
    if (kv.first == key) return &kv.second;
  return nullptr;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string format_vec3(const Vec3& v) {
  return format_double(v.x) + " " + format_double(v.y) + " " + format_double(v.z);
}

std::string format_mat3_row_major(const Mat3& m) {
  std::string s;
  for (int i = 0; i < 9; ++i) {
    if (i) s += " ";
    s += format_double(m.m[static_cast<std::size_t>(i)]);
  }
  return s;
}

namespace {

std::vector<double> parse_doubles(const std::string& text, const char* what) {
  std::vector<double> out;
  const char* p = text.c_str();
  while (*p) {
    while (*p && std::isspace(static_cast<unsigned char>(*p))) ++p;
    if (!*p) break;
    char* end = nullptr;
    const double v = std::strtod(p, &end);
    if (end == p) throw IoError(std::string("cannot parse number in ") + what + ": '" + text + "'");
    out.push_back(v);
    p = end;
  }
  return out;
}

[[noreturn]] void parse_fail(const std::string& source, int line, const std::string& msg) {
  throw IoError(source + ":" + std::to_string(line) + ": " + msg);
}

bool needs_quotes(const std::string& v) {
  if (v.empty()) return true;
  for (char c : v)
    if (std::isspace(static_cast<unsigned char>(c)) || c == '"' || c == '=') return true;
  return false;
}

std::string quote_value(const std::string& v) {
  if (!needs_quotes(v)) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

/// Split a comment line into key=value pairs; values may be double-quoted
/// (with backslash escapes). Bare tokens without '=' become key="T" flags.
std::vector<std::pair<std::string, std::string>> parse_comment_line(const std::string& line,
                                                                    const std::string& source,
                                                                    int lineno) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::size_t i = 0;
  const std::size_t n = line.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= n) break;
    std::size_t key_start = i;
    while (i < n && line[i] != '=' && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::string key = line.substr(key_start, i - key_start);
    if (i >= n || line[i] != '=') {
      kv.emplace_back(key, "T");
      continue;
    }
    ++i;  // '='
    std::string value;
    if (i < n && line[i] == '"') {
      ++i;
      bool closed = false;
      while (i < n) {
        char c = line[i++];
        if (c == '\\' && i < n) {
          value += line[i++];
        } else if (c == '"') {
          closed = true;
          break;
        } else {
          value += c;
        }
      }
      if (!closed) parse_fail(source, lineno, "unterminated quoted value for key '" + key + "'");
    } else {
      std::size_t val_start = i;
      while (i < n && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      value = line.substr(val_start, i - val_start);
    }
    kv.emplace_back(std::move(key), std::move(value));
  }
  return kv;
}

struct PropertyColumn {
  std::string name;
  char type;   // 'S', 'R', 'I'
  int count;
};

std::vector<PropertyColumn> parse_properties(const std::string& props, const std::string& source,
                                             int lineno) {
  std::vector<PropertyColumn> cols;
  std::stringstream ss(props);
  std::string tok;
  std::vector<std::string> parts;
  while (std::getline(ss, tok, ':')) parts.push_back(tok);
  if (parts.size() % 3 != 0)
    parse_fail(source, lineno, "malformed Properties string '" + props + "'");
  for (std::size_t k = 0; k < parts.size(); k += 3) {
    PropertyColumn c;
    c.name = parts[k];
    if (parts[k + 1].size() != 1)
      parse_fail(source, lineno, "bad column type in Properties: '" + parts[k + 1] + "'");
    c.type = parts[k + 1][0];
    try {
      c.count = std::stoi(parts[k + 2]);
    } catch (const std::exception&) {
      parse_fail(source, lineno, "bad column count in Properties: '" + parts[k + 2] + "'");
    }
    if (c.count < 1) parse_fail(source, lineno, "bad column count in Properties");
    cols.push_back(c);
  }
  return cols;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (ss >> f) out.push_back(f);
  return out;
}

double to_double(const std::string& s, const std::string& source, int lineno) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) parse_fail(source, lineno, "cannot parse number '" + s + "'");
  return v;
}

}  // namespace

Mat3 parse_mat3_row_major(const std::string& nine_numbers) {
  const std::vector<double> v = parse_doubles(nine_numbers, "3x3 matrix");
  if (v.size() != 9)
    throw IoError("expected 9 numbers for a 3x3 matrix, found " + std::to_string(v.size()));
  Mat3 m;
  for (int i = 0; i < 9; ++i) m.m[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)];
  return m;
}

std::vector<Vec3> parse_vec3_list(const std::string& numbers) {
  const std::vector<double> v = parse_doubles(numbers, "vector list");
  if (v.size() % 3 != 0)
    throw IoError("expected a multiple of 3 numbers, found " + std::to_string(v.size()));
  std::vector<Vec3> out(v.size() / 3);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = {v[3 * i], v[3 * i + 1], v[3 * i + 2]};
  return out;
}

std::vector<Frame> read_extxyz(std::istream& in, const std::string& source_name) {
  std::vector<Frame> frames;
  std::string line;
  int lineno = 0;
  while (true) {
    if (!std::getline(in, line)) break;
    ++lineno;
    {  // skip blank lines between frames
      bool blank = true;
      for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
      if (blank) continue;
    }
    int natoms = 0;
    try {
      std::size_t pos = 0;
      natoms = std::stoi(line, &pos);
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos != line.size()) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      parse_fail(source_name, lineno, "expected an atom count, got '" + line + "'");
    }
    if (natoms < 1) parse_fail(source_name, lineno, "atom count must be >= 1");

    if (!std::getline(in, line)) parse_fail(source_name, lineno + 1, "missing comment line");
    ++lineno;
    const int comment_lineno = lineno;
    auto kv = parse_comment_line(line, source_name, lineno);

    Frame frame;
    std::string props = "species:S:1:pos:R:3";
    for (const auto& [key, value] : kv) {
      if (key == "Lattice") {
        try {
          frame.structure.cell = parse_mat3_row_major(value);
        } catch (const IoError& e) {
          parse_fail(source_name, comment_lineno, e.what());
        }
      } else if (key == "Properties") {
        props = value;
      } else {
        frame.info.emplace_back(key, value);
      }
    }
    const auto cols = parse_properties(props, source_name, comment_lineno);
    bool have_species = false, have_pos = false;
    int n_fields = 0;
    for (const auto& c : cols) {
      n_fields += c.count;
      if (c.name == "species" && c.type == 'S' && c.count == 1) have_species = true;
      if (c.name == "pos" && c.type == 'R' && c.count == 3) have_pos = true;
    }
    if (!have_species || !have_pos)
      parse_fail(source_name, comment_lineno,
                 "Properties must include species:S:1 and pos:R:3 (got '" + props + "')");
    for (const auto& c : cols) {
      if (c.name == "species" || c.name == "pos") continue;
      if (c.type == 'R' && c.count == 3) {
        frame.vec3_arrays.emplace_back(c.name, std::vector<Vec3>());
        frame.vec3_arrays.back().second.reserve(static_cast<std::size_t>(natoms));
      } else {
        parse_fail(source_name, comment_lineno,
                   "unsupported per-atom column " + c.name + ":" + std::string(1, c.type) + ":" +
                       std::to_string(c.count) + " (only extra R:3 columns are supported)");
      }
    }

    frame.structure.species.reserve(static_cast<std::size_t>(natoms));
    frame.structure.positions.reserve(static_cast<std::size_t>(natoms));
    for (int a = 0; a < natoms; ++a) {
      if (!std::getline(in, line))
        parse_fail(source_name, lineno + 1,
                   "unexpected end of file: expected " + std::to_string(natoms) + " atom lines");
      ++lineno;
      const auto fields = split_fields(line);
      if (static_cast<int>(fields.size()) != n_fields)
        parse_fail(source_name, lineno,
                   "expected " + std::to_string(n_fields) + " fields, got " +
                       std::to_string(fields.size()));
      int fi = 0;
      for (const auto& c : cols) {
        if (c.name == "species") {
          const std::string& sym = fields[static_cast<std::size_t>(fi)];
          try {
            frame.structure.species.push_back(element_number(sym));
          } catch (const Error&) {
            parse_fail(source_name, lineno, "unknown element symbol '" + sym + "'");
          }
          fi += 1;
        } else if (c.name == "pos") {
          Vec3 p;
          for (int d = 0; d < 3; ++d)
            p[d] = to_double(fields[static_cast<std::size_t>(fi + d)], source_name, lineno);
          frame.structure.positions.push_back(p);
          fi += 3;
        } else {
          Vec3 v;
          for (int d = 0; d < 3; ++d)
            v[d] = to_double(fields[static_cast<std::size_t>(fi + d)], source_name, lineno);
          for (auto& arr : frame.vec3_arrays)
            if (arr.first == c.name) arr.second.push_back(v);
          fi += 3;
        }
      }
    }
    try {
      validate_structure(frame.structure);
    } catch (const Error& e) {
      parse_fail(source_name, comment_lineno, std::string("invalid structure: ") + e.what());
    }
    frames.push_back(std::move(frame));
  }
  return frames;
}

std::vector<Frame> read_extxyz_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return read_extxyz(in, path);
}

void write_extxyz(std::ostream& out, const std::vector<Frame>& frames) {
  for (const Frame& frame : frames) {
    const Structure& s = frame.structure;
    validate_structure(s);
    for (const auto& arr : frame.vec3_arrays)
      if (arr.second.size() != s.species.size())
        throw InvalidInput("per-atom array '" + arr.first + "' has wrong length");
    out << s.size() << "\n";
    std::string comment;
    if (s.periodic()) comment += "Lattice=\"" + format_mat3_row_major(*s.cell) + "\" ";
    comment += "Properties=species:S:1:pos:R:3";
    for (const auto& arr : frame.vec3_arrays) comment += ":" + arr.first + ":R:3";
    for (const auto& [key, value] : frame.info) comment += " " + key + "=" + quote_value(value);
    out << comment << "\n";
    for (int i = 0; i < s.size(); ++i) {
      out << element_symbol(s.species[static_cast<std::size_t>(i)]) << " "
          << format_vec3(s.positions[static_cast<std::size_t>(i)]);
      for (const auto& arr : frame.vec3_arrays)
        out << " " << format_vec3(arr.second[static_cast<std::size_t>(i)]);
      out << "\n";
    }
  }
}

void write_extxyz_file(const std::string& path, const std::vector<Frame>& frames) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_extxyz(out, frames);
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace pesgen

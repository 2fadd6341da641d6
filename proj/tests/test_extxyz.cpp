#include <cmath>
#include <sstream>

#include "doctest.h"
#include "pesgen/extxyz.hpp"
#include "pesgen/random.hpp"
#include "test_util.hpp"

using namespace pesgen;
using namespace pesgen::testutil;

TEST_CASE("parse a hand-written periodic frame with an extra force column") {
  const std::string text =
      "2\n"
      "Lattice=\"10 0 0 0 10 0 0 0 10\" Properties=species:S:1:pos:R:3:forces:R:3 "
      "energy=-1.25 name=\"two atoms\"\n"
      "C 0 0 0  0.5 0 0\n"
      "O 1.5 0 0  -0.5 0 0\n";
  std::istringstream in(text);
  const auto frames = read_extxyz(in, "inline");
  REQUIRE(frames.size() == 1);
  const Frame& f = frames[0];
  REQUIRE(f.structure.size() == 2);
  CHECK(f.structure.species[0] == 6);
  CHECK(f.structure.species[1] == 8);
  CHECK(f.structure.periodic());
  CHECK((*f.structure.cell)(0, 0) == 10.0);
  CHECK(f.structure.positions[1].x == 1.5);
  REQUIRE(f.find_array("forces") != nullptr);
  CHECK((*f.find_array("forces"))[0].x == 0.5);
  CHECK((*f.find_array("forces"))[1].x == -0.5);
  REQUIRE(f.find_info("energy") != nullptr);
  CHECK(*f.find_info("energy") == "-1.25");
  REQUIRE(f.find_info("name") != nullptr);
  CHECK(*f.find_info("name") == "two atoms");
  // Lattice and Properties are structural, not info keys.
  CHECK(f.find_info("Lattice") == nullptr);
  CHECK(f.find_info("Properties") == nullptr);
}

TEST_CASE("a frame without Lattice is non-periodic") {
  const std::string text =
      "1\n"
      "Properties=species:S:1:pos:R:3\n"
      "C 0.5 -1 2\n";
  std::istringstream in(text);
  const auto frames = read_extxyz(in, "inline");
  REQUIRE(frames.size() == 1);
  CHECK_FALSE(frames[0].structure.periodic());
}

TEST_CASE("parse errors carry the source name and line number") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_extxyz(in, "bad.xyz");
  };
  // Wrong field count on an atom line (line 3).
  CHECK_THROWS_WITH_AS(parse("1\nProperties=species:S:1:pos:R:3\nC 0 0\n"),
                       doctest::Contains("bad.xyz:3"), IoError);
  // Not an atom count (line 1).
  CHECK_THROWS_WITH_AS(parse("zzz\n"), doctest::Contains("bad.xyz:1"), IoError);
  // Truncated frame.
  CHECK_THROWS_AS(parse("3\nProperties=species:S:1:pos:R:3\nC 0 0 0\n"), IoError);
  // Unknown element symbol.
  CHECK_THROWS_WITH_AS(parse("1\nProperties=species:S:1:pos:R:3\nXx 0 0 0\n"),
                       doctest::Contains("Xx"), IoError);
  // Properties without pos.
  CHECK_THROWS_AS(parse("1\nProperties=species:S:1\nC\n"), IoError);
  // Unsupported per-atom column type.
  CHECK_THROWS_AS(parse("1\nProperties=species:S:1:pos:R:3:tag:I:1\nC 0 0 0 1\n"), IoError);
  // Unterminated quote.
  CHECK_THROWS_AS(parse("1\nname=\"oops Properties=species:S:1:pos:R:3\nC 0 0 0\n"), IoError);
  // An atom count of zero.
  CHECK_THROWS_AS(parse("0\n\n"), IoError);
}

TEST_CASE("round trip preserves fields; writing is a fixpoint") {
  std::vector<Frame> frames;
  Rng rng(21);
  for (int t = 0; t < 20; ++t) {
    Frame f;
    const bool periodic = t % 2 == 0;
    const int n = 1 + int(rng.integer(6));
    if (periodic) {
      Mat3 cell;
      cell.set_row(0, {7 + rng.uniform(), 0, 0});
      cell.set_row(1, {rng.uniform(-1, 1), 7 + rng.uniform(), 0});
      cell.set_row(2, {rng.uniform(-1, 1), rng.uniform(-1, 1), 7 + rng.uniform()});
      f.structure.cell = cell;
    }
    std::vector<Vec3> forces;
    for (int i = 0; i < n; ++i) {
      f.structure.species.push_back(i % 2 ? 8 : 6);
      f.structure.positions.push_back(
          {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)});
      forces.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)});
    }
    f.vec3_arrays.emplace_back("target_forces", forces);
    f.set_info("source", "frame " + std::to_string(t));  // forces quoting
    f.set_info("sample", std::to_string(t));
    frames.push_back(std::move(f));
  }

  std::ostringstream out;
  write_extxyz(out, frames);
  std::istringstream in(out.str());
  const auto back = read_extxyz(in, "roundtrip");
  REQUIRE(back.size() == frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame& a = frames[i];
    const Frame& b = back[i];
    REQUIRE(a.structure.size() == b.structure.size());
    CHECK(a.structure.species == b.structure.species);
    CHECK(a.structure.periodic() == b.structure.periodic());
    for (int k = 0; k < a.structure.size(); ++k) {
      const auto ka = std::size_t(k);
      CHECK(norm(a.structure.positions[ka] - b.structure.positions[ka]) < 1e-8);
    }
    if (a.structure.periodic())
      CHECK(max_abs(*a.structure.cell - *b.structure.cell) < 1e-8);
    REQUIRE(b.find_array("target_forces") != nullptr);
    const auto& fa = *a.find_array("target_forces");
    const auto& fb = *b.find_array("target_forces");
    for (std::size_t k = 0; k < fa.size(); ++k) CHECK(norm(fa[k] - fb[k]) < 1e-8);
    CHECK(a.info == b.info);
  }

  // The canonical form is a fixpoint: writing the re-read frames is
  // byte-identical to the first write.
  std::ostringstream out2;
  write_extxyz(out2, back);
  CHECK(out.str() == out2.str());
}

TEST_CASE("format_double keeps 10 significant digits and round-trips") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-3) == "-3");
  const double pi = 3.14159265358979323846;
  CHECK(std::abs(std::strtod(format_double(pi).c_str(), nullptr) - pi) < 1e-9);
  CHECK(format_double(1e-12) == "1e-12");
}

TEST_CASE("mat3 and vec3 list parsing") {
  Mat3 m = parse_mat3_row_major("1 2 3 4 5 6 7 8 9");
  CHECK(m(0, 0) == 1);
  CHECK(m(1, 2) == 6);
  CHECK(m(2, 1) == 8);
  CHECK_THROWS_AS(parse_mat3_row_major("1 2 3"), IoError);
  CHECK_THROWS_AS(parse_mat3_row_major("1 2 3 4 5 6 7 8 x"), IoError);

  const auto v = parse_vec3_list("1 2 3 4 5 6");
  REQUIRE(v.size() == 2);
  CHECK(v[1].z == 6);
  CHECK_THROWS_AS(parse_vec3_list("1 2"), IoError);
}

TEST_CASE("quoted values with embedded quotes survive a round trip") {
  Frame f;
  f.structure = diamond_cell();
  f.set_info("note", "a \"quoted\" value = tricky");
  f.set_info("empty", "");
  std::ostringstream out;
  write_extxyz(out, {f});
  std::istringstream in(out.str());
  const auto back = read_extxyz(in, "inline");
  REQUIRE(back.size() == 1);
  REQUIRE(back[0].find_info("note") != nullptr);
  CHECK(*back[0].find_info("note") == "a \"quoted\" value = tricky");
  REQUIRE(back[0].find_info("empty") != nullptr);
  CHECK(*back[0].find_info("empty") == "");
}

TEST_CASE("file reader reports missing files") {
  CHECK_THROWS_AS(read_extxyz_file("/nonexistent/path/frames.extxyz"), IoError);
}

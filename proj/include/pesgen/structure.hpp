#pragma once

#include <array>
#include <optional>
#include <vector>

#include "pesgen/geometry.hpp"

namespace pesgen {

/// An atomic configuration: species, Cartesian positions in Angstrom, and an
/// optional periodic cell whose rows are the lattice vectors. Structures are
/// treated as immutable values once built; every routine that changes one
/// returns a new Structure.
struct Structure {
  std::vector<int> species;     // atomic numbers, 1..118
  std::vector<Vec3> positions;  // Angstrom
  std::optional<Mat3> cell;     // rows are lattice vectors; right-handed

  bool periodic() const { return cell.has_value(); }
  int size() const { return static_cast<int>(species.size()); }
};

/// Throws InvalidInput unless the structure satisfies its invariants:
/// at least one atom, matching array lengths, finite positions, valid atomic
/// numbers, and (if periodic) a cell with positive determinant.
void validate_structure(const Structure& s);

double cell_volume(const Mat3& cell);

/// Perpendicular width of the cell along each lattice direction:
/// w_a = V / |b x c| and cyclic. These bound how far a fractional step
/// of 1 along an axis moves a point, which sets image-search ranges.
Vec3 perpendicular_widths(const Mat3& cell);

Vec3 cart_to_frac(const Mat3& cell, const Vec3& r);
Vec3 frac_to_cart(const Mat3& cell, const Vec3& f);

/// Shortest displacement r_b - r_a + S * cell over integer image shifts S.
/// The search window is derived from the cell's perpendicular widths, so
/// strongly skewed cells are handled as well. Throws on a degenerate cell.
Vec3 minimum_image_displacement(const Mat3& cell, const Vec3& r_a, const Vec3& r_b);

struct Neighbor {
  int j = 0;                        // index of the neighboring atom
  std::array<int, 3> shift{};      // periodic image: r_j + shift * cell - r_i
  double r = 0.0;                   // distance, Angstrom
  Vec3 unit;                        // (r_j + shift * cell - r_i) / r
};

/// Full (two-sided) neighbor list. For every stored entry (i -> j, S) the
/// reverse entry (j -> i, -S) is stored with the bit-identical distance.
/// Entries are sorted by (j, shift) so construction is deterministic.
struct NeighborList {
  double r_cut = 0.0;
  std::vector<std::vector<Neighbor>> atoms;

  std::size_t edge_count() const {
    std::size_t n = 0;
    for (const auto& a : atoms) n += a.size();
    return n;
  }
};

/// All pairs/images with distance strictly inside r_cut. Periodic structures may
/// list several images of the same neighbor (and of the atom itself) when r_cut
/// exceeds the cell size. Pairs closer than ~1e-12 A are rejected: coincident
/// atoms have no defined direction.
NeighborList build_neighbor_list(const Structure& s, double r_cut);

/// Replicates a periodic structure n1 x n2 x n3 times. Atom order is
/// replica-major: all atoms of replica (0,0,0) first, then (0,0,1), ...
Structure make_supercell(const Structure& s, int n1, int n2, int n3);

/// Maps all atoms into the home cell (fractional coordinates in [0,1)).
Structure wrap_positions(const Structure& s);

}  // namespace pesgen

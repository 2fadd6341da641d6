#include "pesgen/structure.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pesgen/elements.hpp"
#include "pesgen/error.hpp"

namespace pesgen {

namespace {

constexpr double kCoincidenceTol = 1e-12;

bool finite(const Vec3& v) { return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z); }

void sort_neighbors(std::vector<Neighbor>& list) {
  std::sort(list.begin(), list.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.j != b.j) return a.j < b.j;
    return a.shift < b.shift;
  });
}

}  // namespace

void validate_structure(const Structure& s) {
  if (s.species.empty()) throw InvalidInput("structure has no atoms");
  if (s.species.size() != s.positions.size())
    throw InvalidInput("species/positions length mismatch");
  for (int z : s.species)
    if (!is_valid_atomic_number(z))
      throw InvalidInput("invalid atomic number " + std::to_string(z));
  for (const Vec3& p : s.positions)
    if (!finite(p)) throw InvalidInput("non-finite atomic position");
  if (s.cell) {
    const double d = s.cell->det();
    if (!std::isfinite(d) || d <= 1e-12)
      throw InvalidInput("cell must be right-handed and non-degenerate (det = " +
                         std::to_string(d) + ")");
  }
}

double cell_volume(const Mat3& cell) { return cell.det(); }

Vec3 perpendicular_widths(const Mat3& cell) {
  const double v = std::abs(cell.det());
  if (v <= 1e-14) throw InvalidInput("degenerate cell");
  const Vec3 a = cell.row(0), b = cell.row(1), c = cell.row(2);
  return {v / norm(cross(b, c)), v / norm(cross(c, a)), v / norm(cross(a, b))};
}

Vec3 cart_to_frac(const Mat3& cell, const Vec3& r) { return r * cell.inverse(); }

Vec3 frac_to_cart(const Mat3& cell, const Vec3& f) { return f * cell; }

Vec3 minimum_image_displacement(const Mat3& cell, const Vec3& r_a, const Vec3& r_b) {
  if (std::abs(cell.det()) <= 1e-12) throw InvalidInput("degenerate cell");
  const Vec3 d = r_b - r_a;
  Vec3 f = cart_to_frac(cell, d);
  // Pre-reduce to nearly-centered fractional coordinates; the residual search
  // range then only has to absorb cell skew.
  const std::array<int, 3> base = {static_cast<int>(std::floor(f.x + 0.5)),
                                   static_cast<int>(std::floor(f.y + 0.5)),
                                   static_cast<int>(std::floor(f.z + 0.5))};
  Vec3 best;
  double best_n2 = -1.0;
  for (int sa = -2; sa <= 2; ++sa)
    for (int sb = -2; sb <= 2; ++sb)
      for (int sc = -2; sc <= 2; ++sc) {
        const Vec3 shift = {static_cast<double>(sa - base[0]), static_cast<double>(sb - base[1]),
                            static_cast<double>(sc - base[2])};
        const Vec3 cand = d + shift * cell;
        const double n2 = norm2(cand);
        if (best_n2 < 0.0 || n2 < best_n2) {
          best_n2 = n2;
          best = cand;
        }
      }
  return best;
}

namespace {

// Exact image-box search: all shifts S with |r_j - r_i + S*cell| < r_cut.
// For a pair with fractional difference f, |S_a + f_a| * w_a <= |d| bounds the
// per-axis range.
struct ShiftBox {
  std::array<int, 3> lo, hi;
};

ShiftBox shift_box(const Vec3& f, const Vec3& widths, double r_cut) {
  ShiftBox b;
  for (int a = 0; a < 3; ++a) {
    const double c = r_cut / widths[a];
    b.lo[a] = static_cast<int>(std::ceil(-f[a] - c));
    b.hi[a] = static_cast<int>(std::floor(-f[a] + c));
  }
  return b;
}

void add_pair(NeighborList& nl, int i, int j, const std::array<int, 3>& shift, const Vec3& d,
              double r) {
  const Vec3 u = d / r;
  nl.atoms[static_cast<std::size_t>(i)].push_back({j, shift, r, u});
  nl.atoms[static_cast<std::size_t>(j)].push_back(
      {i, {-shift[0], -shift[1], -shift[2]}, r, -u});
}

void periodic_pairs_brute(const Structure& s, double r_cut, NeighborList& nl) {
  const Mat3& cell = *s.cell;
  const Mat3 inv = cell.inverse();
  const Vec3 widths = perpendicular_widths(cell);
  const int n = s.size();
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      const Vec3 d0 = s.positions[static_cast<std::size_t>(j)] -
                      s.positions[static_cast<std::size_t>(i)];
      const Vec3 f = d0 * inv;
      const ShiftBox box = shift_box(f, widths, r_cut);
      for (int sa = box.lo[0]; sa <= box.hi[0]; ++sa)
        for (int sb = box.lo[1]; sb <= box.hi[1]; ++sb)
          for (int sc = box.lo[2]; sc <= box.hi[2]; ++sc) {
            const std::array<int, 3> shift = {sa, sb, sc};
            if (i == j) {
              // Self-images: keep one representative of (S, -S); skip S = 0.
              if (shift < std::array<int, 3>{0, 0, 0} || shift == std::array<int, 3>{0, 0, 0})
                continue;
            }
            const Vec3 d = d0 + Vec3{static_cast<double>(sa), static_cast<double>(sb),
                                     static_cast<double>(sc)} *
                                    cell;
            const double r2 = norm2(d);
            if (r2 >= r_cut * r_cut) continue;
            const double r = std::sqrt(r2);
            if (r < kCoincidenceTol)
              throw InvalidInput("coincident atoms: pair (" + std::to_string(i) + ", " +
                                 std::to_string(j) + ") at zero distance");
            add_pair(nl, i, j, shift, d, r);
          }
    }
  }
}

void molecular_pairs_brute(const Structure& s, double r_cut, NeighborList& nl) {
  const int n = s.size();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const Vec3 d = s.positions[static_cast<std::size_t>(j)] -
                     s.positions[static_cast<std::size_t>(i)];
      const double r2 = norm2(d);
      if (r2 >= r_cut * r_cut) continue;
      const double r = std::sqrt(r2);
      if (r < kCoincidenceTol)
        throw InvalidInput("coincident atoms: pair (" + std::to_string(i) + ", " +
                           std::to_string(j) + ") at zero distance");
      add_pair(nl, i, j, {0, 0, 0}, d, r);
    }
}

// Linked-cell binning for large systems. Bins live in fractional (periodic) or
// bounding-box (molecular) space with a perpendicular width of at least r_cut,
// so candidate pairs are confined to adjacent bins. Falls back to nullopt when
// the cell is too small to support >= 3 bins per axis.
struct BinGrid {
  std::array<int, 3> n_bins;
  std::vector<std::vector<int>> bins;
  int index(int a, int b, int c) const {
    return (a * n_bins[1] + b) * n_bins[2] + c;
  }
};

std::optional<BinGrid> try_build_grid_periodic(const Structure& s, double r_cut) {
  const Vec3 widths = perpendicular_widths(*s.cell);
  BinGrid g;
  for (int a = 0; a < 3; ++a) {
    g.n_bins[a] = static_cast<int>(std::floor(widths[a] / r_cut));
    if (g.n_bins[a] < 3) return std::nullopt;
  }
  g.bins.assign(static_cast<std::size_t>(g.n_bins[0] * g.n_bins[1] * g.n_bins[2]), {});
  const Mat3 inv = s.cell->inverse();
  for (int i = 0; i < s.size(); ++i) {
    Vec3 f = s.positions[static_cast<std::size_t>(i)] * inv;
    std::array<int, 3> b{};
    for (int a = 0; a < 3; ++a) {
      double w = f[a] - std::floor(f[a]);
      if (w >= 1.0) w = 0.0;
      b[a] = std::min(g.n_bins[a] - 1, static_cast<int>(w * g.n_bins[a]));
    }
    g.bins[static_cast<std::size_t>(g.index(b[0], b[1], b[2]))].push_back(i);
  }
  return g;
}

void periodic_pairs_grid(const Structure& s, double r_cut, const BinGrid& g, NeighborList& nl) {
  const Mat3& cell = *s.cell;
  const Mat3 inv = cell.inverse();
  for (int ba = 0; ba < g.n_bins[0]; ++ba)
    for (int bb = 0; bb < g.n_bins[1]; ++bb)
      for (int bc = 0; bc < g.n_bins[2]; ++bc) {
        const auto& home = g.bins[static_cast<std::size_t>(g.index(ba, bb, bc))];
        if (home.empty()) continue;
        for (int da = -1; da <= 1; ++da)
          for (int db = -1; db <= 1; ++db)
            for (int dc = -1; dc <= 1; ++dc) {
              const std::array<int, 3> nb = {(ba + da + g.n_bins[0]) % g.n_bins[0],
                                             (bb + db + g.n_bins[1]) % g.n_bins[1],
                                             (bc + dc + g.n_bins[2]) % g.n_bins[2]};
              const auto& other = g.bins[static_cast<std::size_t>(g.index(nb[0], nb[1], nb[2]))];
              for (int i : home)
                for (int j : other) {
                  // Claim each unordered pair from the smaller index's home
                  // bin; exactly one bin offset reaches bin(j) from bin(i).
                  // Self-image pairs are impossible: >= 3 bins per axis puts
                  // the nearest image a full cell width (>= 3 r_cut) away.
                  if (j <= i) continue;
                  const Vec3 d0 = s.positions[static_cast<std::size_t>(j)] -
                                  s.positions[static_cast<std::size_t>(i)];
                  Vec3 f = d0 * inv;
                  const std::array<int, 3> shift = {static_cast<int>(-std::floor(f.x + 0.5)),
                                                    static_cast<int>(-std::floor(f.y + 0.5)),
                                                    static_cast<int>(-std::floor(f.z + 0.5))};
                  const Vec3 d = d0 + Vec3{static_cast<double>(shift[0]),
                                           static_cast<double>(shift[1]),
                                           static_cast<double>(shift[2])} *
                                          cell;
                  const double r2 = norm2(d);
                  if (r2 >= r_cut * r_cut) continue;
                  const double r = std::sqrt(r2);
                  if (r < kCoincidenceTol)
                    throw InvalidInput("coincident atoms: pair (" + std::to_string(i) + ", " +
                                       std::to_string(j) + ") at zero distance");
                  add_pair(nl, i, j, shift, d, r);
                }
            }
      }
}

}  // namespace

NeighborList build_neighbor_list(const Structure& s, double r_cut) {
  validate_structure(s);
  if (!(r_cut > 0.0)) throw InvalidInput("r_cut must be positive");
  NeighborList nl;
  nl.r_cut = r_cut;
  nl.atoms.assign(static_cast<std::size_t>(s.size()), {});
  constexpr int kGridThreshold = 200;
  if (s.periodic()) {
    std::optional<BinGrid> grid;
    if (s.size() > kGridThreshold) grid = try_build_grid_periodic(s, r_cut);
    if (grid)
      periodic_pairs_grid(s, r_cut, *grid, nl);
    else
      periodic_pairs_brute(s, r_cut, nl);
  } else {
    molecular_pairs_brute(s, r_cut, nl);
  }
  for (auto& list : nl.atoms) sort_neighbors(list);
  return nl;
}

Structure make_supercell(const Structure& s, int n1, int n2, int n3) {
  validate_structure(s);
  if (!s.periodic()) throw Unsupported("make_supercell requires a periodic structure");
  if (n1 < 1 || n2 < 1 || n3 < 1) throw InvalidInput("supercell repeats must be >= 1");
  const Mat3& cell = *s.cell;
  Structure out;
  out.species.reserve(static_cast<std::size_t>(s.size()) * n1 * n2 * n3);
  out.positions.reserve(out.species.capacity());
  for (int i1 = 0; i1 < n1; ++i1)
    for (int i2 = 0; i2 < n2; ++i2)
      for (int i3 = 0; i3 < n3; ++i3) {
        const Vec3 offset = Vec3{static_cast<double>(i1), static_cast<double>(i2),
                                 static_cast<double>(i3)} *
                            cell;
        for (int i = 0; i < s.size(); ++i) {
          out.species.push_back(s.species[static_cast<std::size_t>(i)]);
          out.positions.push_back(s.positions[static_cast<std::size_t>(i)] + offset);
        }
      }
  Mat3 big = cell;
  big.set_row(0, cell.row(0) * static_cast<double>(n1));
  big.set_row(1, cell.row(1) * static_cast<double>(n2));
  big.set_row(2, cell.row(2) * static_cast<double>(n3));
  out.cell = big;
  return out;
}

Structure wrap_positions(const Structure& s) {
  validate_structure(s);
  if (!s.periodic()) throw Unsupported("wrap_positions requires a periodic structure");
  const Mat3& cell = *s.cell;
  const Mat3 inv = cell.inverse();
  Structure out = s;
  for (Vec3& p : out.positions) {
    Vec3 f = p * inv;
    for (int a = 0; a < 3; ++a) {
      f[a] -= std::floor(f[a]);
      if (f[a] >= 1.0) f[a] = 0.0;  // guards against -1e-18 rounding up
    }
    p = f * cell;
  }
  return out;
}

}  // namespace pesgen

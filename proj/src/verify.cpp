#include "pesgen/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pesgen/error.hpp"

namespace pesgen {

namespace {

double gaussian(Rng& rng) {
  // Box-Muller; open_unit avoids log(0).
  const double u1 = rng.open_unit();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

double energy_dev(double e_ref, double e_got) {
  return std::abs(e_got - e_ref) / std::max(std::abs(e_ref), 1e-4);
}

double force_scale(const std::vector<Vec3>& f) {
  double m = 1.0;
  for (const Vec3& v : f) {
    m = std::max({m, std::abs(v.x), std::abs(v.y), std::abs(v.z)});
  }
  return m;
}

}  // namespace

Mat3 random_rotation(Rng& rng) {
  double q[4];
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (double& c : q) {
      c = gaussian(rng);
      n2 += c * c;
    }
  } while (n2 < 1e-12);
  const double inv = 1.0 / std::sqrt(n2);
  const double w = q[0] * inv;
  const double x = q[1] * inv;
  const double y = q[2] * inv;
  const double z = q[3] * inv;
  Mat3 r = Mat3::zero();
  r(0, 0) = 1.0 - 2.0 * (y * y + z * z);
  r(0, 1) = 2.0 * (x * y - w * z);
  r(0, 2) = 2.0 * (x * z + w * y);
  r(1, 0) = 2.0 * (x * y + w * z);
  r(1, 1) = 1.0 - 2.0 * (x * x + z * z);
  r(1, 2) = 2.0 * (y * z - w * x);
  r(2, 0) = 2.0 * (x * z - w * y);
  r(2, 1) = 2.0 * (y * z + w * x);
  r(2, 2) = 1.0 - 2.0 * (x * x + y * y);
  return r;
}

Structure random_test_structure(Rng& rng, const std::vector<int>& elements, int n_atoms,
                                bool periodic) {
  if (elements.empty()) throw InvalidInput("random test structure: no elements given");
  if (n_atoms < 1) throw InvalidInput("random test structure: need at least one atom");

  constexpr double kMinSep = 1.2;
  const double edge = std::cbrt(14.0 * n_atoms) + 1.0;

  Structure s;
  s.species.reserve(static_cast<std::size_t>(n_atoms));
  for (int i = 0; i < n_atoms; ++i) {
    s.species.push_back(elements[rng.integer(elements.size())]);
  }
  if (periodic) {
    Mat3 cell = Mat3::identity();
    // Mild random shear keeps the cell generic but well-conditioned.
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        cell(a, b) += rng.uniform(-0.08, 0.08);
      }
    }
    for (int r = 0; r < 3; ++r) cell.set_row(r, cell.row(r) * edge);
    s.cell = cell;
  }

  for (int i = 0; i < n_atoms; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < 2000 && !placed; ++attempt) {
      Vec3 pos;
      if (periodic) {
        pos = frac_to_cart(*s.cell, Vec3{rng.uniform(), rng.uniform(), rng.uniform()});
      } else {
        pos = Vec3{rng.uniform(0.0, edge), rng.uniform(0.0, edge), rng.uniform(0.0, edge)};
      }
      bool ok = true;
      for (const Vec3& q : s.positions) {
        const double d = periodic ? norm(minimum_image_displacement(*s.cell, q, pos))
                                  : norm(pos - q);
        if (d < kMinSep) {
          ok = false;
          break;
        }
      }
      if (ok) {
        s.positions.push_back(pos);
        placed = true;
      }
    }
    if (!placed) {
      throw PackingInfeasible("random test structure: placement failed; box too small");
    }
  }
  validate_structure(s);
  return s;
}

SymmetryReport verify_symmetries(const ModelHypers& hypers, int n_trials, std::uint64_t seed) {
  validate_hypers(hypers);
  if (n_trials < 1) throw InvalidInput("verify_symmetries: n_trials must be at least 1");

  const std::vector<int> element_pool{3, 6, 8, 16};
  SymmetryReport report;
  report.trials = n_trials;

  for (int trial = 0; trial < n_trials; ++trial) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(trial)));
    const bool periodic = rng.uniform() < 0.5;
    const int n_atoms = 2 + static_cast<int>(rng.integer(7));  // 2..8
    std::vector<int> elements;
    const int n_elem = 1 + static_cast<int>(rng.integer(2));
    for (int i = 0; i < n_elem; ++i) {
      elements.push_back(element_pool[rng.integer(element_pool.size())]);
    }
    std::sort(elements.begin(), elements.end());
    elements.erase(std::unique(elements.begin(), elements.end()), elements.end());

    const Structure s = random_test_structure(rng, elements, n_atoms, periodic);
    const std::size_t n = static_cast<std::size_t>(s.size());
    const PotentialParams params =
        init_params(hypers, elements, derive_seed(seed, 1000u + static_cast<std::uint64_t>(trial)));

    const double e0 = total_energy(s, params);
    const std::vector<Vec3> f0 = forces(s, params);
    const double fscale = force_scale(f0);

    // Rotation: every lattice vector and position transforms as v -> R v.
    const Mat3 rot = random_rotation(rng);
    Structure sr = s;
    if (sr.cell) {
      Mat3 c = *sr.cell;
      for (int r = 0; r < 3; ++r) c.set_row(r, rot * c.row(r));
      sr.cell = c;
    }
    for (Vec3& p : sr.positions) p = rot * p;
    const double er = total_energy(sr, params);
    const std::vector<Vec3> fr = forces(sr, params);
    report.max_energy_dev = std::max(report.max_energy_dev, energy_dev(e0, er));
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 expected = rot * f0[i];
      const Vec3 diff = fr[i] - expected;
      report.max_force_dev = std::max(
          {report.max_force_dev, std::abs(diff.x) / fscale, std::abs(diff.y) / fscale,
           std::abs(diff.z) / fscale});
    }

    // Translation.
    const Vec3 t{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
    Structure st = s;
    for (Vec3& p : st.positions) p += t;
    const double et = total_energy(st, params);
    const std::vector<Vec3> ft = forces(st, params);
    report.max_energy_dev = std::max(report.max_energy_dev, energy_dev(e0, et));
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 diff = ft[i] - f0[i];
      report.max_force_dev = std::max(
          {report.max_force_dev, std::abs(diff.x) / fscale, std::abs(diff.y) / fscale,
           std::abs(diff.z) / fscale});
    }

    // Permutation.
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    for (std::size_t i = perm.size(); i > 1; --i) {
      std::swap(perm[i - 1], perm[rng.integer(i)]);
    }
    Structure sp = s;
    for (std::size_t i = 0; i < n; ++i) {
      sp.species[i] = s.species[perm[i]];
      sp.positions[i] = s.positions[perm[i]];
    }
    const double ep = total_energy(sp, params);
    const std::vector<Vec3> fp = forces(sp, params);
    report.max_energy_dev = std::max(report.max_energy_dev, energy_dev(e0, ep));
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 diff = fp[i] - f0[perm[i]];
      report.max_force_dev = std::max(
          {report.max_force_dev, std::abs(diff.x) / fscale, std::abs(diff.y) / fscale,
           std::abs(diff.z) / fscale});
    }

    // Extensivity.
    if (periodic) {
      const Structure s8 = make_supercell(s, 2, 2, 2);
      const double e8 = total_energy(s8, params);
      report.max_extensivity_dev =
          std::max(report.max_extensivity_dev,
                   std::abs(e8 - 8.0 * e0) / std::max(std::abs(8.0 * e0), 1e-4));
    }
  }
  return report;
}

}  // namespace pesgen

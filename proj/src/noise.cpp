#include "pesgen/noise.hpp"

#include <cmath>
#include <string>

#include "pesgen/error.hpp"

namespace pesgen {

void validate_noise_spec(const NoiseSpec& spec) {
  // d_max = 0 is allowed so zero-noise training sets can be constructed.
  if (!(spec.d_max >= 0.0)) throw InvalidInput("noise: d_max must be >= 0");
  if (!(spec.gamma_max >= 0.0)) throw InvalidInput("noise: gamma_max must be >= 0");
  if (!(spec.k > 0.0)) throw InvalidInput("noise: k must be > 0");
  if (!(spec.rep_m >= 0.0)) throw InvalidInput("noise: rep_m must be >= 0");
  if (spec.rep_n < 2) throw InvalidInput("noise: rep_n must be >= 2 (C1 continuity at rep_rc)");
  if (!(spec.rep_rc > 0.0)) throw InvalidInput("noise: rep_rc must be > 0");
  if (spec.n_noise_per_structure < 1)
    throw InvalidInput("noise: n_noise_per_structure must be >= 1");
}

std::vector<Vec3> sample_displacements(const Structure& s, double d_max, Rng& rng) {
  if (!(d_max >= 0.0)) throw InvalidInput("d_max must be >= 0");
  std::vector<Vec3> disp(static_cast<std::size_t>(s.size()));
  for (Vec3& d : disp) {
    const Vec3 dir = rng.unit_vector();
    const double mag = d_max * rng.uniform();
    d = dir * mag;
  }
  return disp;
}

Mat3 sample_strain(double gamma_max, Rng& rng) {
  if (!(gamma_max >= 0.0)) throw InvalidInput("gamma_max must be >= 0");
  const double xx = rng.uniform(-gamma_max, gamma_max);
  const double yy = rng.uniform(-gamma_max, gamma_max);
  const double zz = rng.uniform(-gamma_max, gamma_max);
  const double xy = rng.uniform(-gamma_max, gamma_max);
  const double xz = rng.uniform(-gamma_max, gamma_max);
  const double yz = rng.uniform(-gamma_max, gamma_max);
  Mat3 g;
  g(0, 0) = xx;
  g(1, 1) = yy;
  g(2, 2) = zz;
  g(0, 1) = g(1, 0) = xy;
  g(0, 2) = g(2, 0) = xz;
  g(1, 2) = g(2, 1) = yz;
  return g;
}

Structure apply_noise(const Structure& s, const std::vector<Vec3>& disp, const Mat3& strain) {
  validate_structure(s);
  if (disp.size() != s.species.size())
    throw InvalidInput("displacement list length does not match atom count");
  for (const Vec3& d : disp)
    if (!std::isfinite(d.x) || !std::isfinite(d.y) || !std::isfinite(d.z))
      throw InvalidInput("non-finite displacement");
  if (!s.periodic()) {
    if (max_abs(strain) != 0.0)
      throw InvalidInput("nonzero strain applied to a non-periodic structure");
    Structure out = s;
    for (std::size_t i = 0; i < disp.size(); ++i) out.positions[i] += disp[i];
    return out;
  }
  const Mat3& cell = *s.cell;
  const Mat3 deform = Mat3::identity() + strain;
  Mat3 new_cell;
  for (int r = 0; r < 3; ++r) new_cell.set_row(r, deform * cell.row(r));
  Structure out = s;
  out.cell = new_cell;
  const Mat3 inv = cell.inverse();
  for (std::size_t i = 0; i < disp.size(); ++i) {
    const Vec3 f = s.positions[i] * inv;
    out.positions[i] = f * new_cell + disp[i];
  }
  return wrap_positions(out);
}

std::vector<Vec3> harmonic_force_targets(const std::vector<Vec3>& disp, double k) {
  std::vector<Vec3> f(disp.size());
  for (std::size_t i = 0; i < disp.size(); ++i) f[i] = disp[i] * (-k);
  return f;
}

double repulsive_energy(double r, double rep_m, int rep_n, double rep_rc) {
  if (!(r > 0.0)) throw InvalidInput("repulsive_energy: r must be > 0");
  if (r >= rep_rc) return 0.0;
  const double t = 1.0 - r * r / (rep_rc * rep_rc);
  return rep_m * std::pow(t, rep_n);
}

std::vector<Vec3> repulsive_force_targets(const Structure& noised, double rep_m, int rep_n,
                                          double rep_rc) {
  const NeighborList nl = build_neighbor_list(noised, rep_rc);
  std::vector<Vec3> f(static_cast<std::size_t>(noised.size()));
  for (int i = 0; i < noised.size(); ++i) {
    Vec3 acc;
    for (const Neighbor& nb : nl.atoms[static_cast<std::size_t>(i)]) {
      const double t = 1.0 - nb.r * nb.r / (rep_rc * rep_rc);
      // g'(r) < 0 inside the cutoff; force on i is g'(r) * unit(i->j),
      // pointing away from j.
      const double dg = -2.0 * rep_m * rep_n * nb.r / (rep_rc * rep_rc) *
                        std::pow(t, rep_n - 1);
      acc += nb.unit * dg;
    }
    f[static_cast<std::size_t>(i)] = acc;
  }
  return f;
}

Mat3 stress_target(const Mat3& strain, double K_normal, double K_shear) {
  if (!is_symmetric(strain, 1e-12)) throw InvalidInput("stress_target: strain must be symmetric");
  Mat3 sigma;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) sigma(a, b) = (a == b ? K_normal : K_shear) * strain(a, b);
  return sigma;
}

TrainingSample make_training_sample(const Structure& s, const NoiseSpec& spec, Rng& rng) {
  validate_structure(s);
  validate_noise_spec(spec);
  TrainingSample sample;
  const double u = rng.open_unit();
  sample.noise_scale = u;
  const std::vector<Vec3> disp = sample_displacements(s, spec.d_max * u, rng);
  const Mat3 strain = s.periodic() ? sample_strain(spec.gamma_max * u, rng) : Mat3::zero();
  sample.strain = strain;
  sample.noised = apply_noise(s, disp, strain);

  const int n = s.size();
  sample.displacements.resize(static_cast<std::size_t>(n));
  if (s.periodic()) {
    const Mat3 inv = s.cell->inverse();
    const Mat3& new_cell = *sample.noised.cell;
    for (int i = 0; i < n; ++i) {
      const Vec3 affine = (s.positions[static_cast<std::size_t>(i)] * inv) * new_cell;
      sample.displacements[static_cast<std::size_t>(i)] = minimum_image_displacement(
          new_cell, affine, sample.noised.positions[static_cast<std::size_t>(i)]);
    }
  } else {
    Vec3 mean;
    for (const Vec3& d : disp) mean += d;
    mean *= 1.0 / static_cast<double>(n);
    for (int i = 0; i < n; ++i)
      sample.displacements[static_cast<std::size_t>(i)] = disp[static_cast<std::size_t>(i)] - mean;
  }

  sample.target_forces = harmonic_force_targets(sample.displacements, spec.k);
  const std::vector<Vec3> rep =
      repulsive_force_targets(sample.noised, spec.rep_m, spec.rep_n, spec.rep_rc);
  for (int i = 0; i < n; ++i)
    sample.target_forces[static_cast<std::size_t>(i)] += rep[static_cast<std::size_t>(i)];

  sample.target_stress =
      s.periodic() ? stress_target(strain, spec.K_normal, spec.K_shear) : Mat3::zero();
  return sample;
}

}  // namespace pesgen

#pragma once

#include <vector>

#include "pesgen/random.hpp"
#include "pesgen/structure.hpp"

namespace pesgen {

/// Settings for corrupting equilibrium structures and building the analytic
/// response targets that supervise training.
struct NoiseSpec {
  double d_max = 0.8;     // max displacement magnitude, A
  double gamma_max = 0.1; // max strain component (periodic only)
  double k = 1.0;         // harmonic force constant, pseudo-energy/A^2
  double rep_m = 2.0;     // repulsion strength
  int rep_n = 2;          // repulsion exponent, >= 2 for C1 continuity at rep_rc
  double rep_rc = 0.7;    // repulsion cutoff, A
  double K_normal = 1.0;  // stress target normal modulus
  double K_shear = 0.5;   // stress target shear modulus
  int n_noise_per_structure = 32;
};

void validate_noise_spec(const NoiseSpec& spec);

/// A noised structure and its pseudo-response supervision targets.
/// `displacements` are recorded in the post-strain frame: minimum-image
/// vectors in the strained cell for periodic samples; for molecules the mean
/// displacement (a rigid translation the model cannot express) is removed.
struct TrainingSample {
  Structure noised;
  std::vector<Vec3> target_forces;
  Mat3 target_stress;  // zero for non-periodic samples
  std::vector<Vec3> displacements;
  Mat3 strain;         // zero for non-periodic samples
  double noise_scale = 0.0;  // per-sample scale u drawn from (0,1]
};

/// Uniform random direction times magnitude uniform on [0, d_max], per atom.
std::vector<Vec3> sample_displacements(const Structure& s, double d_max, Rng& rng);

/// Symmetric strain; the 6 independent components are each uniform on
/// [-gamma_max, gamma_max]. Draw order: xx, yy, zz, xy, xz, yz.
Mat3 sample_strain(double gamma_max, Rng& rng);

/// Strain the cell (cell' = cell (I+gamma)^T, positions mapped affinely),
/// then add per-atom displacements, then wrap. Non-periodic: displace only;
/// nonzero strain on a molecule is an error.
Structure apply_noise(const Structure& s, const std::vector<Vec3>& disp, const Mat3& strain);

/// F_i = -k dr_i.
std::vector<Vec3> harmonic_force_targets(const std::vector<Vec3>& disp, double k);

/// g_c(r) = m (1 - r^2/r_c^2)^n for r < r_c, else 0.
double repulsive_energy(double r, double rep_m, int rep_n, double rep_rc);

/// Pairwise central forces -dg_c/dr_i pushing atoms apart, summed over all
/// neighbors within rep_rc (periodic images included).
std::vector<Vec3> repulsive_force_targets(const Structure& noised, double rep_m, int rep_n,
                                          double rep_rc);

/// Componentwise isotropic stress target: sigma_aa = K_normal gamma_aa,
/// sigma_ab = K_shear gamma_ab for a != b. With the virial convention
/// sigma = (1/V) dE/dgamma this places the pseudo-energy minimum at zero
/// strain, so cell relaxation restores the equilibrium volume.
Mat3 stress_target(const Mat3& strain, double K_normal, double K_shear);

/// Draw a per-sample noise scale u from (0,1], corrupt with effective
/// d_max*u and gamma_max*u, and assemble all targets.
TrainingSample make_training_sample(const Structure& s, const NoiseSpec& spec, Rng& rng);

}  // namespace pesgen

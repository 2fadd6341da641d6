#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pesgen/fire.hpp"
#include "pesgen/potential.hpp"
#include "pesgen/random.hpp"
#include "pesgen/structure.hpp"

namespace pesgen {

struct SpeciesCount {
  int z = 0;
  int count = 0;
};

struct GenSpec {
  std::vector<SpeciesCount> composition;  // element -> number of atoms
  bool pbc = true;
  double min_distance = 0.7;  // lower bound on every pair distance, A
  std::optional<std::pair<double, double>> molar_volume_range;  // A^3 per atom
  double f_tol = 1e-3;
  int max_steps = 2000;
  bool relax_cell = true;
};

void validate_gen_spec(const GenSpec& spec);

struct ElementVolume {
  int z = 0;
  double volume = 0.0;  // A^3 per atom of this element
};

/// No-intercept least squares V_total ~ sum_z n_z * v_z over periodic training
/// structures. Throws InvalidInput when the design matrix is rank deficient,
/// listing the elements that are not covered.
std::vector<ElementVolume> fit_molar_volumes(const std::vector<Structure>& training);

/// One random candidate. Periodic: a random cell (unit cube distorted by a
/// random strain up to 0.3, resampled until every perpendicular width is at
/// least 0.5 * V^(1/3), then scaled to the target volume) holding atoms placed
/// by rejection sampling under the min_distance bound (minimum image). The
/// target volume is N * U(v_lo, v_hi) when molar_volume_range is set,
/// otherwise sum_z n_z * v_z jittered +-20%. Molecular: atoms in a cube-shaped
/// open box sized from the per-atom volume, plain distances.
/// Throws PackingInfeasible when the retry budget runs out.
Structure random_structure(const GenSpec& spec, const std::vector<ElementVolume>& volumes,
                           Rng& rng);

/// FIRE relaxation of s on the pseudo-PES of p, with convergence settings
/// taken from spec (cell dofs active when spec.relax_cell and s is periodic).
RelaxationResult fire_relax(const Structure& s, const PotentialParams& p, const GenSpec& spec);

struct GenSample {
  std::uint64_t seed = 0;  // per-sample rng seed (derived from the master seed)
  RelaxationResult result;
};

struct GenFailure {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::string message;
};

struct GenBatch {
  std::vector<GenSample> samples;    // sorted by pseudo_energy_per_atom
  std::vector<GenFailure> failures;  // samples that raised an error
};

/// n_samples independent random_structure -> fire_relax runs. Sample i uses
/// the rng stream derive_seed(seed, i), so a batch split across workers gives
/// the same results as a serial run. Per-sample errors are collected in
/// failures; they never abort the batch. volumes feeds random_structure when
/// the spec has no molar_volume_range.
GenBatch generate(const PotentialParams& p, const GenSpec& spec, std::size_t n_samples,
                  std::uint64_t seed, const std::vector<ElementVolume>& volumes = {});

}  // namespace pesgen

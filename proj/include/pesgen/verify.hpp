#pragma once

#include <cstdint>
#include <vector>

#include "pesgen/potential.hpp"
#include "pesgen/random.hpp"
#include "pesgen/structure.hpp"

namespace pesgen {

/// Uniform random proper rotation (quaternion method).
Mat3 random_rotation(Rng& rng);

/// Well-separated random structure for self-checks: n_atoms atoms with
/// species drawn from `elements`, pair distances >= 1.2 A, periodic cells
/// mildly sheared.
Structure random_test_structure(Rng& rng, const std::vector<int>& elements, int n_atoms,
                                bool periodic);

struct SymmetryReport {
  // Deviations are normalized: energies relative to max(|E|, 1e-4), forces
  // relative to max(max |F| component, 1).
  double max_energy_dev = 0.0;        // rotation + translation + permutation
  double max_force_dev = 0.0;         // force equivariance under the same ops
  double max_extensivity_dev = 0.0;   // E(2x2x2 supercell) vs 8 E(cell)
  int trials = 0;
};

/// Random-structure, random-parameter invariance sweep: each trial applies a
/// rotation, a translation, and a permutation, and (periodic trials) checks
/// extensivity on a 2x2x2 supercell.
SymmetryReport verify_symmetries(const ModelHypers& hypers, int n_trials, std::uint64_t seed);

}  // namespace pesgen

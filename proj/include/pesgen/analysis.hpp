#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "pesgen/fire.hpp"
#include "pesgen/structure.hpp"

namespace pesgen {

struct HullPoint {
  double x = 0.0;     // composition fraction in [0, 1]
  double e_ex = 0.0;  // pseudo excess energy per atom
  std::string structure_ref;
};

/// e - x * e_A - (1 - x) * e_B, all per atom. x is the fraction of A.
double excess_energy(double e_per_atom, double x, double e_A, double e_B);

struct HullResult {
  std::vector<bool> on_hull;  // per input point: no convex combination of
                              // other points lies strictly below it at its x
  std::vector<int> vertices;  // indices of the envelope's corner points, by x
};

/// Lower convex envelope in (x, e_ex). Requires endmembers at x = 0 and
/// x = 1. Points lying exactly on an envelope segment (collinear) count as
/// on-hull.
HullResult lower_convex_hull(const std::vector<HullPoint>& points);

struct Fingerprint {
  double r_max = 0.0;
  int bins = 0;
  double smearing = 0.0;
  std::vector<int> species;  // sorted unique atomic numbers
  // One smeared pair-distance histogram per species pair (a <= b), ordered
  // (species[0],species[0]), (species[0],species[1]), ..., each `bins` long,
  // normalized per atom.
  std::vector<std::vector<double>> histograms;
  std::vector<double> composition;  // fraction of each entry of `species`
  std::optional<double> volume_per_atom;
};

/// Gaussian-smeared radial distribution fingerprint; rotation, translation,
/// permutation, and supercell invariant by construction.
Fingerprint structure_fingerprint(const Structure& s, double r_max, int bins, double smearing);

struct MatchSpec {
  double r_max = 6.0;
  int bins = 120;
  double smearing = 0.1;
  double tol_v = 0.1;   // max/min volume-per-atom ratio minus 1
  double tol_f = 0.12;  // L2 distance between unit-normalized fingerprints
};

struct MatchResult {
  bool matched = false;
  double distance = 0.0;  // fingerprint distance (inf when species sets differ)
};

/// matched iff compositions are proportional, volumes per atom agree within
/// tol_v (periodic structures), and the fingerprint distance is below tol_f.
MatchResult match_structures(const Structure& a, const Structure& b, const MatchSpec& spec);

struct PcaResult {
  std::vector<std::array<double, 2>> coords;  // one row per input row
  std::array<double, 2> explained_variance{{0.0, 0.0}};
  std::array<double, 2> explained_fraction{{0.0, 0.0}};
};

/// Mean-centered PCA of per-element embedding rows; first two components,
/// sign fixed so each component's largest-magnitude loading is positive.
PcaResult embedding_pca(const std::vector<std::vector<double>>& table);

struct EnergyVolumeRow {
  std::optional<double> molar_volume;  // empty for non-periodic results
  double energy_per_atom = 0.0;
  int n_atoms = 0;
  std::string label;
};

std::vector<EnergyVolumeRow> energy_volume_table(const std::vector<RelaxationResult>& results,
                                                 const std::vector<std::string>& labels = {});

/// RMSD between two equal-length point sets after optimal rigid alignment
/// (translation plus proper rotation, Kabsch).
double aligned_rmsd(const std::vector<Vec3>& a, const std::vector<Vec3>& b);

// CSV writers with fixed headers.
void write_hull_csv(std::ostream& os, const std::vector<HullPoint>& points,
                    const HullResult& hull);
void write_energy_volume_csv(std::ostream& os, const std::vector<EnergyVolumeRow>& rows);
void write_pca_csv(std::ostream& os, const std::vector<int>& elements, const PcaResult& pca);

}  // namespace pesgen

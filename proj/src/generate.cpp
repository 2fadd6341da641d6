#include "pesgen/generate.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>

#include "pesgen/elements.hpp"
#include "pesgen/error.hpp"

namespace pesgen {

namespace {

constexpr int kShapeAttempts = 1000;
constexpr int kPlaceAttemptsPerAtom = 200;
constexpr int kStructureRestarts = 40;
constexpr double kDefaultAtomVolume = 10.0;  // A^3, used only for molecular boxes

int total_atoms(const GenSpec& spec) {
  int n = 0;
  for (const SpeciesCount& sc : spec.composition) n += sc.count;
  return n;
}

std::vector<int> species_list(const GenSpec& spec) {
  std::vector<SpeciesCount> comp = spec.composition;
  std::sort(comp.begin(), comp.end(),
            [](const SpeciesCount& a, const SpeciesCount& b) { return a.z < b.z; });
  std::vector<int> species;
  for (const SpeciesCount& sc : comp) {
    for (int i = 0; i < sc.count; ++i) species.push_back(sc.z);
  }
  return species;
}

double lookup_volume(const std::vector<ElementVolume>& volumes, int z) {
  for (const ElementVolume& ev : volumes) {
    if (ev.z == z) return ev.volume;
  }
  throw InvalidInput("no fitted molar volume for element " + element_symbol(z) +
                     "; supply molar_volume_range or fit volumes covering it");
}

// Target cell volume in A^3 for one candidate; consumes exactly one uniform.
double draw_target_volume(const GenSpec& spec, const std::vector<ElementVolume>& volumes,
                          Rng& rng) {
  const int n = total_atoms(spec);
  if (spec.molar_volume_range) {
    return n * rng.uniform(spec.molar_volume_range->first, spec.molar_volume_range->second);
  }
  double v = 0.0;
  for (const SpeciesCount& sc : spec.composition) {
    v += sc.count * lookup_volume(volumes, sc.z);
  }
  return v * rng.uniform(0.8, 1.2);
}

Mat3 sample_cell_shape(double target_volume, Rng& rng) {
  const double min_width = 0.5 * std::cbrt(target_volume);
  for (int attempt = 0; attempt < kShapeAttempts; ++attempt) {
    Mat3 cell = Mat3::identity();
    // Symmetric strain, components uniform in [-0.3, 0.3].
    const double gxx = rng.uniform(-0.3, 0.3);
    const double gyy = rng.uniform(-0.3, 0.3);
    const double gzz = rng.uniform(-0.3, 0.3);
    const double gxy = rng.uniform(-0.3, 0.3);
    const double gxz = rng.uniform(-0.3, 0.3);
    const double gyz = rng.uniform(-0.3, 0.3);
    cell(0, 0) += gxx;
    cell(1, 1) += gyy;
    cell(2, 2) += gzz;
    cell(0, 1) += gxy;
    cell(1, 0) += gxy;
    cell(0, 2) += gxz;
    cell(2, 0) += gxz;
    cell(1, 2) += gyz;
    cell(2, 1) += gyz;
    const double det = cell.det();
    if (det < 0.1) continue;
    const double scale = std::cbrt(target_volume / det);
    for (int r = 0; r < 3; ++r) cell.set_row(r, cell.row(r) * scale);
    const Vec3 widths = perpendicular_widths(cell);
    if (widths.x >= min_width && widths.y >= min_width && widths.z >= min_width) return cell;
  }
  // Extremely unlikely; a cube always satisfies the width bound.
  Mat3 cube = Mat3::identity();
  const double edge = std::cbrt(target_volume);
  for (int r = 0; r < 3; ++r) cube.set_row(r, cube.row(r) * edge);
  return cube;
}

bool place_atoms_periodic(const Mat3& cell, const std::vector<int>& species, double min_distance,
                          Rng& rng, std::vector<Vec3>& out) {
  out.clear();
  for (std::size_t i = 0; i < species.size(); ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlaceAttemptsPerAtom; ++attempt) {
      const Vec3 frac{rng.uniform(), rng.uniform(), rng.uniform()};
      const Vec3 pos = frac_to_cart(cell, frac);
      bool ok = true;
      for (const Vec3& q : out) {
        if (norm(minimum_image_displacement(cell, q, pos)) < min_distance) {
          ok = false;
          break;
        }
      }
      if (ok) {
        out.push_back(pos);
        placed = true;
        break;
      }
    }
    if (!placed) return false;
  }
  return true;
}

bool place_atoms_box(double edge, const std::vector<int>& species, double min_distance, Rng& rng,
                     std::vector<Vec3>& out) {
  out.clear();
  for (std::size_t i = 0; i < species.size(); ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlaceAttemptsPerAtom; ++attempt) {
      const Vec3 pos{rng.uniform(0.0, edge), rng.uniform(0.0, edge), rng.uniform(0.0, edge)};
      bool ok = true;
      for (const Vec3& q : out) {
        if (norm(pos - q) < min_distance) {
          ok = false;
          break;
        }
      }
      if (ok) {
        out.push_back(pos);
        placed = true;
        break;
      }
    }
    if (!placed) return false;
  }
  return true;
}

}  // namespace

void validate_gen_spec(const GenSpec& spec) {
  if (spec.composition.empty()) throw InvalidInput("gen spec: composition is empty");
  std::set<int> seen;
  for (const SpeciesCount& sc : spec.composition) {
    if (!is_valid_atomic_number(sc.z)) {
      throw InvalidInput("gen spec: invalid atomic number " + std::to_string(sc.z));
    }
    if (sc.count < 1) {
      throw InvalidInput("gen spec: count for element " + element_symbol(sc.z) +
                         " must be at least 1");
    }
    if (!seen.insert(sc.z).second) {
      throw InvalidInput("gen spec: element " + element_symbol(sc.z) + " listed twice");
    }
  }
  if (!(spec.min_distance > 0.0)) throw InvalidInput("gen spec: min_distance must be positive");
  if (spec.molar_volume_range) {
    const auto& [lo, hi] = *spec.molar_volume_range;
    if (!(lo > 0.0) || !(hi >= lo)) {
      throw InvalidInput("gen spec: molar_volume_range must satisfy 0 < v_lo <= v_hi");
    }
  }
  if (!(spec.f_tol > 0.0)) throw InvalidInput("gen spec: f_tol must be positive");
  if (spec.max_steps < 0) throw InvalidInput("gen spec: max_steps must be non-negative");
}

std::vector<ElementVolume> fit_molar_volumes(const std::vector<Structure>& training) {
  if (training.empty()) throw InvalidInput("molar volume fit: no training structures");
  std::map<int, int> column;  // z -> column index
  for (const Structure& s : training) {
    if (!s.periodic()) {
      throw InvalidInput("molar volume fit: all training structures must be periodic");
    }
    for (int z : s.species) column.emplace(z, 0);
  }
  int idx = 0;
  for (auto& [z, col] : column) col = idx++;
  const int n_elem = idx;
  const int n_struct = static_cast<int>(training.size());
  if (n_struct < n_elem) {
    throw InvalidInput("molar volume fit: need at least " + std::to_string(n_elem) +
                       " structures for " + std::to_string(n_elem) + " elements, got " +
                       std::to_string(n_struct));
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_struct, n_elem);
  Eigen::VectorXd b(n_struct);
  for (int r = 0; r < n_struct; ++r) {
    const Structure& s = training[static_cast<std::size_t>(r)];
    for (int z : s.species) a(r, column.at(z)) += 1.0;
    b(r) = cell_volume(*s.cell);
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < n_elem) {
    // Report which elements the data cannot pin down. A column of zeros means
    // the element never appears; otherwise the compositions are collinear.
    std::string missing;
    for (const auto& [z, col] : column) {
      if (a.col(col).cwiseAbs().maxCoeff() == 0.0) {
        if (!missing.empty()) missing += ", ";
        missing += element_symbol(z);
      }
    }
    if (missing.empty()) {
      for (const auto& [z, col] : column) {
        if (!missing.empty()) missing += ", ";
        missing += element_symbol(z);
      }
      throw InvalidInput(
          "molar volume fit: compositions are collinear; cannot separate per-element volumes "
          "for: " +
          missing);
    }
    throw InvalidInput("molar volume fit: design matrix is rank deficient; uncovered elements: " +
                       missing);
  }

  const Eigen::VectorXd x = qr.solve(b);
  std::vector<ElementVolume> out;
  out.reserve(static_cast<std::size_t>(n_elem));
  for (const auto& [z, col] : column) out.push_back({z, x(col)});
  return out;
}

Structure random_structure(const GenSpec& spec, const std::vector<ElementVolume>& volumes,
                           Rng& rng) {
  validate_gen_spec(spec);
  const std::vector<int> species = species_list(spec);
  const int n = total_atoms(spec);

  Structure s;
  s.species = species;
  if (spec.pbc) {
    for (int restart = 0; restart < kStructureRestarts; ++restart) {
      const double volume = draw_target_volume(spec, volumes, rng);
      const Mat3 cell = sample_cell_shape(volume, rng);
      std::vector<Vec3> pos;
      if (place_atoms_periodic(cell, species, spec.min_distance, rng, pos)) {
        s.cell = cell;
        s.positions = std::move(pos);
        validate_structure(s);
        return s;
      }
    }
    throw PackingInfeasible(
        "could not place " + std::to_string(n) + " atoms with min_distance " +
        std::to_string(spec.min_distance) +
        " A; try a larger molar volume or a smaller min_distance");
  }

  double v_atom = kDefaultAtomVolume;
  if (spec.molar_volume_range) {
    v_atom = 0.5 * (spec.molar_volume_range->first + spec.molar_volume_range->second);
  } else if (!volumes.empty()) {
    double v = 0.0;
    bool covered = true;
    for (const SpeciesCount& sc : spec.composition) {
      bool found = false;
      for (const ElementVolume& ev : volumes) {
        if (ev.z == sc.z) {
          v += sc.count * ev.volume;
          found = true;
          break;
        }
      }
      if (!found) {
        covered = false;
        break;
      }
    }
    if (covered) v_atom = v / n;
  }
  const double edge = std::cbrt(n * v_atom);
  for (int restart = 0; restart < kStructureRestarts; ++restart) {
    std::vector<Vec3> pos;
    if (place_atoms_box(edge, species, spec.min_distance, rng, pos)) {
      s.positions = std::move(pos);
      validate_structure(s);
      return s;
    }
  }
  throw PackingInfeasible("could not place " + std::to_string(n) +
                          " atoms in a box of edge " + std::to_string(edge) +
                          " A with min_distance " + std::to_string(spec.min_distance) +
                          " A; try a larger molar volume or a smaller min_distance");
}

RelaxationResult fire_relax(const Structure& s, const PotentialParams& p, const GenSpec& spec) {
  FireOptions opt;
  opt.f_tol = spec.f_tol;
  opt.max_steps = spec.max_steps;
  opt.relax_cell = spec.relax_cell && s.periodic();
  PotentialPes model(p);
  return fire_relax(s, model, opt);
}

GenBatch generate(const PotentialParams& p, const GenSpec& spec, std::size_t n_samples,
                  std::uint64_t seed, const std::vector<ElementVolume>& volumes) {
  if (n_samples < 1) throw InvalidInput("generate: n_samples must be at least 1");
  validate_gen_spec(spec);
  validate_params(p);

  GenBatch batch;
  for (std::size_t i = 0; i < n_samples; ++i) {
    const std::uint64_t sample_seed = derive_seed(seed, i);
    try {
      Rng rng(sample_seed);
      const Structure start = random_structure(spec, volumes, rng);
      GenSample sample;
      sample.seed = sample_seed;
      sample.result = fire_relax(start, p, spec);
      batch.samples.push_back(std::move(sample));
    } catch (const Error& e) {
      batch.failures.push_back({i, sample_seed, e.what()});
    }
  }
  std::sort(batch.samples.begin(), batch.samples.end(), [](const GenSample& a, const GenSample& b) {
    if (a.result.pseudo_energy_per_atom != b.result.pseudo_energy_per_atom) {
      return a.result.pseudo_energy_per_atom < b.result.pseudo_energy_per_atom;
    }
    return a.seed < b.seed;
  });
  return batch;
}

}  // namespace pesgen

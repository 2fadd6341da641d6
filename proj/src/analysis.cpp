#include "pesgen/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "pesgen/elements.hpp"
#include "pesgen/error.hpp"
#include "pesgen/extxyz.hpp"

namespace pesgen {

namespace {

constexpr double kHullEps = 1e-9;
constexpr double kEndmemberEps = 1e-12;

double cross2(double ox, double oy, double ax, double ay, double bx, double by) {
  return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox);
}

// Sorted (species, count) pairs for composition comparisons.
std::vector<std::pair<int, int>> composition_counts(const Structure& s) {
  std::map<int, int> counts;
  for (int z : s.species) ++counts[z];
  return {counts.begin(), counts.end()};
}

}  // namespace

double excess_energy(double e_per_atom, double x, double e_A, double e_B) {
  return e_per_atom - x * e_A - (1.0 - x) * e_B;
}

HullResult lower_convex_hull(const std::vector<HullPoint>& points) {
  const std::size_t n = points.size();
  bool have_left = false;
  bool have_right = false;
  for (const HullPoint& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.e_ex)) {
      throw InvalidInput("hull: non-finite point (" + p.structure_ref + ")");
    }
    if (p.x < -kEndmemberEps || p.x > 1.0 + kEndmemberEps) {
      throw InvalidInput("hull: composition fraction " + format_double(p.x) +
                         " outside [0, 1] (" + p.structure_ref + ")");
    }
    if (p.x <= kEndmemberEps) have_left = true;
    if (p.x >= 1.0 - kEndmemberEps) have_right = true;
  }
  if (!have_left || !have_right) {
    throw InvalidInput("hull: endmembers at x = 0 and x = 1 are required");
  }

  // Lowest point per distinct x, keeping the first index on exact ties.
  std::map<double, int> lowest;
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = lowest.emplace(points[i].x, static_cast<int>(i));
    if (!inserted && points[i].e_ex < points[static_cast<std::size_t>(it->second)].e_ex) {
      it->second = static_cast<int>(i);
    }
  }

  // Monotone chain over the per-x minima; collinear interior points are not
  // vertices (they still get on_hull = true below).
  std::vector<int> chain;
  for (const auto& [x, idx] : lowest) {
    while (chain.size() >= 2) {
      const HullPoint& o = points[static_cast<std::size_t>(chain[chain.size() - 2])];
      const HullPoint& a = points[static_cast<std::size_t>(chain[chain.size() - 1])];
      const HullPoint& b = points[static_cast<std::size_t>(idx)];
      if (cross2(o.x, o.e_ex, a.x, a.e_ex, b.x, b.e_ex) <= 0.0) {
        chain.pop_back();
      } else {
        break;
      }
    }
    chain.push_back(idx);
  }

  // Envelope value at x by linear interpolation between chain vertices.
  auto envelope = [&](double x) {
    std::size_t hi = 1;
    while (hi + 1 < chain.size() && points[static_cast<std::size_t>(chain[hi])].x < x) ++hi;
    const HullPoint& a = points[static_cast<std::size_t>(chain[hi - 1])];
    const HullPoint& b = points[static_cast<std::size_t>(chain[hi])];
    if (x <= a.x) return a.e_ex;
    if (x >= b.x) return b.e_ex;
    const double t = (x - a.x) / (b.x - a.x);
    return (1.0 - t) * a.e_ex + t * b.e_ex;
  };

  HullResult res;
  res.on_hull.resize(n, false);
  if (chain.size() == 1) {
    // Single distinct x can only happen without both endmembers; unreachable.
    res.on_hull.assign(n, true);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      res.on_hull[i] = points[i].e_ex <= envelope(points[i].x) + kHullEps;
    }
  }
  res.vertices = chain;
  return res;
}

Fingerprint structure_fingerprint(const Structure& s, double r_max, int bins, double smearing) {
  validate_structure(s);
  if (!(r_max > 0.0)) throw InvalidInput("fingerprint: r_max must be positive");
  if (bins < 1) throw InvalidInput("fingerprint: bins must be at least 1");
  if (!(smearing > 0.0)) throw InvalidInput("fingerprint: smearing must be positive");

  Fingerprint fp;
  fp.r_max = r_max;
  fp.bins = bins;
  fp.smearing = smearing;
  fp.species = s.species;
  std::sort(fp.species.begin(), fp.species.end());
  fp.species.erase(std::unique(fp.species.begin(), fp.species.end()), fp.species.end());
  const int n_sp = static_cast<int>(fp.species.size());
  const int n_channels = n_sp * (n_sp + 1) / 2;
  fp.histograms.assign(static_cast<std::size_t>(n_channels),
                       std::vector<double>(static_cast<std::size_t>(bins), 0.0));

  auto species_index = [&](int z) {
    return static_cast<int>(std::lower_bound(fp.species.begin(), fp.species.end(), z) -
                            fp.species.begin());
  };
  // Channel for the unordered species pair (ia <= ib), upper-triangular order.
  auto channel = [&](int ia, int ib) {
    if (ia > ib) std::swap(ia, ib);
    return ia * n_sp - ia * (ia - 1) / 2 + (ib - ia);
  };

  const double dr = r_max / bins;
  const double window = 6.0 * smearing;
  const double inv_two_s2 = 1.0 / (2.0 * smearing * smearing);
  const NeighborList nl = build_neighbor_list(s, r_max);
  const std::size_t n_atoms = static_cast<std::size_t>(s.size());
  for (std::size_t i = 0; i < n_atoms; ++i) {
    const int ia = species_index(s.species[i]);
    for (const Neighbor& nb : nl.atoms[i]) {
      const int c = channel(ia, species_index(s.species[nb.j]));
      std::vector<double>& h = fp.histograms[static_cast<std::size_t>(c)];
      const int lo = std::max(0, static_cast<int>(std::floor((nb.r - window) / dr - 0.5)));
      const int hi = std::min(bins - 1, static_cast<int>(std::ceil((nb.r + window) / dr - 0.5)));
      for (int b = lo; b <= hi; ++b) {
        const double rc = (b + 0.5) * dr;
        const double d = nb.r - rc;
        h[static_cast<std::size_t>(b)] += std::exp(-d * d * inv_two_s2);
      }
    }
  }
  const double inv_n = 1.0 / static_cast<double>(s.size());
  for (auto& h : fp.histograms) {
    for (double& v : h) v *= inv_n;
  }

  fp.composition.resize(static_cast<std::size_t>(n_sp), 0.0);
  for (int z : s.species) fp.composition[static_cast<std::size_t>(species_index(z))] += inv_n;
  if (s.periodic()) fp.volume_per_atom = cell_volume(*s.cell) / static_cast<double>(s.size());
  return fp;
}

MatchResult match_structures(const Structure& a, const Structure& b, const MatchSpec& spec) {
  const auto ca = composition_counts(a);
  const auto cb = composition_counts(b);
  MatchResult res;
  if (ca.size() != cb.size()) {
    res.distance = std::numeric_limits<double>::infinity();
    return res;
  }
  bool proportional = true;
  const long long na = static_cast<long long>(a.size());
  const long long nb = static_cast<long long>(b.size());
  for (std::size_t i = 0; i < ca.size(); ++i) {
    if (ca[i].first != cb[i].first) {
      res.distance = std::numeric_limits<double>::infinity();
      return res;
    }
    if (static_cast<long long>(ca[i].second) * nb != static_cast<long long>(cb[i].second) * na) {
      proportional = false;
    }
  }

  const Fingerprint fa = structure_fingerprint(a, spec.r_max, spec.bins, spec.smearing);
  const Fingerprint fb = structure_fingerprint(b, spec.r_max, spec.bins, spec.smearing);
  auto flat_unit = [](const Fingerprint& f) {
    std::vector<double> v;
    for (const auto& h : f.histograms) v.insert(v.end(), h.begin(), h.end());
    double norm2 = 0.0;
    for (double x : v) norm2 += x * x;
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (double& x : v) x *= inv;
    }
    return v;
  };
  const std::vector<double> va = flat_unit(fa);
  const std::vector<double> vb = flat_unit(fb);
  double d2 = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) {
    const double d = va[i] - vb[i];
    d2 += d * d;
  }
  res.distance = std::sqrt(d2);

  bool volume_ok = true;
  if (a.periodic() != b.periodic()) {
    volume_ok = false;
  } else if (a.periodic()) {
    const double va_at = *fa.volume_per_atom;
    const double vb_at = *fb.volume_per_atom;
    const double ratio = std::max(va_at, vb_at) / std::min(va_at, vb_at);
    volume_ok = ratio - 1.0 <= spec.tol_v;
  }
  res.matched = proportional && volume_ok && res.distance < spec.tol_f;
  return res;
}

PcaResult embedding_pca(const std::vector<std::vector<double>>& table) {
  const std::size_t n = table.size();
  if (n < 3) throw InvalidInput("embedding PCA: need at least 3 elements");
  const std::size_t d = table[0].size();
  if (d < 2) throw Unsupported("embedding PCA: needs an embedding dimension of at least 2");
  for (const auto& row : table) {
    if (row.size() != d) throw InvalidInput("embedding PCA: ragged embedding table");
  }

  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = table[i][j];
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  x.rowwise() -= mean;
  const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw NumericalError("embedding PCA: eigensolve failed");

  PcaResult res;
  double total = 0.0;
  for (Eigen::Index j = 0; j < eig.eigenvalues().size(); ++j) {
    total += std::max(0.0, eig.eigenvalues()(j));
  }
  Eigen::MatrixXd comps(d, 2);
  for (int k = 0; k < 2; ++k) {
    const Eigen::Index col = static_cast<Eigen::Index>(d) - 1 - k;
    Eigen::VectorXd v = eig.eigenvectors().col(col);
    // Sign convention: the largest-magnitude loading is positive.
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v(imax) < 0.0) v = -v;
    comps.col(k) = v;
    res.explained_variance[static_cast<std::size_t>(k)] = std::max(0.0, eig.eigenvalues()(col));
    res.explained_fraction[static_cast<std::size_t>(k)] =
        total > 0.0 ? res.explained_variance[static_cast<std::size_t>(k)] / total : 0.0;
  }
  const Eigen::MatrixXd proj = x * comps;
  res.coords.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    res.coords[i] = {proj(static_cast<Eigen::Index>(i), 0), proj(static_cast<Eigen::Index>(i), 1)};
  }
  return res;
}

std::vector<EnergyVolumeRow> energy_volume_table(const std::vector<RelaxationResult>& results,
                                                 const std::vector<std::string>& labels) {
  if (!labels.empty() && labels.size() != results.size()) {
    throw InvalidInput("energy-volume table: label count does not match result count");
  }
  std::vector<EnergyVolumeRow> rows;
  rows.reserve(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    const RelaxationResult& r = results[i];
    EnergyVolumeRow row;
    row.n_atoms = static_cast<int>(r.structure.size());
    row.energy_per_atom = r.pseudo_energy_per_atom;
    if (r.structure.periodic()) {
      row.molar_volume = cell_volume(*r.structure.cell) / static_cast<double>(r.structure.size());
    }
    row.label = labels.empty() ? std::to_string(i) : labels[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

double aligned_rmsd(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.size() != b.size()) throw InvalidInput("aligned RMSD: point sets differ in size");
  if (a.empty()) throw InvalidInput("aligned RMSD: empty point sets");
  const std::size_t n = a.size();
  Vec3 ca{0, 0, 0};
  Vec3 cb{0, 0, 0};
  for (std::size_t i = 0; i < n; ++i) {
    ca += a[i];
    cb += b[i];
  }
  ca *= 1.0 / static_cast<double>(n);
  cb *= 1.0 / static_cast<double>(n);

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 pa = a[i] - ca;
    const Vec3 pb = b[i] - cb;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) h(r, c) += pa[r] * pb[c];
    }
  }
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix3d rot = svd.matrixV() * d * svd.matrixU().transpose();

  double ssq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 pa = a[i] - ca;
    const Vec3 pb = b[i] - cb;
    for (int r = 0; r < 3; ++r) {
      const double e = rot(r, 0) * pa.x + rot(r, 1) * pa.y + rot(r, 2) * pa.z - pb[r];
      ssq += e * e;
    }
  }
  return std::sqrt(ssq / static_cast<double>(n));
}

void write_hull_csv(std::ostream& os, const std::vector<HullPoint>& points,
                    const HullResult& hull) {
  if (hull.on_hull.size() != points.size()) {
    throw InvalidInput("hull CSV: flag count does not match point count");
  }
  os << "x,e_ex,on_hull,structure_ref\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    os << format_double(points[i].x) << ',' << format_double(points[i].e_ex) << ','
       << (hull.on_hull[i] ? 1 : 0) << ',' << points[i].structure_ref << '\n';
  }
}

void write_energy_volume_csv(std::ostream& os, const std::vector<EnergyVolumeRow>& rows) {
  os << "molar_volume,energy_per_atom,n_atoms,label\n";
  for (const EnergyVolumeRow& row : rows) {
    if (row.molar_volume) os << format_double(*row.molar_volume);
    os << ',' << format_double(row.energy_per_atom) << ',' << row.n_atoms << ',' << row.label
       << '\n';
  }
}

void write_pca_csv(std::ostream& os, const std::vector<int>& elements, const PcaResult& pca) {
  if (elements.size() != pca.coords.size()) {
    throw InvalidInput("PCA CSV: element count does not match coordinate count");
  }
  os << "element,pc1,pc2\n";
  for (std::size_t i = 0; i < elements.size(); ++i) {
    os << element_symbol(elements[i]) << ',' << format_double(pca.coords[i][0]) << ','
       << format_double(pca.coords[i][1]) << '\n';
  }
}

}  // namespace pesgen

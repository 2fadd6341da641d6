#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pesgen/random.hpp"
#include "pesgen/structure.hpp"
#include "pesgen/tape.hpp"

namespace pesgen {

struct ModelHypers {
  double r_cut = 4.5;
  int n_max = 6;       // radial basis size
  int l_max = 3;       // max angular degree
  int nu_max = 3;      // max body order, 2 or 3
  int n_embedding = 1; // element embedding dimension
  int hidden_width = 32;  // 0 = linear readout
  std::string activation = "tanh";
};

void validate_hypers(const ModelHypers& h);

/// Everything the model learns plus its fixed hyperparameters. MLP readout:
/// E_i = w2 . act(W1 B_i + b1) + b2 (hidden_width > 0), or w2 . B_i + b2.
struct PotentialParams {
  ModelHypers hypers;
  std::vector<int> elements;  // atomic numbers covered, sorted ascending
  std::vector<std::vector<double>> embeddings;  // per element, length n_embedding
  std::vector<std::vector<double>> w1;          // hidden_width rows, n_features columns
  std::vector<double> b1;                       // hidden_width
  std::vector<double> w2;                       // hidden_width (or n_features when linear)
  double b2 = 0.0;

  int element_index(int z) const;  // throws ConfigError if z is not covered
  int n_channels() const { return hypers.n_embedding * hypers.n_embedding; }
  int n_features() const;
  int n_learnable() const;
};

void validate_params(const PotentialParams& p);

/// Learnable parameters flattened in a fixed order: embeddings (element-major),
/// W1 row-major, b1, w2, b2. This order is shared by the trainer and tests.
std::vector<double> flatten_params(const PotentialParams& p);
void unflatten_params(PotentialParams& p, const std::vector<double>& flat);

/// Cartesian monomial table up to l_max: exponents, multinomial coefficient
/// l!/(lx! ly! lz!), and a recurrence edge (monomial = u[axis] * parent).
struct AngularTable {
  struct Entry {
    int lx, ly, lz, l;
    double coef;
    int parent, axis;
  };
  std::vector<Entry> entries;          // degree-ascending; (0,0,0) first
  std::vector<std::vector<int>> by_l;  // entry ids per total degree l
};
AngularTable make_angular_table(int l_max);

// --- plain double-valued building blocks (reference path; no derivatives) ---

/// R_n(r) = sin(n pi r / r_cut) / r * f_cut(r), f_cut = (cos(pi r/r_cut)+1)/2,
/// for n = 1..n_max; identically zero for r >= r_cut.
std::vector<double> radial_basis(double r, int n_max, double r_cut);

/// L_l(u) = u_x^lx u_y^ly u_z^lz.
double angular_basis(const Vec3& u, int lx, int ly, int lz);

/// Outer product theta_i x theta_j flattened row-major.
std::vector<double> edge_channel_weight(const std::vector<double>& theta_i,
                                        const std::vector<double>& theta_j);

/// Per-atom A features; layout [(c*n_max + n)*n_angular + m] with m indexing
/// the AngularTable entries.
std::vector<std::vector<double>> a_features(const Structure& s, const NeighborList& nl,
                                            const PotentialParams& p);

/// Per-atom invariant features fed to the MLP: first the nu=2 block
/// [(c*n_max + n)*(l_max+1) + l], then (nu_max >= 3) the nu=3 block over
/// radial pairs n < n' [(c*n_pairs + pair)*(l_max+1) + l].
std::vector<std::vector<double>> b_features(const std::vector<std::vector<double>>& A,
                                            const ModelHypers& h);

double atomic_energy(const std::vector<double>& B_i, const PotentialParams& p);
double total_energy(const Structure& s, const PotentialParams& p);

// --- tape-based differentiable evaluation ---

/// Scalar graph of the total pseudo energy. Positions are inputs; when
/// with_strain, 9 strain components (at 0) transform every edge vector
/// d -> (I + gamma) d so stress comes out of the same backward sweep;
/// learnable parameters are inputs in flatten_params order.
struct EnergyGraph {
  ad::Tape tape;
  int energy = -1;
  std::vector<int> pos_inputs;     // 3N
  std::vector<int> strain_inputs;  // 9 or empty
  std::vector<int> param_inputs;   // n_learnable
};
EnergyGraph build_energy_graph(const Structure& s, const PotentialParams& p, bool with_strain);

/// As build_energy_graph, but reuses g's tape storage (clears, keeps capacity).
void rebuild_energy_graph(EnergyGraph& g, const Structure& s, const PotentialParams& p,
                          bool with_strain);

std::vector<Vec3> forces(const Structure& s, const PotentialParams& p);
Mat3 virial_stress(const Structure& s, const PotentialParams& p);

struct Evaluation {
  double energy = 0.0;
  std::vector<Vec3> forces;
  std::optional<Mat3> stress;  // periodic structures only
};
/// One graph build + one backward sweep: energy, forces, and (periodic) stress.
Evaluation evaluate(const Structure& s, const PotentialParams& p);

/// Random initialization (embeddings positive, Xavier-scaled MLP weights).
PotentialParams init_params(const ModelHypers& h, const std::vector<int>& elements,
                            std::uint64_t seed);

}  // namespace pesgen

#include "pesgen/potential.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "pesgen/elements.hpp"
#include "pesgen/error.hpp"

namespace pesgen {

namespace {
constexpr double kPi = 3.14159265358979323846;

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}
}  // namespace

void validate_hypers(const ModelHypers& h) {
  if (!(h.r_cut > 0.0)) throw ConfigError("model: r_cut must be > 0");
  if (h.n_max < 1) throw ConfigError("model: n_max must be >= 1");
  if (h.l_max < 0) throw ConfigError("model: l_max must be >= 0");
  if (h.nu_max != 2 && h.nu_max != 3) throw ConfigError("model: nu_max must be 2 or 3");
  if (h.n_embedding < 1) throw ConfigError("model: n_embedding must be >= 1");
  if (h.hidden_width < 0) throw ConfigError("model: hidden_width must be >= 0");
  if (h.activation != "tanh")
    throw ConfigError("model: unsupported activation '" + h.activation + "' (only tanh)");
}

int PotentialParams::element_index(int z) const {
  for (std::size_t i = 0; i < elements.size(); ++i)
    if (elements[i] == z) return static_cast<int>(i);
  throw ConfigError("element " + element_symbol(z) + " is not covered by the model");
}

int PotentialParams::n_features() const {
  const int nl = hypers.l_max + 1;
  int f = n_channels() * hypers.n_max * nl;
  if (hypers.nu_max >= 3) f += n_channels() * (hypers.n_max * (hypers.n_max - 1) / 2) * nl;
  return f;
}

int PotentialParams::n_learnable() const {
  const int f = n_features();
  int n = static_cast<int>(elements.size()) * hypers.n_embedding;
  if (hypers.hidden_width > 0)
    n += hypers.hidden_width * f + hypers.hidden_width + hypers.hidden_width + 1;
  else
    n += f + 1;
  return n;
}

void validate_params(const PotentialParams& p) {
  validate_hypers(p.hypers);
  if (p.elements.empty()) throw ConfigError("model covers no elements");
  for (std::size_t i = 0; i < p.elements.size(); ++i) {
    if (!is_valid_atomic_number(p.elements[i])) throw ConfigError("invalid element in model");
    if (i > 0 && p.elements[i] <= p.elements[i - 1])
      throw ConfigError("model element list must be sorted and unique");
  }
  if (p.embeddings.size() != p.elements.size())
    throw ConfigError("embedding table size does not match element list");
  for (const auto& row : p.embeddings)
    if (static_cast<int>(row.size()) != p.hypers.n_embedding)
      throw ConfigError("embedding row has wrong dimension");
  const int f = p.n_features();
  const int h = p.hypers.hidden_width;
  if (h > 0) {
    if (static_cast<int>(p.w1.size()) != h) throw ConfigError("W1 has wrong row count");
    for (const auto& row : p.w1)
      if (static_cast<int>(row.size()) != f) throw ConfigError("W1 row has wrong width");
    if (static_cast<int>(p.b1.size()) != h) throw ConfigError("b1 has wrong size");
    if (static_cast<int>(p.w2.size()) != h) throw ConfigError("w2 has wrong size");
  } else {
    if (!p.w1.empty() || !p.b1.empty()) throw ConfigError("linear readout must not carry W1/b1");
    if (static_cast<int>(p.w2.size()) != f) throw ConfigError("w2 has wrong size");
  }
}

std::vector<double> flatten_params(const PotentialParams& p) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(p.n_learnable()));
  for (const auto& row : p.embeddings) flat.insert(flat.end(), row.begin(), row.end());
  for (const auto& row : p.w1) flat.insert(flat.end(), row.begin(), row.end());
  flat.insert(flat.end(), p.b1.begin(), p.b1.end());
  flat.insert(flat.end(), p.w2.begin(), p.w2.end());
  flat.push_back(p.b2);
  return flat;
}

void unflatten_params(PotentialParams& p, const std::vector<double>& flat) {
  if (static_cast<int>(flat.size()) != p.n_learnable())
    throw InvalidInput("flat parameter vector has wrong length");
  std::size_t k = 0;
  for (auto& row : p.embeddings)
    for (double& v : row) v = flat[k++];
  for (auto& row : p.w1)
    for (double& v : row) v = flat[k++];
  for (double& v : p.b1) v = flat[k++];
  for (double& v : p.w2) v = flat[k++];
  p.b2 = flat[k++];
}

AngularTable make_angular_table(int l_max) {
  AngularTable t;
  t.by_l.resize(static_cast<std::size_t>(l_max) + 1);
  std::map<std::array<int, 3>, int> index;
  for (int l = 0; l <= l_max; ++l) {
    for (int lx = l; lx >= 0; --lx)
      for (int ly = l - lx; ly >= 0; --ly) {
        const int lz = l - lx - ly;
        AngularTable::Entry e;
        e.lx = lx;
        e.ly = ly;
        e.lz = lz;
        e.l = l;
        e.coef = factorial(l) / (factorial(lx) * factorial(ly) * factorial(lz));
        if (l == 0) {
          e.parent = -1;
          e.axis = -1;
        } else if (lx > 0) {
          e.parent = index.at({lx - 1, ly, lz});
          e.axis = 0;
        } else if (ly > 0) {
          e.parent = index.at({lx, ly - 1, lz});
          e.axis = 1;
        } else {
          e.parent = index.at({lx, ly, lz - 1});
          e.axis = 2;
        }
        const int id = static_cast<int>(t.entries.size());
        index[{lx, ly, lz}] = id;
        t.entries.push_back(e);
        t.by_l[static_cast<std::size_t>(l)].push_back(id);
      }
  }
  return t;
}

std::vector<double> radial_basis(double r, int n_max, double r_cut) {
  if (!(r > 0.0)) throw InvalidInput("radial_basis: r must be > 0");
  std::vector<double> out(static_cast<std::size_t>(n_max), 0.0);
  if (r >= r_cut) return out;
  const double fc = 0.5 * (std::cos(kPi * r / r_cut) + 1.0);
  for (int n = 1; n <= n_max; ++n)
    out[static_cast<std::size_t>(n - 1)] = std::sin(n * kPi * r / r_cut) / r * fc;
  return out;
}

double angular_basis(const Vec3& u, int lx, int ly, int lz) {
  double v = 1.0;
  for (int i = 0; i < lx; ++i) v *= u.x;
  for (int i = 0; i < ly; ++i) v *= u.y;
  for (int i = 0; i < lz; ++i) v *= u.z;
  return v;
}

std::vector<double> edge_channel_weight(const std::vector<double>& theta_i,
                                        const std::vector<double>& theta_j) {
  if (theta_i.size() != theta_j.size())
    throw InvalidInput("edge_channel_weight: embedding dimensions differ");
  std::vector<double> t;
  t.reserve(theta_i.size() * theta_j.size());
  for (double a : theta_i)
    for (double b : theta_j) t.push_back(a * b);
  return t;
}

std::vector<std::vector<double>> a_features(const Structure& s, const NeighborList& nl,
                                            const PotentialParams& p) {
  validate_params(p);
  const ModelHypers& h = p.hypers;
  const AngularTable table = make_angular_table(h.l_max);
  const int n_ang = static_cast<int>(table.entries.size());
  const int nc = p.n_channels();
  const int per_atom = nc * h.n_max * n_ang;
  std::vector<std::vector<double>> A(static_cast<std::size_t>(s.size()),
                                     std::vector<double>(static_cast<std::size_t>(per_atom), 0.0));
  std::vector<double> mono(static_cast<std::size_t>(n_ang));
  for (int i = 0; i < s.size(); ++i) {
    const auto& theta_i = p.embeddings[static_cast<std::size_t>(
        p.element_index(s.species[static_cast<std::size_t>(i)]))];
    for (const Neighbor& nb : nl.atoms[static_cast<std::size_t>(i)]) {
      const auto& theta_j = p.embeddings[static_cast<std::size_t>(
          p.element_index(s.species[static_cast<std::size_t>(nb.j)]))];
      const std::vector<double> T = edge_channel_weight(theta_i, theta_j);
      const std::vector<double> R = radial_basis(nb.r, h.n_max, h.r_cut);
      mono[0] = 1.0;
      for (int m = 1; m < n_ang; ++m) {
        const auto& e = table.entries[static_cast<std::size_t>(m)];
        mono[static_cast<std::size_t>(m)] =
            nb.unit[e.axis] * mono[static_cast<std::size_t>(e.parent)];
      }
      for (int c = 0; c < nc; ++c)
        for (int n = 0; n < h.n_max; ++n) {
          const double tr = T[static_cast<std::size_t>(c)] * R[static_cast<std::size_t>(n)];
          double* dst =
              A[static_cast<std::size_t>(i)].data() + (c * h.n_max + n) * n_ang;
          for (int m = 0; m < n_ang; ++m) dst[m] += tr * mono[static_cast<std::size_t>(m)];
        }
    }
  }
  return A;
}

std::vector<std::vector<double>> b_features(const std::vector<std::vector<double>>& A,
                                            const ModelHypers& h) {
  validate_hypers(h);
  const AngularTable table = make_angular_table(h.l_max);
  const int n_ang = static_cast<int>(table.entries.size());
  const int nc = h.n_embedding * h.n_embedding;
  const int nl = h.l_max + 1;
  const int n_b2 = nc * h.n_max * nl;
  const int n_pairs = h.n_max * (h.n_max - 1) / 2;
  const int n_feat = n_b2 + (h.nu_max >= 3 ? nc * n_pairs * nl : 0);
  std::vector<std::vector<double>> B(A.size(),
                                     std::vector<double>(static_cast<std::size_t>(n_feat), 0.0));
  for (std::size_t i = 0; i < A.size(); ++i) {
    if (static_cast<int>(A[i].size()) != nc * h.n_max * n_ang)
      throw InvalidInput("b_features: A block has inconsistent size");
    const double* a = A[i].data();
    double* b = B[i].data();
    for (int c = 0; c < nc; ++c)
      for (int n = 0; n < h.n_max; ++n) {
        const double* an = a + (c * h.n_max + n) * n_ang;
        for (int l = 0; l <= h.l_max; ++l) {
          double acc = 0.0;
          for (int m : table.by_l[static_cast<std::size_t>(l)])
            acc += table.entries[static_cast<std::size_t>(m)].coef * an[m] * an[m];
          b[(c * h.n_max + n) * nl + l] = acc;
        }
      }
    if (h.nu_max >= 3) {
      int pair = 0;
      for (int n = 0; n < h.n_max; ++n)
        for (int np = n + 1; np < h.n_max; ++np, ++pair)
          for (int c = 0; c < nc; ++c) {
            const double* an = a + (c * h.n_max + n) * n_ang;
            const double* anp = a + (c * h.n_max + np) * n_ang;
            for (int l = 0; l <= h.l_max; ++l) {
              double acc = 0.0;
              for (int m : table.by_l[static_cast<std::size_t>(l)])
                acc += table.entries[static_cast<std::size_t>(m)].coef * an[m] * anp[m];
              b[n_b2 + (c * n_pairs + pair) * nl + l] = acc;
            }
          }
    }
  }
  return B;
}

double atomic_energy(const std::vector<double>& B_i, const PotentialParams& p) {
  validate_params(p);
  if (static_cast<int>(B_i.size()) != p.n_features())
    throw ConfigError("atomic_energy: feature vector size does not match the MLP");
  if (p.hypers.hidden_width > 0) {
    double e = p.b2;
    for (int k = 0; k < p.hypers.hidden_width; ++k) {
      double acc = p.b1[static_cast<std::size_t>(k)];
      const auto& row = p.w1[static_cast<std::size_t>(k)];
      for (std::size_t f = 0; f < B_i.size(); ++f) acc += row[f] * B_i[f];
      e += p.w2[static_cast<std::size_t>(k)] * std::tanh(acc);
    }
    return e;
  }
  double e = p.b2;
  for (std::size_t f = 0; f < B_i.size(); ++f) e += p.w2[f] * B_i[f];
  return e;
}

double total_energy(const Structure& s, const PotentialParams& p) {
  validate_structure(s);
  const NeighborList nl = build_neighbor_list(s, p.hypers.r_cut);
  const auto A = a_features(s, nl, p);
  const auto B = b_features(A, p.hypers);
  double e = 0.0;
  for (const auto& bi : B) e += atomic_energy(bi, p);
  return e;
}

namespace {

/// Shared scaffolding for the tape graph: parameter input ids arranged by
/// group, mirroring flatten_params order.
struct ParamNodes {
  std::vector<std::vector<int>> emb;  // [element][k]
  std::vector<std::vector<int>> w1;   // [hidden][feature]
  std::vector<int> b1;
  std::vector<int> w2;
  int b2 = -1;
};

ParamNodes make_param_inputs(ad::Tape& tape, const PotentialParams& p, std::vector<int>& flat_ids) {
  ParamNodes n;
  const auto push = [&](double v) {
    const int id = tape.input(v);
    flat_ids.push_back(id);
    return id;
  };
  for (const auto& row : p.embeddings) {
    n.emb.emplace_back();
    for (double v : row) n.emb.back().push_back(push(v));
  }
  for (const auto& row : p.w1) {
    n.w1.emplace_back();
    for (double v : row) n.w1.back().push_back(push(v));
  }
  for (double v : p.b1) n.b1.push_back(push(v));
  for (double v : p.w2) n.w2.push_back(push(v));
  n.b2 = push(p.b2);
  return n;
}

}  // namespace

EnergyGraph build_energy_graph(const Structure& s, const PotentialParams& p, bool with_strain) {
  EnergyGraph g;
  rebuild_energy_graph(g, s, p, with_strain);
  return g;
}

void rebuild_energy_graph(EnergyGraph& g, const Structure& s, const PotentialParams& p,
                          bool with_strain) {
  validate_structure(s);
  validate_params(p);
  const ModelHypers& h = p.hypers;
  const NeighborList nl = build_neighbor_list(s, h.r_cut);
  const AngularTable table = make_angular_table(h.l_max);
  const int n_ang = static_cast<int>(table.entries.size());
  const int nc = p.n_channels();
  const int n_atoms = s.size();

  g.tape.clear();
  g.energy = -1;
  g.pos_inputs.clear();
  g.strain_inputs.clear();
  g.param_inputs.clear();
  ad::Tape& tape = g.tape;

  for (int i = 0; i < n_atoms; ++i)
    for (int a = 0; a < 3; ++a)
      g.pos_inputs.push_back(tape.input(s.positions[static_cast<std::size_t>(i)][a]));
  const bool strained = with_strain && s.periodic();
  if (strained)
    for (int a = 0; a < 9; ++a) g.strain_inputs.push_back(tape.input(0.0));
  const ParamNodes params = make_param_inputs(tape, p, g.param_inputs);

  const int one = tape.constant(1.0);
  const int half = tape.constant(0.5);
  std::vector<int> coef_ids(static_cast<std::size_t>(n_ang), -1);
  for (int m = 0; m < n_ang; ++m) {
    const double c = table.entries[static_cast<std::size_t>(m)].coef;
    if (c != 1.0) coef_ids[static_cast<std::size_t>(m)] = tape.constant(c);
  }
  std::vector<int> element_of(static_cast<std::size_t>(n_atoms));
  for (int i = 0; i < n_atoms; ++i)
    element_of[static_cast<std::size_t>(i)] =
        p.element_index(s.species[static_cast<std::size_t>(i)]);

  // A features as node ids; -1 marks an identically-zero entry.
  const int per_atom = nc * h.n_max * n_ang;
  std::vector<int> A(static_cast<std::size_t>(n_atoms) * static_cast<std::size_t>(per_atom), -1);
  std::vector<int> mono(static_cast<std::size_t>(n_ang));
  std::vector<int> R(static_cast<std::size_t>(h.n_max));
  std::vector<int> T(static_cast<std::size_t>(nc));

  for (int i = 0; i < n_atoms; ++i) {
    const auto& emb_i = params.emb[static_cast<std::size_t>(element_of[static_cast<std::size_t>(i)])];
    for (const Neighbor& nb : nl.atoms[static_cast<std::size_t>(i)]) {
      // Edge vector d = r_j + S cell - r_i from position inputs.
      int d[3];
      for (int a = 0; a < 3; ++a) {
        d[a] = tape.sub(g.pos_inputs[static_cast<std::size_t>(3 * nb.j + a)],
                        g.pos_inputs[static_cast<std::size_t>(3 * i + a)]);
        if (nb.shift != std::array<int, 3>{0, 0, 0}) {
          const Vec3 sc = Vec3{static_cast<double>(nb.shift[0]), static_cast<double>(nb.shift[1]),
                               static_cast<double>(nb.shift[2])} *
                          (*s.cell);
          if (sc[a] != 0.0) d[a] = tape.add(d[a], tape.constant(sc[a]));
        }
      }
      if (strained) {
        // d' = (I + gamma) d, gamma at 0; derivative flows into the stress.
        int dp[3];
        for (int a = 0; a < 3; ++a) {
          int acc = d[a];
          for (int b = 0; b < 3; ++b)
            acc = tape.fma(g.strain_inputs[static_cast<std::size_t>(3 * a + b)], d[b], acc);
          dp[a] = acc;
        }
        d[0] = dp[0];
        d[1] = dp[1];
        d[2] = dp[2];
      }
      const int r2 = tape.fma(d[2], d[2], tape.fma(d[1], d[1], tape.square(d[0])));
      const int r = tape.sqrt(r2);
      const int inv_r = tape.div(one, r);
      int u[3];
      for (int a = 0; a < 3; ++a) u[a] = tape.mul(d[a], inv_r);

      const int fc = tape.fma(tape.cos(tape.mul(r, tape.constant(kPi / h.r_cut))), half, half);
      for (int n = 1; n <= h.n_max; ++n) {
        const int sn = tape.sin(tape.mul(r, tape.constant(n * kPi / h.r_cut)));
        R[static_cast<std::size_t>(n - 1)] = tape.mul(tape.mul(sn, inv_r), fc);
      }
      const auto& emb_j =
          params.emb[static_cast<std::size_t>(element_of[static_cast<std::size_t>(nb.j)])];
      for (int a = 0; a < h.n_embedding; ++a)
        for (int b = 0; b < h.n_embedding; ++b)
          T[static_cast<std::size_t>(a * h.n_embedding + b)] =
              tape.mul(emb_i[static_cast<std::size_t>(a)], emb_j[static_cast<std::size_t>(b)]);

      mono[0] = one;
      for (int m = 1; m < n_ang; ++m) {
        const auto& e = table.entries[static_cast<std::size_t>(m)];
        mono[static_cast<std::size_t>(m)] =
            tape.mul(u[e.axis], mono[static_cast<std::size_t>(e.parent)]);
      }
      int* Ai = A.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(per_atom);
      for (int c = 0; c < nc; ++c)
        for (int n = 0; n < h.n_max; ++n) {
          const int tr = tape.mul(T[static_cast<std::size_t>(c)], R[static_cast<std::size_t>(n)]);
          int* slot = Ai + (c * h.n_max + n) * n_ang;
          for (int m = 0; m < n_ang; ++m) {
            slot[m] = slot[m] < 0 ? tape.mul(tr, mono[static_cast<std::size_t>(m)])
                                  : tape.fma(tr, mono[static_cast<std::size_t>(m)], slot[m]);
          }
        }
    }
  }

  int zero = -1;
  const auto zero_node = [&]() {
    if (zero < 0) zero = tape.constant(0.0);
    return zero;
  };
  const int nl_count = h.l_max + 1;
  const int n_pairs = h.n_max * (h.n_max - 1) / 2;
  const int n_feat = p.n_features();

  int e_total = -1;
  std::vector<int> B(static_cast<std::size_t>(n_feat));
  for (int i = 0; i < n_atoms; ++i) {
    const int* Ai = A.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(per_atom);
    for (int c = 0; c < nc; ++c)
      for (int n = 0; n < h.n_max; ++n) {
        const int* an = Ai + (c * h.n_max + n) * n_ang;
        for (int l = 0; l <= h.l_max; ++l) {
          int acc = -1;
          for (int m : table.by_l[static_cast<std::size_t>(l)]) {
            if (an[m] < 0) continue;
            const int sq = tape.square(an[m]);
            const int cid = coef_ids[static_cast<std::size_t>(m)];
            if (cid < 0)
              acc = acc < 0 ? sq : tape.add(acc, sq);
            else
              acc = acc < 0 ? tape.mul(sq, cid) : tape.fma(sq, cid, acc);
          }
          B[static_cast<std::size_t>((c * h.n_max + n) * nl_count + l)] =
              acc < 0 ? zero_node() : acc;
        }
      }
    if (h.nu_max >= 3) {
      const int n_b2 = nc * h.n_max * nl_count;
      int pair = 0;
      for (int n = 0; n < h.n_max; ++n)
        for (int np = n + 1; np < h.n_max; ++np, ++pair)
          for (int c = 0; c < nc; ++c) {
            const int* an = Ai + (c * h.n_max + n) * n_ang;
            const int* anp = Ai + (c * h.n_max + np) * n_ang;
            for (int l = 0; l <= h.l_max; ++l) {
              int acc = -1;
              for (int m : table.by_l[static_cast<std::size_t>(l)]) {
                if (an[m] < 0 || anp[m] < 0) continue;
                const int prod = tape.mul(an[m], anp[m]);
                const int cid = coef_ids[static_cast<std::size_t>(m)];
                if (cid < 0)
                  acc = acc < 0 ? prod : tape.add(acc, prod);
                else
                  acc = acc < 0 ? tape.mul(prod, cid) : tape.fma(prod, cid, acc);
              }
              B[static_cast<std::size_t>(n_b2 + (c * n_pairs + pair) * nl_count + l)] =
                  acc < 0 ? zero_node() : acc;
            }
          }
    }

    int e_i;
    if (h.hidden_width > 0) {
      e_i = params.b2;
      for (int k = 0; k < h.hidden_width; ++k) {
        int acc = params.b1[static_cast<std::size_t>(k)];
        for (int f = 0; f < n_feat; ++f)
          acc = tape.fma(params.w1[static_cast<std::size_t>(k)][static_cast<std::size_t>(f)],
                         B[static_cast<std::size_t>(f)], acc);
        e_i = tape.fma(params.w2[static_cast<std::size_t>(k)], tape.tanh(acc), e_i);
      }
    } else {
      e_i = params.b2;
      for (int f = 0; f < n_feat; ++f)
        e_i = tape.fma(params.w2[static_cast<std::size_t>(f)], B[static_cast<std::size_t>(f)], e_i);
    }
    e_total = e_total < 0 ? e_i : tape.add(e_total, e_i);
  }
  g.energy = e_total;
}

std::vector<Vec3> forces(const Structure& s, const PotentialParams& p) {
  EnergyGraph g = build_energy_graph(s, p, false);
  std::vector<double> adj;
  g.tape.backward(g.energy, adj);
  std::vector<Vec3> f(static_cast<std::size_t>(s.size()));
  for (int i = 0; i < s.size(); ++i)
    for (int a = 0; a < 3; ++a)
      f[static_cast<std::size_t>(i)][a] =
          -adj[static_cast<std::size_t>(g.pos_inputs[static_cast<std::size_t>(3 * i + a)])];
  return f;
}

Mat3 virial_stress(const Structure& s, const PotentialParams& p) {
  if (!s.periodic()) throw Unsupported("virial_stress requires a periodic structure");
  EnergyGraph g = build_energy_graph(s, p, true);
  std::vector<double> adj;
  g.tape.backward(g.energy, adj);
  const double vol = cell_volume(*s.cell);
  Mat3 sigma;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      sigma(a, b) =
          adj[static_cast<std::size_t>(g.strain_inputs[static_cast<std::size_t>(3 * a + b)])] / vol;
  // Rotational invariance makes the virial symmetric up to roundoff; enforce.
  Mat3 sym;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) sym(a, b) = 0.5 * (sigma(a, b) + sigma(b, a));
  return sym;
}

Evaluation evaluate(const Structure& s, const PotentialParams& p) {
  EnergyGraph g = build_energy_graph(s, p, s.periodic());
  std::vector<double> adj;
  g.tape.backward(g.energy, adj);
  Evaluation ev;
  ev.energy = g.tape.value(g.energy);
  ev.forces.resize(static_cast<std::size_t>(s.size()));
  for (int i = 0; i < s.size(); ++i)
    for (int a = 0; a < 3; ++a)
      ev.forces[static_cast<std::size_t>(i)][a] =
          -adj[static_cast<std::size_t>(g.pos_inputs[static_cast<std::size_t>(3 * i + a)])];
  if (s.periodic()) {
    const double vol = cell_volume(*s.cell);
    Mat3 sigma;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        sigma(a, b) = adj[static_cast<std::size_t>(
                          g.strain_inputs[static_cast<std::size_t>(3 * a + b)])] /
                      vol;
    Mat3 sym;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) sym(a, b) = 0.5 * (sigma(a, b) + sigma(b, a));
    ev.stress = sym;
  }
  return ev;
}

PotentialParams init_params(const ModelHypers& h, const std::vector<int>& elements,
                            std::uint64_t seed) {
  validate_hypers(h);
  PotentialParams p;
  p.hypers = h;
  p.elements = elements;
  std::sort(p.elements.begin(), p.elements.end());
  p.elements.erase(std::unique(p.elements.begin(), p.elements.end()), p.elements.end());
  Rng rng(seed);
  for (std::size_t e = 0; e < p.elements.size(); ++e) {
    p.embeddings.emplace_back();
    for (int k = 0; k < h.n_embedding; ++k) p.embeddings.back().push_back(rng.uniform(0.5, 1.5));
  }
  const int f = p.n_features();
  if (h.hidden_width > 0) {
    const double a1 = std::sqrt(6.0 / (f + h.hidden_width));
    for (int k = 0; k < h.hidden_width; ++k) {
      p.w1.emplace_back();
      for (int j = 0; j < f; ++j) p.w1.back().push_back(rng.uniform(-a1, a1));
    }
    p.b1.assign(static_cast<std::size_t>(h.hidden_width), 0.0);
    const double a2 = 0.5 * std::sqrt(6.0 / (h.hidden_width + 1));
    for (int k = 0; k < h.hidden_width; ++k) p.w2.push_back(rng.uniform(-a2, a2));
  } else {
    const double a2 = 0.5 * std::sqrt(6.0 / (f + 1));
    for (int j = 0; j < f; ++j) p.w2.push_back(rng.uniform(-a2, a2));
  }
  p.b2 = 0.0;
  validate_params(p);
  return p;
}

}  // namespace pesgen

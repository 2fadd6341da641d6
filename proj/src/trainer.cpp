#include "pesgen/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "pesgen/checkpoint.hpp"
#include "pesgen/error.hpp"
#include "pesgen/extxyz.hpp"

namespace pesgen {

void validate_train_config(const TrainConfig& cfg) {
  if (!(cfg.beta >= 0.0)) throw ConfigError("train: beta must be >= 0");
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("train: learning_rate must be > 0");
  if (cfg.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (cfg.epochs < 1) throw ConfigError("train: epochs must be >= 1");
  if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0))
    throw ConfigError("train: validation_fraction must be in [0, 1)");
  if (!(cfg.grad_clip >= 0.0)) throw ConfigError("train: grad_clip must be >= 0");
  if (cfg.checkpoint_interval < 0) throw ConfigError("train: checkpoint_interval must be >= 0");
}

double rm_loss(const PotentialParams& p, const TrainingSample& sample, double beta) {
  if (sample.noised.size() != static_cast<int>(sample.target_forces.size()))
    throw InvalidInput("rm_loss: target force list has wrong length");
  const Evaluation ev = evaluate(sample.noised, p);
  double loss = 0.0;
  for (int i = 0; i < sample.noised.size(); ++i) {
    const Vec3 d = ev.forces[static_cast<std::size_t>(i)] -
                   sample.target_forces[static_cast<std::size_t>(i)];
    loss += norm2(d);
  }
  if (sample.noised.periodic() && beta != 0.0) {
    const Mat3 d = *ev.stress - sample.target_stress;
    double ssq = 0.0;
    for (double v : d.m) ssq += v * v;
    loss += beta * ssq;
  }
  return loss;
}

namespace {

struct SampleAccumulator {
  double loss = 0.0;
  double force_ssq = 0.0;
  long force_comps = 0;
  double stress_ssq = 0.0;
  long stress_comps = 0;
};

/// Build loss graph for one sample on top of the (reused) energy graph;
/// optionally run backward and add parameter adjoints into grad (flatten
/// order). Returns the loss value plus RMSE bookkeeping.
SampleAccumulator sample_loss(EnergyGraph& g, const PotentialParams& p,
                              const TrainingSample& sample, double beta,
                              std::vector<double>* grad, std::vector<double>& adj_scratch) {
  const bool periodic = sample.noised.periodic();
  rebuild_energy_graph(g, sample.noised, p, periodic);
  ad::Tape& tape = g.tape;

  std::vector<int> wrt = g.pos_inputs;
  wrt.insert(wrt.end(), g.strain_inputs.begin(), g.strain_inputs.end());
  const std::vector<int> de = tape.append_gradient(g.energy, wrt);

  const int n = sample.noised.size();
  SampleAccumulator acc;
  int loss_node = -1;
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < 3; ++a) {
      // model force = -dE/dx, so F - F~ = -(dE/dx + F~)
      const int diff = tape.add(de[static_cast<std::size_t>(3 * i + a)],
                                tape.constant(sample.target_forces[static_cast<std::size_t>(i)][a]));
      const int sq = tape.square(diff);
      loss_node = loss_node < 0 ? sq : tape.add(loss_node, sq);
      acc.force_ssq += tape.value(sq);
    }
  acc.force_comps = 3L * n;

  if (periodic) {
    const double vol = cell_volume(*sample.noised.cell);
    const int half_over_v = tape.constant(0.5 / vol);
    int stress_node = -1;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const int sym = tape.mul(tape.add(de[static_cast<std::size_t>(3 * n + 3 * a + b)],
                                          de[static_cast<std::size_t>(3 * n + 3 * b + a)]),
                                 half_over_v);
        const int diff = tape.sub(sym, tape.constant(sample.target_stress(a, b)));
        const int sq = tape.square(diff);
        stress_node = stress_node < 0 ? sq : tape.add(stress_node, sq);
        acc.stress_ssq += tape.value(sq);
      }
    acc.stress_comps = 9;
    if (beta != 0.0)
      loss_node = tape.fma(tape.constant(beta), stress_node, loss_node);
  }

  acc.loss = tape.value(loss_node);
  if (grad) {
    tape.backward(loss_node, adj_scratch);
    for (std::size_t k = 0; k < g.param_inputs.size(); ++k)
      (*grad)[k] += adj_scratch[static_cast<std::size_t>(g.param_inputs[k])];
  }
  return acc;
}

}  // namespace

std::vector<double> loss_param_gradient(const PotentialParams& p,
                                        const std::vector<TrainingSample>& batch, double beta) {
  if (batch.empty()) throw InvalidInput("loss_param_gradient: empty batch");
  std::vector<double> grad(static_cast<std::size_t>(p.n_learnable()), 0.0);
  EnergyGraph g;
  std::vector<double> adj;
  for (const TrainingSample& sample : batch) sample_loss(g, p, sample, beta, &grad, adj);
  return grad;
}

DerivativeReport verify_derivatives(const PotentialParams& p, const TrainingSample& sample,
                                    int max_loss_params) {
  DerivativeReport rep;
  const Structure& s = sample.noised;

  {  // forces vs central differences, h = 1e-4 A
    const double h = 1e-4;
    const std::vector<Vec3> f = forces(s, p);
    double scale = 1e-6;
    for (const Vec3& v : f) scale = std::max({scale, std::abs(v.x), std::abs(v.y), std::abs(v.z)});
    for (int i = 0; i < s.size(); ++i)
      for (int a = 0; a < 3; ++a) {
        Structure sp = s, sm = s;
        sp.positions[static_cast<std::size_t>(i)][a] += h;
        sm.positions[static_cast<std::size_t>(i)][a] -= h;
        const double fd = -(total_energy(sp, p) - total_energy(sm, p)) / (2.0 * h);
        rep.max_force_rel_err = std::max(
            rep.max_force_rel_err, std::abs(f[static_cast<std::size_t>(i)][a] - fd) / scale);
      }
  }

  if (s.periodic()) {  // stress vs strain finite differences, h = 1e-5
    const double h = 1e-5;
    const Mat3 sigma = virial_stress(s, p);
    const double vol = cell_volume(*s.cell);
    double scale = std::max(1e-8, max_abs(sigma));
    const std::vector<Vec3> zero_disp(static_cast<std::size_t>(s.size()));
    Mat3 fd_raw;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        Mat3 gp = Mat3::zero(), gm = Mat3::zero();
        gp(a, b) = h;
        gm(a, b) = -h;
        const double ep = total_energy(apply_noise(s, zero_disp, gp), p);
        const double em = total_energy(apply_noise(s, zero_disp, gm), p);
        fd_raw(a, b) = (ep - em) / (2.0 * h * vol);
      }
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        const double fd_sym = 0.5 * (fd_raw(a, b) + fd_raw(b, a));
        rep.max_stress_rel_err =
            std::max(rep.max_stress_rel_err, std::abs(sigma(a, b) - fd_sym) / scale);
      }
  }

  {  // loss parameter gradient vs central differences, h = 1e-5
    const double h = 1e-5;
    const double beta = 1.0;
    const std::vector<double> grad = loss_param_gradient(p, {sample}, beta);
    double scale = 1e-6;
    for (double gv : grad) scale = std::max(scale, std::abs(gv));
    std::vector<double> flat = flatten_params(p);
    PotentialParams q = p;
    // A strided subset keeps the audit fast while touching every parameter
    // block (embeddings first, bias last); 0 checks everything.
    std::size_t stride = 1;
    if (max_loss_params > 0 && flat.size() > static_cast<std::size_t>(max_loss_params)) {
      stride = (flat.size() + static_cast<std::size_t>(max_loss_params) - 1) /
               static_cast<std::size_t>(max_loss_params);
    }
    std::vector<std::size_t> checked;
    for (std::size_t k = 0; k < flat.size(); k += stride) checked.push_back(k);
    if (checked.back() != flat.size() - 1) checked.push_back(flat.size() - 1);
    for (std::size_t k : checked) {
      const double orig = flat[k];
      flat[k] = orig + h;
      unflatten_params(q, flat);
      const double lp = rm_loss(q, sample, beta);
      flat[k] = orig - h;
      unflatten_params(q, flat);
      const double lm = rm_loss(q, sample, beta);
      flat[k] = orig;
      const double fd = (lp - lm) / (2.0 * h);
      rep.max_lossgrad_rel_err = std::max(rep.max_lossgrad_rel_err, std::abs(grad[k] - fd) / scale);
    }
  }
  return rep;
}

namespace {

/// Fold per-feature standardization (moments taken from pilot noise draws)
/// into the first dense layer, so the runtime model stays a plain MLP.
void fold_feature_standardization(PotentialParams& p, const std::vector<Structure>& train_set,
                                  const NoiseSpec& noise, std::uint64_t seed) {
  const int n_feat = p.n_features();
  std::vector<double> mean(static_cast<std::size_t>(n_feat), 0.0);
  std::vector<double> m2(static_cast<std::size_t>(n_feat), 0.0);
  long count = 0;
  Rng rng(derive_seed(seed, 0xFEEDu));
  const int n_pilot = std::max<int>(8, std::min(32, noise.n_noise_per_structure));
  for (int k = 0; k < n_pilot; ++k) {
    const Structure& src = train_set[static_cast<std::size_t>(k) % train_set.size()];
    const TrainingSample sample = make_training_sample(src, noise, rng);
    const NeighborList nl = build_neighbor_list(sample.noised, p.hypers.r_cut);
    const auto B = b_features(a_features(sample.noised, nl, p), p.hypers);
    for (const auto& row : B) {
      ++count;
      for (int f = 0; f < n_feat; ++f) {
        const double x = row[static_cast<std::size_t>(f)];
        const double d = x - mean[static_cast<std::size_t>(f)];
        mean[static_cast<std::size_t>(f)] += d / static_cast<double>(count);
        m2[static_cast<std::size_t>(f)] += d * (x - mean[static_cast<std::size_t>(f)]);
      }
    }
  }
  std::vector<double> inv_std(static_cast<std::size_t>(n_feat), 1.0);
  for (int f = 0; f < n_feat; ++f) {
    const double var = count > 1 ? m2[static_cast<std::size_t>(f)] / (count - 1) : 0.0;
    if (var > 1e-16) inv_std[static_cast<std::size_t>(f)] = 1.0 / std::sqrt(var);
  }
  if (p.hypers.hidden_width > 0) {
    for (int k = 0; k < p.hypers.hidden_width; ++k) {
      double shift = 0.0;
      for (int f = 0; f < n_feat; ++f) {
        double& w = p.w1[static_cast<std::size_t>(k)][static_cast<std::size_t>(f)];
        w *= inv_std[static_cast<std::size_t>(f)];
        shift += w * mean[static_cast<std::size_t>(f)];
      }
      p.b1[static_cast<std::size_t>(k)] -= shift;
    }
  } else {
    for (int f = 0; f < n_feat; ++f)
      p.w2[static_cast<std::size_t>(f)] *= inv_std[static_cast<std::size_t>(f)];
  }
}

double finite_or_throw(double v, const std::string& where) {
  if (!std::isfinite(v))
    throw NumericalError("training diverged: non-finite value at " + where +
                         " (try a lower learning rate)");
  return v;
}

}  // namespace

TrainResult train(const std::vector<Structure>& dataset, const NoiseSpec& noise,
                  const ModelHypers& hypers, const TrainConfig& cfg) {
  if (dataset.empty()) throw InvalidInput("train: dataset is empty");
  for (const Structure& s : dataset) validate_structure(s);
  validate_noise_spec(noise);
  validate_hypers(hypers);
  validate_train_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();

  std::vector<int> elements;
  for (const Structure& s : dataset)
    for (int z : s.species) elements.push_back(z);
  std::sort(elements.begin(), elements.end());
  elements.erase(std::unique(elements.begin(), elements.end()), elements.end());

  // Split structures into train/validation; too small a dataset falls back to
  // fresh-noise validation on the training structures.
  std::vector<int> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  {
    Rng shuffle_rng(derive_seed(cfg.seed, 0x5147u));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.integer(static_cast<std::uint64_t>(i)))]);
  }
  const int n_val = static_cast<int>(cfg.validation_fraction * static_cast<double>(dataset.size()));
  std::vector<Structure> val_set, train_set;
  for (std::size_t i = 0; i < order.size(); ++i)
    (static_cast<int>(i) < n_val ? val_set : train_set)
        .push_back(dataset[static_cast<std::size_t>(order[i])]);
  const bool fresh_noise_validation = val_set.empty();
  const std::vector<Structure>& val_sources = fresh_noise_validation ? train_set : val_set;

  PotentialParams params = init_params(hypers, elements, derive_seed(cfg.seed, 0x1217u));
  fold_feature_standardization(params, train_set, noise, cfg.seed);

  std::vector<double> flat = flatten_params(params);
  const std::size_t n_par = flat.size();
  std::vector<double> m(n_par, 0.0), v(n_par, 0.0);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  TrainResult result;
  result.report.best_val_loss = std::numeric_limits<double>::infinity();
  EnergyGraph scratch_graph;
  std::vector<double> adj_scratch;
  std::vector<double> grad(n_par);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng noise_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    std::vector<TrainingSample> samples;
    samples.reserve(train_set.size() * static_cast<std::size_t>(noise.n_noise_per_structure));
    for (const Structure& s : train_set)
      for (int k = 0; k < noise.n_noise_per_structure; ++k)
        samples.push_back(make_training_sample(s, noise, noise_rng));

    double epoch_loss = 0.0, force_ssq = 0.0, stress_ssq = 0.0;
    long force_comps = 0, stress_comps = 0;
    for (std::size_t start = 0; start < samples.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(samples.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::fill(grad.begin(), grad.end(), 0.0);
      double batch_loss = 0.0;
      for (std::size_t si = start; si < stop; ++si) {
        const SampleAccumulator acc =
            sample_loss(scratch_graph, params, samples[si], cfg.beta, &grad, adj_scratch);
        batch_loss += acc.loss;
        force_ssq += acc.force_ssq;
        force_comps += acc.force_comps;
        stress_ssq += acc.stress_ssq;
        stress_comps += acc.stress_comps;
      }
      finite_or_throw(batch_loss, "epoch " + std::to_string(epoch) + " batch loss");
      epoch_loss += batch_loss;

      if (cfg.grad_clip > 0.0) {
        double norm2_acc = 0.0;
        for (double gv : grad) norm2_acc += gv * gv;
        const double norm = std::sqrt(norm2_acc);
        if (norm > cfg.grad_clip)
          for (double& gv : grad) gv *= cfg.grad_clip / norm;
      }
      ++step;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < n_par; ++k) {
        m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
        v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
        flat[k] -= cfg.learning_rate * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
        finite_or_throw(flat[k], "epoch " + std::to_string(epoch) + " parameter update");
      }
      unflatten_params(params, flat);
    }

    // Validation: held-out structures, or fresh draws for one-shot datasets.
    Rng val_rng(derive_seed(cfg.seed, 0x76000000u + static_cast<std::uint64_t>(epoch)));
    double val_loss = 0.0;
    long val_count = 0;
    for (const Structure& s : val_sources) {
      const int draws = fresh_noise_validation
                            ? std::max(1, noise.n_noise_per_structure / 4)
                            : noise.n_noise_per_structure;
      for (int k = 0; k < draws; ++k) {
        const TrainingSample sample = make_training_sample(s, noise, val_rng);
        val_loss += sample_loss(scratch_graph, params, sample, cfg.beta, nullptr, adj_scratch).loss;
        ++val_count;
      }
    }
    val_loss /= static_cast<double>(std::max<long>(1, val_count));
    finite_or_throw(val_loss, "epoch " + std::to_string(epoch) + " validation loss");

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss / static_cast<double>(samples.size());
    stats.val_loss = val_loss;
    stats.force_rmse =
        force_comps > 0 ? std::sqrt(force_ssq / static_cast<double>(force_comps)) : 0.0;
    stats.stress_rmse =
        stress_comps > 0 ? std::sqrt(stress_ssq / static_cast<double>(stress_comps)) : 0.0;
    result.report.epochs.push_back(stats);

    if (val_loss < result.report.best_val_loss) {
      result.report.best_val_loss = val_loss;
      result.report.best_epoch = epoch;
      result.params = params;
    }
    if (cfg.checkpoint_interval > 0 && !cfg.checkpoint_path.empty() &&
        epoch % cfg.checkpoint_interval == 0)
      save_checkpoint(cfg.checkpoint_path, result.params);
  }

  result.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

void write_train_log(const std::string& path, const TrainReport& report) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "epoch,train_loss,val_loss,force_rmse,stress_rmse\n";
  for (const EpochStats& e : report.epochs)
    out << e.epoch << "," << format_double(e.train_loss) << "," << format_double(e.val_loss) << ","
        << format_double(e.force_rmse) << "," << format_double(e.stress_rmse) << "\n";
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace pesgen

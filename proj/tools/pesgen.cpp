// pesgen: train a pseudo-PES on response-matching targets and generate
// structures by random search + FIRE relaxation on it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pesgen/analysis.hpp"
#include "pesgen/checkpoint.hpp"
#include "pesgen/config.hpp"
#include "pesgen/elements.hpp"
#include "pesgen/error.hpp"
#include "pesgen/extxyz.hpp"
#include "pesgen/generate.hpp"
#include "pesgen/noise.hpp"
#include "pesgen/potential.hpp"
#include "pesgen/trainer.hpp"
#include "pesgen/verify.hpp"

namespace {

using namespace pesgen;

std::vector<Structure> load_structures(const std::string& path) {
  const std::vector<Frame> frames = read_extxyz_file(path);
  if (frames.empty()) throw InvalidInput("no frames in '" + path + "'");
  std::vector<Structure> out;
  out.reserve(frames.size());
  for (const Frame& f : frames) out.push_back(f.structure);
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("failed writing '" + path + "'");
}

// Writes to the file, or to stdout when path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_text_file(path, text);
  }
}

std::string frame_label(const Frame& frame, std::size_t index) {
  if (const std::string* name = frame.find_info("name")) return *name;
  return std::to_string(index);
}

// ---------------------------------------------------------------------------

struct PerturbArgs {
  std::string config_path;
  std::string input;
  std::string output;
  std::uint64_t seed = 0;
  int n_noise = 0;     // 0 = config value
  double d_max = -1.0; // <0 = config value
  double gamma_max = -1.0;
};

int run_perturb(const PerturbArgs& a) {
  RunConfig cfg = a.config_path.empty() ? RunConfig{} : read_config(a.config_path);
  if (a.n_noise > 0) cfg.noise.n_noise_per_structure = a.n_noise;
  if (a.d_max >= 0.0) cfg.noise.d_max = a.d_max;
  if (a.gamma_max >= 0.0) cfg.noise.gamma_max = a.gamma_max;
  validate_noise_spec(cfg.noise);

  const std::vector<Structure> structures = load_structures(a.input);
  std::vector<Frame> out;
  for (std::size_t si = 0; si < structures.size(); ++si) {
    Rng rng(derive_seed(a.seed, si));
    for (int k = 0; k < cfg.noise.n_noise_per_structure; ++k) {
      const TrainingSample sample = make_training_sample(structures[si], cfg.noise, rng);
      Frame frame;
      frame.structure = sample.noised;
      frame.set_info("source", std::to_string(si));
      frame.set_info("sample", std::to_string(k));
      frame.set_info("noise_scale", format_double(sample.noise_scale));
      if (sample.noised.periodic()) {
        frame.set_info("strain", format_mat3_row_major(sample.strain));
        frame.set_info("target_stress", format_mat3_row_major(sample.target_stress));
      }
      frame.vec3_arrays.emplace_back("target_forces", sample.target_forces);
      frame.vec3_arrays.emplace_back("displacement", sample.displacements);
      out.push_back(std::move(frame));
    }
  }
  write_extxyz_file(a.output, out);
  std::cout << "wrote " << out.size() << " noised samples to " << a.output << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string config_path;
  std::string input;
  std::string output = "model.json";
  std::string log_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
  std::optional<double> learning_rate;
  std::optional<int> batch_size;
  std::optional<double> beta;
  std::optional<double> validation_fraction;
};

int run_train(const TrainArgs& a) {
  RunConfig cfg = a.config_path.empty() ? RunConfig{} : read_config(a.config_path);
  if (a.seed) cfg.train.seed = *a.seed;
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (a.learning_rate) cfg.train.learning_rate = *a.learning_rate;
  if (a.batch_size) cfg.train.batch_size = *a.batch_size;
  if (a.beta) cfg.train.beta = *a.beta;
  if (a.validation_fraction) cfg.train.validation_fraction = *a.validation_fraction;
  validate_train_config(cfg.train);

  const std::vector<Structure> dataset = load_structures(a.input);
  std::cerr << "training on " << dataset.size() << " structures, "
            << cfg.noise.n_noise_per_structure << " noise draws each, " << cfg.train.epochs
            << " epochs\n";
  const TrainResult result = train(dataset, cfg.noise, cfg.model, cfg.train);
  save_checkpoint(a.output, result.params);
  if (!a.log_path.empty()) write_train_log(a.log_path, result.report);

  const EpochStats& last = result.report.epochs.back();
  std::cout << "trained " << result.report.epochs.size() << " epochs; best val loss "
            << format_double(result.report.best_val_loss) << " at epoch "
            << result.report.best_epoch << "; final force RMSE "
            << format_double(last.force_rmse) << ", stress RMSE "
            << format_double(last.stress_rmse) << "\n";
  std::cout << "checkpoint written to " << a.output << "\n";
  std::cerr << "wall time " << result.report.wall_seconds << " s\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string config_path;
  std::string model_path;
  std::string output = "generated.extxyz";
  std::string composition;
  std::string fit_volumes_path;
  std::string ev_csv;
  std::optional<std::size_t> n_samples;
  std::optional<std::uint64_t> seed;
  std::optional<double> min_distance;
  std::optional<double> mv_min;
  std::optional<double> mv_max;
  std::optional<double> f_tol;
  std::optional<int> max_steps;
  bool no_pbc = false;
  bool no_relax_cell = false;
};

int run_generate(const GenerateArgs& a) {
  RunConfig cfg = a.config_path.empty() ? RunConfig{} : read_config(a.config_path);
  if (!a.composition.empty()) cfg.gen.composition = parse_composition(a.composition);
  if (a.n_samples) cfg.n_samples = *a.n_samples;
  if (a.seed) cfg.gen_seed = *a.seed;
  if (a.min_distance) cfg.gen.min_distance = *a.min_distance;
  if (a.mv_min.has_value() != a.mv_max.has_value()) {
    throw InvalidInput("--molar-volume-min and --molar-volume-max must be given together");
  }
  if (a.mv_min) cfg.gen.molar_volume_range = std::make_pair(*a.mv_min, *a.mv_max);
  if (a.f_tol) cfg.gen.f_tol = *a.f_tol;
  if (a.max_steps) cfg.gen.max_steps = *a.max_steps;
  if (a.no_pbc) cfg.gen.pbc = false;
  if (a.no_relax_cell) cfg.gen.relax_cell = false;
  if (cfg.gen.composition.empty()) {
    throw InvalidInput("no composition given (use --composition or the config file)");
  }
  validate_gen_spec(cfg.gen);

  const PotentialParams params = load_checkpoint(a.model_path);
  std::vector<ElementVolume> volumes;
  if (!a.fit_volumes_path.empty()) {
    volumes = fit_molar_volumes(load_structures(a.fit_volumes_path));
    for (const ElementVolume& ev : volumes) {
      std::cerr << "fitted molar volume " << element_symbol(ev.z) << ": "
                << format_double(ev.volume) << " A^3/atom\n";
    }
  }

  const GenBatch batch = generate(params, cfg.gen, cfg.n_samples, cfg.gen_seed, volumes);
  for (const GenFailure& f : batch.failures) {
    std::cerr << "sample " << f.index << " (seed " << f.seed << ") failed: " << f.message << "\n";
  }
  if (batch.samples.empty()) {
    throw NumericalError("all " + std::to_string(cfg.n_samples) + " generation samples failed");
  }

  std::vector<Frame> frames;
  std::vector<RelaxationResult> results;
  std::vector<std::string> labels;
  frames.reserve(batch.samples.size());
  for (const GenSample& sample : batch.samples) {
    Frame frame;
    frame.structure = sample.result.structure;
    frame.set_info("pseudo_energy", format_double(sample.result.pseudo_energy));
    frame.set_info("pseudo_energy_per_atom", format_double(sample.result.pseudo_energy_per_atom));
    frame.set_info("converged", sample.result.converged ? "T" : "F");
    frame.set_info("steps", std::to_string(sample.result.steps));
    frame.set_info("seed", std::to_string(sample.seed));
    frame.set_info("max_force_final", format_double(sample.result.max_force_final));
    frames.push_back(std::move(frame));
    results.push_back(sample.result);
    labels.push_back(std::to_string(sample.seed));
  }
  write_extxyz_file(a.output, frames);
  if (!a.ev_csv.empty()) {
    std::ostringstream os;
    write_energy_volume_csv(os, energy_volume_table(results, labels));
    write_text_file(a.ev_csv, os.str());
  }

  std::size_t converged = 0;
  for (const GenSample& s : batch.samples) converged += s.result.converged ? 1 : 0;
  std::cout << "wrote " << frames.size() << " structures to " << a.output << " (" << converged
            << " converged, " << batch.failures.size() << " failed)\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct EvaluateArgs {
  std::string config_path;
  std::string input;
  std::string reference;
  std::string output;  // empty = stdout
  std::optional<double> tol_f;
  std::optional<double> tol_v;
};

int run_evaluate(const EvaluateArgs& a) {
  RunConfig cfg = a.config_path.empty() ? RunConfig{} : read_config(a.config_path);
  if (a.tol_f) cfg.match.tol_f = *a.tol_f;
  if (a.tol_v) cfg.match.tol_v = *a.tol_v;

  const std::vector<Frame> inputs = read_extxyz_file(a.input);
  const std::vector<Frame> refs = read_extxyz_file(a.reference);
  if (inputs.empty()) throw InvalidInput("no frames in '" + a.input + "'");
  if (refs.empty()) throw InvalidInput("no frames in '" + a.reference + "'");

  std::ostringstream os;
  os << "structure,reference,distance,matched\n";
  std::size_t n_matched = 0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    // Best reference: the closest matching one, else the closest overall.
    std::size_t best = 0;
    double best_distance = std::numeric_limits<double>::infinity();
    bool best_matched = false;
    for (std::size_t j = 0; j < refs.size(); ++j) {
      const MatchResult m = match_structures(inputs[i].structure, refs[j].structure, cfg.match);
      const bool better = best_matched == m.matched ? m.distance < best_distance
                                                    : m.matched;
      if (better) {
        best = j;
        best_distance = m.distance;
        best_matched = m.matched;
      }
    }
    n_matched += best_matched ? 1 : 0;
    os << frame_label(inputs[i], i) << ',' << frame_label(refs[best], best) << ','
       << format_double(best_distance) << ',' << (best_matched ? 1 : 0) << '\n';
  }
  emit(a.output, os.str());
  std::cerr << n_matched << " of " << inputs.size() << " structures matched a reference\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct HullArgs {
  std::string config_path;
  std::string input;
  std::string elements;  // "A,B"
  std::string output;    // empty = stdout
};

int run_hull(const HullArgs& a) {
  const std::size_t comma = a.elements.find(',');
  if (comma == std::string::npos || a.elements.find(',', comma + 1) != std::string::npos) {
    throw InvalidInput("--elements expects exactly two symbols, e.g. \"Li,S\"");
  }
  const int z_a = element_number(a.elements.substr(0, comma));
  const int z_b = element_number(a.elements.substr(comma + 1));
  if (z_a == z_b) throw InvalidInput("--elements needs two distinct symbols");

  const std::vector<Frame> frames = read_extxyz_file(a.input);
  if (frames.empty()) throw InvalidInput("no frames in '" + a.input + "'");

  std::vector<double> xs(frames.size());
  std::vector<double> es(frames.size());
  double e_a = std::numeric_limits<double>::infinity();
  double e_b = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = frames[i];
    int n_a = 0;
    int n_b = 0;
    for (int z : f.structure.species) {
      if (z == z_a) ++n_a;
      else if (z == z_b) ++n_b;
      else {
        throw InvalidInput("frame " + std::to_string(i) + " contains " + element_symbol(z) +
                           ", outside the " + element_symbol(z_a) + "-" + element_symbol(z_b) +
                           " system");
      }
    }
    xs[i] = static_cast<double>(n_a) / static_cast<double>(n_a + n_b);
    if (const std::string* e = f.find_info("pseudo_energy_per_atom")) {
      es[i] = std::stod(*e);
    } else if (const std::string* et = f.find_info("pseudo_energy")) {
      es[i] = std::stod(*et) / static_cast<double>(f.structure.size());
    } else {
      throw InvalidInput("frame " + std::to_string(i) +
                         " has no pseudo_energy or pseudo_energy_per_atom metadata");
    }
    if (xs[i] == 1.0) e_a = std::min(e_a, es[i]);
    if (xs[i] == 0.0) e_b = std::min(e_b, es[i]);
  }
  if (!std::isfinite(e_a) || !std::isfinite(e_b)) {
    throw InvalidInput("hull needs pure endmember frames for both elements");
  }

  std::vector<HullPoint> points(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    points[i] = {xs[i], excess_energy(es[i], xs[i], e_a, e_b), frame_label(frames[i], i)};
  }
  const HullResult hull = lower_convex_hull(points);
  std::ostringstream os;
  write_hull_csv(os, points, hull);
  emit(a.output, os.str());
  return 0;
}

// ---------------------------------------------------------------------------

struct PcaArgs {
  std::string model_path;
  std::string output;  // empty = stdout
};

int run_embed_pca(const PcaArgs& a) {
  const PotentialParams params = load_checkpoint(a.model_path);
  const PcaResult pca = embedding_pca(params.embeddings);
  std::ostringstream os;
  write_pca_csv(os, params.elements, pca);
  emit(a.output, os.str());
  std::cerr << "explained variance: pc1 " << format_double(pca.explained_variance[0]) << " ("
            << format_double(100.0 * pca.explained_fraction[0]) << "%), pc2 "
            << format_double(pca.explained_variance[1]) << " ("
            << format_double(100.0 * pca.explained_fraction[1]) << "%)\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  int trials = 8;
  int symmetry_trials = 50;
  int max_loss_params = 200;
};

int run_verify(const VerifyArgs& a) {
  RunConfig cfg = a.config_path.empty() ? RunConfig{} : read_config(a.config_path);
  if (a.trials < 1) throw InvalidInput("--trials must be at least 1");

  bool ok = true;
  auto check = [&ok](const std::string& name, double value, double tol) {
    const bool pass = value < tol;
    ok = ok && pass;
    std::cout << name << " " << format_double(value) << " (tol " << format_double(tol) << ") "
              << (pass ? "PASS" : "FAIL") << "\n";
  };

  DerivativeReport worst;
  for (int t = 0; t < a.trials; ++t) {
    Rng rng(derive_seed(a.seed, 2000u + static_cast<std::uint64_t>(t)));
    const bool periodic = t % 2 == 0;
    const int n_atoms = 2 + static_cast<int>(rng.integer(7));
    const std::vector<int> elements = t % 3 == 0 ? std::vector<int>{6} : std::vector<int>{6, 8};
    const Structure s = random_test_structure(rng, elements, n_atoms, periodic);
    const PotentialParams params =
        init_params(cfg.model, elements, derive_seed(a.seed, 3000u + static_cast<std::uint64_t>(t)));
    const TrainingSample sample = make_training_sample(s, cfg.noise, rng);
    const DerivativeReport rep = verify_derivatives(params, sample, a.max_loss_params);
    worst.max_force_rel_err = std::max(worst.max_force_rel_err, rep.max_force_rel_err);
    worst.max_stress_rel_err = std::max(worst.max_stress_rel_err, rep.max_stress_rel_err);
    worst.max_lossgrad_rel_err = std::max(worst.max_lossgrad_rel_err, rep.max_lossgrad_rel_err);
  }
  check("force_fd_max_rel_err", worst.max_force_rel_err, 1e-5);
  check("stress_fd_max_rel_err", worst.max_stress_rel_err, 1e-4);
  check("lossgrad_fd_max_rel_err", worst.max_lossgrad_rel_err, 1e-4);

  const SymmetryReport sym = verify_symmetries(cfg.model, a.symmetry_trials, derive_seed(a.seed, 1));
  check("symmetry_energy_max_dev", sym.max_energy_dev, 1e-9);
  check("symmetry_force_max_dev", sym.max_force_dev, 1e-8);
  check("extensivity_max_dev", sym.max_extensivity_dev, 1e-8);

  std::cout << (ok ? "all checks passed" : "some checks FAILED") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Response-matching pseudo-PES toolkit: train on synthetic noise, "
               "generate structures by random search + FIRE relaxation"};
  app.require_subcommand(1);

  PerturbArgs pa;
  CLI::App* perturb = app.add_subcommand("perturb", "Emit noised samples and their targets");
  perturb->add_option("--input", pa.input, "equilibrium structures (extxyz)")->required();
  perturb->add_option("--output", pa.output, "noised samples with targets (extxyz)")->required();
  perturb->add_option("--config", pa.config_path, "config file");
  perturb->add_option("--seed", pa.seed, "rng seed");
  perturb->add_option("--n-noise", pa.n_noise, "noise draws per structure");
  perturb->add_option("--d-max", pa.d_max, "max displacement (A)");
  perturb->add_option("--gamma-max", pa.gamma_max, "max strain component");

  TrainArgs ta;
  CLI::App* train_cmd = app.add_subcommand("train", "Fit a pseudo-PES to response targets");
  train_cmd->add_option("--input", ta.input, "training structures (extxyz)")->required();
  train_cmd->add_option("--output", ta.output, "checkpoint path (JSON)");
  train_cmd->add_option("--log", ta.log_path, "training-log CSV path");
  train_cmd->add_option("--config", ta.config_path, "config file");
  train_cmd->add_option("--seed", ta.seed, "rng seed");
  train_cmd->add_option("--epochs", ta.epochs, "training epochs");
  train_cmd->add_option("--learning-rate", ta.learning_rate, "Adam learning rate");
  train_cmd->add_option("--batch-size", ta.batch_size, "samples per optimizer step");
  train_cmd->add_option("--beta", ta.beta, "stress-loss weight");
  train_cmd->add_option("--validation-fraction", ta.validation_fraction,
                        "fraction of structures held out for validation");

  GenerateArgs ga;
  CLI::App* gen_cmd = app.add_subcommand("generate", "Random structure search on the pseudo-PES");
  gen_cmd->add_option("--model", ga.model_path, "checkpoint path")->required();
  gen_cmd->add_option("--output", ga.output, "relaxed structures (extxyz)");
  gen_cmd->add_option("--config", ga.config_path, "config file");
  gen_cmd->add_option("--composition", ga.composition, "e.g. \"C:8\" or \"Li:2,S:1\"");
  gen_cmd->add_option("--n-samples", ga.n_samples, "number of candidates");
  gen_cmd->add_option("--seed", ga.seed, "master rng seed");
  gen_cmd->add_option("--min-distance", ga.min_distance, "pair-distance floor (A)");
  gen_cmd->add_option("--molar-volume-min", ga.mv_min, "per-atom volume low (A^3)");
  gen_cmd->add_option("--molar-volume-max", ga.mv_max, "per-atom volume high (A^3)");
  gen_cmd->add_option("--f-tol", ga.f_tol, "force convergence threshold");
  gen_cmd->add_option("--max-steps", ga.max_steps, "FIRE step budget");
  gen_cmd->add_flag("--no-pbc", ga.no_pbc, "generate molecules instead of crystals");
  gen_cmd->add_flag("--no-relax-cell", ga.no_relax_cell, "keep the cell fixed");
  gen_cmd->add_option("--fit-volumes", ga.fit_volumes_path,
                      "fit per-element molar volumes from these structures (extxyz)");
  gen_cmd->add_option("--ev-csv", ga.ev_csv, "also write an energy-volume CSV");

  EvaluateArgs ea;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "Match structures against references");
  eval_cmd->add_option("--input", ea.input, "structures to evaluate (extxyz)")->required();
  eval_cmd->add_option("--reference", ea.reference, "reference structures (extxyz)")->required();
  eval_cmd->add_option("--output", ea.output, "report CSV (default stdout)");
  eval_cmd->add_option("--config", ea.config_path, "config file");
  eval_cmd->add_option("--tol-f", ea.tol_f, "fingerprint distance threshold");
  eval_cmd->add_option("--tol-v", ea.tol_v, "volume ratio threshold");

  HullArgs ha;
  CLI::App* hull_cmd = app.add_subcommand("hull", "Pseudo convex hull of a binary system");
  hull_cmd->add_option("--input", ha.input, "structures with pseudo_energy metadata (extxyz)")
      ->required();
  hull_cmd->add_option("--elements", ha.elements, "the two endmember symbols, e.g. \"Li,S\"")
      ->required();
  hull_cmd->add_option("--output", ha.output, "hull CSV (default stdout)");
  hull_cmd->add_option("--config", ha.config_path, "config file");

  PcaArgs ca;
  CLI::App* pca_cmd = app.add_subcommand("embed-pca", "PCA of the element embeddings");
  pca_cmd->add_option("--model", ca.model_path, "checkpoint path")->required();
  pca_cmd->add_option("--output", ca.output, "PCA CSV (default stdout)");

  VerifyArgs va;
  CLI::App* verify_cmd = app.add_subcommand("verify", "Derivative and invariance self-checks");
  verify_cmd->add_option("--config", va.config_path, "config file");
  verify_cmd->add_option("--seed", va.seed, "rng seed");
  verify_cmd->add_option("--trials", va.trials, "finite-difference trials");
  verify_cmd->add_option("--symmetry-trials", va.symmetry_trials, "symmetry trials");
  verify_cmd->add_option("--max-loss-params", va.max_loss_params,
                         "parameters audited per loss-gradient check (0 = all)");

  try {
    app.parse(argc, argv);
    if (perturb->parsed()) return run_perturb(pa);
    if (train_cmd->parsed()) return run_train(ta);
    if (gen_cmd->parsed()) return run_generate(ga);
    if (eval_cmd->parsed()) return run_evaluate(ea);
    if (hull_cmd->parsed()) return run_hull(ha);
    if (pca_cmd->parsed()) return run_embed_pca(ca);
    if (verify_cmd->parsed()) return run_verify(va);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const pesgen::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

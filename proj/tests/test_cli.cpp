// End-to-end checks of the command-line tool. The binary path is injected by
// the build as PESGEN_CLI_PATH; commands run via std::system with redirected
// output in a scratch directory under the test's working directory.

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "pesgen/checkpoint.hpp"
#include "pesgen/extxyz.hpp"
#include "pesgen/potential.hpp"
#include "pesgen/structure.hpp"
#include "test_util.hpp"

using namespace pesgen;
using namespace pesgen::testutil;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const std::string kScratch = "cli_scratch";

CliRun run_cli(const std::string& args) {
  std::filesystem::create_directories(kScratch);
  const std::string out_path = kScratch + "/stdout.txt";
  const std::string err_path = kScratch + "/stderr.txt";
  const std::string cmd =
      std::string("\"") + PESGEN_CLI_PATH + "\" " + args + " > " + out_path + " 2> " + err_path;
  const int rc = std::system(cmd.c_str());
  CliRun r;
  if (rc != -1 && WIFEXITED(rc)) r.code = WEXITSTATUS(rc);
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

std::string scratch(const std::string& name) { return kScratch + "/" + name; }

void write_dimer_file(const std::string& path) {
  Frame f;
  f.structure.species = {6, 6};
  f.structure.positions = {{0, 0, 0}, {1.3, 0, 0}};
  write_extxyz_file(path, {f});
}

}  // namespace

TEST_CASE("exit codes: help 0, usage errors 2, runtime errors 1") {
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("train --help").code == 0);
  CHECK(run_cli("").code == 2);                        // a subcommand is required
  CHECK(run_cli("--bogus-flag").code == 2);
  CHECK(run_cli("frobnicate").code == 2);
  CHECK(run_cli("train").code == 2);                   // --input is required
  const CliRun missing =
      run_cli("perturb --input no_such_file.extxyz --output " + scratch("x.extxyz"));
  CHECK(missing.code == 1);
  CHECK(missing.err.find("error:") != std::string::npos);
}

TEST_CASE("perturb emits deterministic noised samples with target columns") {
  std::filesystem::create_directories(kScratch);
  const std::string input = scratch("equilibrium.extxyz");
  Frame f;
  f.structure = diamond_cell(4.4);
  write_extxyz_file(input, {f});

  const std::string out1 = scratch("noised1.extxyz");
  const std::string out2 = scratch("noised2.extxyz");
  const std::string flags = " --seed 3 --n-noise 3 --d-max 0.2 --gamma-max 0.02";
  CHECK(run_cli("perturb --input " + input + " --output " + out1 + flags).code == 0);
  CHECK(run_cli("perturb --input " + input + " --output " + out2 + flags).code == 0);
  CHECK(slurp(out1) == slurp(out2));

  const std::vector<Frame> frames = read_extxyz_file(out1);
  REQUIRE(frames.size() == 3);
  for (const Frame& fr : frames) {
    CHECK(fr.structure.size() == 8);
    REQUIRE(fr.find_array("target_forces") != nullptr);
    REQUIRE(fr.find_array("displacement") != nullptr);
    CHECK(fr.find_info("target_stress") != nullptr);
    CHECK(fr.find_info("noise_scale") != nullptr);
    // Noise actually moved the atoms.
    double max_disp = 0.0;
    for (const Vec3& d : *fr.find_array("displacement")) max_disp = std::max(max_disp, norm(d));
    CHECK(max_disp > 0.0);
    CHECK(max_disp <= 0.2 + 1e-12);
  }

  // A different seed changes the bytes.
  const std::string out3 = scratch("noised3.extxyz");
  CHECK(run_cli("perturb --input " + input + " --output " + out3 +
                " --seed 4 --n-noise 3 --d-max 0.2 --gamma-max 0.02")
            .code == 0);
  CHECK(slurp(out1) != slurp(out3));
}

TEST_CASE("train writes a loadable checkpoint and a log") {
  std::filesystem::create_directories(kScratch);
  const std::string input = scratch("train_mol.extxyz");
  write_dimer_file(input);

  const std::string cfg_path = scratch("tiny.cfg");
  {
    std::ofstream cfg(cfg_path);
    cfg << "[noise]\nn_noise = 4\nd_max = 0.3\n"
        << "[model]\nn_max = 2\nl_max = 1\nhidden_width = 4\n"
        << "[train]\nepochs = 3\nvalidation_fraction = 0\n";
  }
  const std::string model_path = scratch("tiny_model.json");
  const std::string log_path = scratch("tiny_log.csv");
  const CliRun r = run_cli("train --input " + input + " --config " + cfg_path + " --output " +
                           model_path + " --log " + log_path + " --seed 1");
  CHECK(r.code == 0);
  CHECK(r.out.find("checkpoint written") != std::string::npos);

  const PotentialParams params = load_checkpoint(model_path);
  CHECK(params.hypers.n_max == 2);
  CHECK(params.elements == std::vector<int>{6});

  const std::string log = slurp(log_path);
  CHECK(log.rfind("epoch,train_loss,val_loss,force_rmse,stress_rmse\n", 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 4);  // header + 3 epochs
}

TEST_CASE("generate is byte-identical for equal seeds and writes the csv") {
  std::filesystem::create_directories(kScratch);
  ModelHypers h;
  h.n_max = 2;
  h.l_max = 1;
  h.hidden_width = 4;
  const std::string model_path = scratch("gen_model.json");
  save_checkpoint(model_path, init_params(h, {6}, 12));

  const std::string base = " --model " + model_path +
                           " --composition C:3 --n-samples 4 --seed 5"
                           " --molar-volume-min 5 --molar-volume-max 9 --max-steps 30";
  const std::string out1 = scratch("gen1.extxyz");
  const std::string out2 = scratch("gen2.extxyz");
  const std::string csv = scratch("gen_ev.csv");
  const CliRun r1 = run_cli("generate" + base + " --output " + out1 + " --ev-csv " + csv);
  CHECK(r1.code == 0);
  CHECK(run_cli("generate" + base + " --output " + out2).code == 0);
  CHECK(slurp(out1) == slurp(out2));

  const std::vector<Frame> frames = read_extxyz_file(out1);
  REQUIRE(frames.size() == 4);
  double prev = -1e300;
  for (const Frame& fr : frames) {
    REQUIRE(fr.find_info("pseudo_energy_per_atom") != nullptr);
    const double e = std::stod(*fr.find_info("pseudo_energy_per_atom"));
    CHECK(e >= prev);
    prev = e;
    CHECK(fr.find_info("seed") != nullptr);
    CHECK(fr.structure.size() == 3);
  }
  CHECK(slurp(csv).rfind("molar_volume,energy_per_atom,n_atoms,label\n", 0) == 0);

  // A different seed gives different structures.
  const std::string out3 = scratch("gen3.extxyz");
  CHECK(run_cli("generate --model " + model_path +
                " --composition C:3 --n-samples 4 --seed 6"
                " --molar-volume-min 5 --molar-volume-max 9 --max-steps 30 --output " + out3)
            .code == 0);
  CHECK(slurp(out1) != slurp(out3));
}

TEST_CASE("evaluate reports matches in the documented csv") {
  std::filesystem::create_directories(kScratch);
  const std::string inputs = scratch("eval_in.extxyz");
  const std::string refs = scratch("eval_ref.extxyz");
  Frame super;
  super.structure = make_supercell(diamond_cell(4.4), 2, 1, 1);
  super.set_info("name", "candidate");
  Frame lons;
  lons.structure = lonsdaleite_cell(4.4);
  lons.set_info("name", "other");
  write_extxyz_file(inputs, {super, lons});
  Frame ref;
  ref.structure = diamond_cell(4.4);
  ref.set_info("name", "dia");
  write_extxyz_file(refs, {ref});

  const std::string csv = scratch("eval.csv");
  const CliRun r =
      run_cli("evaluate --input " + inputs + " --reference " + refs + " --output " + csv);
  CHECK(r.code == 0);
  const std::string text = slurp(csv);
  CHECK(text.rfind("structure,reference,distance,matched\n", 0) == 0);
  CHECK(text.find("candidate,dia,") != std::string::npos);
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);  // header
  std::getline(lines, line);
  CHECK(line.back() == '1');  // supercell matches
  std::getline(lines, line);
  CHECK(line.back() == '0');  // lonsdaleite does not
  CHECK(r.err.find("1 of 2") != std::string::npos);
}

TEST_CASE("hull builds the csv from frame metadata") {
  std::filesystem::create_directories(kScratch);
  auto frame_with_energy = [](Structure s, double e_per_atom, const std::string& name) {
    Frame f;
    f.structure = std::move(s);
    f.set_info("pseudo_energy_per_atom", format_double(e_per_atom));
    f.set_info("name", name);
    return f;
  };
  Structure pure_c = diamond_cell(4.4);
  Structure pure_si = diamond_cell(6.0);
  for (int& z : pure_si.species) z = 14;
  Structure mixed = diamond_cell(5.0);
  for (std::size_t i = 0; i < 4; ++i) mixed.species[i] = 14;

  const std::string input = scratch("hull_in.extxyz");
  write_extxyz_file(input, {frame_with_energy(pure_c, -1.0, "C"),
                            frame_with_energy(pure_si, -2.0, "Si"),
                            frame_with_energy(mixed, -1.8, "good"),
                            frame_with_energy(mixed, -1.2, "shallow")});

  const std::string csv = scratch("hull.csv");
  const CliRun r = run_cli("hull --input " + input + " --elements C,Si --output " + csv);
  CHECK(r.code == 0);
  const std::string text = slurp(csv);
  CHECK(text.rfind("x,e_ex,on_hull,structure_ref\n", 0) == 0);
  CHECK(text.find(",1,good") != std::string::npos);
  CHECK(text.find(",0,shallow") != std::string::npos);

  CHECK(run_cli("hull --input " + input + " --elements C --output " + csv).code == 1);
  CHECK(run_cli("hull --input " + input + " --elements C,O --output " + csv).code == 1);
}

TEST_CASE("embed-pca writes one row per element") {
  std::filesystem::create_directories(kScratch);
  ModelHypers h;
  h.n_max = 2;
  h.l_max = 1;
  h.n_embedding = 2;
  h.hidden_width = 4;
  const std::string model_path = scratch("pca_model.json");
  save_checkpoint(model_path, init_params(h, {6, 8, 14}, 2));
  const std::string csv = scratch("pca.csv");
  const CliRun r = run_cli("embed-pca --model " + model_path + " --output " + csv);
  CHECK(r.code == 0);
  const std::string text = slurp(csv);
  CHECK(text.rfind("element,pc1,pc2\n", 0) == 0);
  CHECK(text.find("C,") != std::string::npos);
  CHECK(text.find("O,") != std::string::npos);
  CHECK(text.find("Si,") != std::string::npos);
  CHECK(r.err.find("explained variance") != std::string::npos);
}

TEST_CASE("verify passes its own self-checks") {
  const CliRun r = run_cli("verify --trials 2 --symmetry-trials 5 --max-loss-params 20 --seed 1");
  CHECK(r.code == 0);
  CHECK(r.out.find("PASS") != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("all checks passed") != std::string::npos);
}

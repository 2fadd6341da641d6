#include <fstream>
#include <string>

#include "doctest.h"
#include "pesgen/config.hpp"
#include "pesgen/error.hpp"

using namespace pesgen;

TEST_CASE("empty text parses to the documented defaults") {
  const RunConfig cfg = parse_config("");
  CHECK(cfg.noise.d_max == 0.8);
  CHECK(cfg.noise.gamma_max == 0.1);
  CHECK(cfg.noise.k == 1.0);
  CHECK(cfg.noise.n_noise_per_structure == 32);
  CHECK(cfg.model.r_cut == 4.5);
  CHECK(cfg.model.n_max == 6);
  CHECK(cfg.model.l_max == 3);
  CHECK(cfg.model.nu_max == 3);
  CHECK(cfg.model.n_embedding == 1);
  CHECK(cfg.model.hidden_width == 32);
  CHECK(cfg.model.activation == "tanh");
  CHECK(cfg.train.beta == 100.0);
  CHECK(cfg.train.learning_rate == 1e-3);
  CHECK(cfg.train.batch_size == 4);
  CHECK(cfg.train.epochs == 500);
  CHECK(cfg.gen.min_distance == 0.7);
  CHECK(cfg.gen.pbc);
  CHECK(cfg.gen.relax_cell);
  CHECK_FALSE(cfg.gen.molar_volume_range.has_value());
  CHECK(cfg.n_samples == 30);
  CHECK(cfg.match.tol_v == 0.1);
  CHECK(cfg.match.tol_f == 0.12);
}

TEST_CASE("parse after serialize is the identity") {
  RunConfig cfg;
  cfg.noise.d_max = 0.8;
  cfg.noise.n_noise_per_structure = 3;
  cfg.model.n_max = 4;
  cfg.model.l_max = 2;
  cfg.train.beta = 12.5;
  cfg.train.seed = 98765;
  cfg.train.checkpoint_path = "ckpt.json";
  cfg.gen.composition = {{6, 4}, {14, 2}};
  cfg.gen.pbc = false;
  cfg.gen.molar_volume_range = {{3.5, 7.25}};
  cfg.n_samples = 12;
  cfg.gen_seed = 42;
  cfg.match.bins = 90;

  const std::string text = serialize_config(cfg);
  const RunConfig back = parse_config(text);
  CHECK(serialize_config(back) == text);
  CHECK(back.noise.d_max == 0.8);
  CHECK(back.noise.n_noise_per_structure == 3);
  CHECK(back.train.beta == 12.5);
  CHECK(back.train.seed == 98765);
  CHECK(back.train.checkpoint_path == "ckpt.json");
  REQUIRE(back.gen.composition.size() == 2);
  CHECK(back.gen.composition[0].z == 6);
  CHECK(back.gen.composition[0].count == 4);
  CHECK(back.gen.composition[1].z == 14);
  CHECK_FALSE(back.gen.pbc);
  REQUIRE(back.gen.molar_volume_range.has_value());
  CHECK(back.gen.molar_volume_range->first == 3.5);
  CHECK(back.gen.molar_volume_range->second == 7.25);
  CHECK(back.n_samples == 12);
  CHECK(back.gen_seed == 42);
  CHECK(back.match.bins == 90);

  // Serializing the untouched defaults round-trips too.
  const RunConfig def;
  CHECK(serialize_config(parse_config(serialize_config(def))) == serialize_config(def));
}

TEST_CASE("comments, blank lines, and whitespace are tolerated") {
  const std::string text =
      "# experiment manifest\n"
      "\n"
      "[noise]\n"
      "  d_max   =  0.5   # tighter noise\n"
      "\n"
      "[train]\n"
      "epochs = 7\n";
  const RunConfig cfg = parse_config(text);
  CHECK(cfg.noise.d_max == 0.5);
  CHECK(cfg.train.epochs == 7);
}

TEST_CASE("unknown sections and keys are errors with file and line") {
  CHECK_THROWS_WITH_AS(parse_config("[cooking]\n", "run.cfg"),
                       doctest::Contains("run.cfg:1"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[noise]\nd_mx = 0.1\n", "run.cfg"),
                       doctest::Contains("run.cfg:2"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_config("[noise]\nd_mx = 0.1\n", "run.cfg"),
                       doctest::Contains("d_mx"), ConfigError);
  // Key outside any section; malformed header; missing '='.
  CHECK_THROWS_AS(parse_config("d_max = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[noise\nd_max = 0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[noise]\nd_max 0.1\n"), ConfigError);
}

TEST_CASE("bad values report the offending line") {
  CHECK_THROWS_WITH_AS(parse_config("[noise]\nd_max = fast\n"),
                       doctest::Contains("<config>:2"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train]\nepochs = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train]\nseed = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[generate]\npbc = yes\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[generate]\ncomposition = C8\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[generate]\ncomposition = Xx:2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[generate]\ncomposition = C:0\n"), ConfigError);
}

TEST_CASE("molar volume bounds must be set together") {
  CHECK_THROWS_WITH_AS(parse_config("[generate]\nmolar_volume_min = 3.0\n"),
                       doctest::Contains("molar_volume_min and molar_volume_max"), ConfigError);
  CHECK_THROWS_AS(parse_config("[generate]\nmolar_volume_max = 9.0\n"), ConfigError);
  const RunConfig cfg =
      parse_config("[generate]\nmolar_volume_min = 3.0\nmolar_volume_max = 9.0\n");
  REQUIRE(cfg.gen.molar_volume_range.has_value());
  CHECK(cfg.gen.molar_volume_range->first == 3.0);
  CHECK(cfg.gen.molar_volume_range->second == 9.0);
}

TEST_CASE("spec constraints are enforced at parse time") {
  CHECK_THROWS_AS(parse_config("[noise]\nd_max = -0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[noise]\nk = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\nr_cut = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\nactivation = relu6\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[model]\nnu_max = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train]\nbatch_size = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[train]\nvalidation_fraction = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[generate]\nmin_distance = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[generate]\nn_samples = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[match]\nbins = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[match]\ntol_f = 0\n"), ConfigError);
  // d_max = 0 is the legitimate noise-free limit.
  CHECK_NOTHROW(parse_config("[noise]\nd_max = 0\n"));
}

TEST_CASE("composition strings parse symbols and counts") {
  const auto comp = parse_composition(" Li:2 , S:1 ");
  REQUIRE(comp.size() == 2);
  CHECK(comp[0].z == 3);
  CHECK(comp[0].count == 2);
  CHECK(comp[1].z == 16);
  CHECK(comp[1].count == 1);
  CHECK(parse_composition("").empty());
  CHECK_THROWS_AS(parse_composition("C:2,,O:1"), InvalidInput);
  CHECK_THROWS_AS(parse_composition("C"), InvalidInput);
  CHECK_THROWS_AS(parse_composition("C:two"), InvalidInput);
  CHECK(format_composition({{6, 8}, {14, 1}}) == "C:8,Si:1");
}

TEST_CASE("read_config reads a file and reports its path in errors") {
  const std::string path = "test_config_tmp.cfg";
  {
    std::ofstream out(path);
    out << "[train]\nepochs = 3\n";
  }
  const RunConfig cfg = read_config(path);
  CHECK(cfg.train.epochs == 3);
  {
    std::ofstream out(path);
    out << "[train]\nepochs = many\n";
  }
  CHECK_THROWS_WITH_AS(read_config(path), doctest::Contains((path + ":2").c_str()), ConfigError);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_config(path), IoError);
}

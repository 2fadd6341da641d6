#pragma once

#include <cstdint>
#include <string>

#include "pesgen/analysis.hpp"
#include "pesgen/generate.hpp"
#include "pesgen/noise.hpp"
#include "pesgen/potential.hpp"
#include "pesgen/trainer.hpp"

namespace pesgen {

/// One experiment manifest: sectioned key = value text covering the noise
/// model, potential hyperparameters, trainer, generator, and matcher. Every
/// key has a default; unknown sections or keys are hard errors.
struct RunConfig {
  NoiseSpec noise;
  ModelHypers model;
  TrainConfig train;
  GenSpec gen;                   // composition may stay empty until generate runs
  std::size_t n_samples = 30;    // [generate] n_samples
  std::uint64_t gen_seed = 0;    // [generate] seed
  MatchSpec match;
};

/// "C:8" or "Li:2,S:1" -> species counts (symbols, counts >= 1).
std::vector<SpeciesCount> parse_composition(const std::string& text);
std::string format_composition(const std::vector<SpeciesCount>& composition);

/// Parses sectioned key = value text ('#' starts a comment). Unknown keys,
/// bad values, and violated spec constraints all throw ConfigError with the
/// line number.
RunConfig parse_config(const std::string& text, const std::string& source_name = "<config>");
RunConfig read_config(const std::string& path);

/// Canonical form: every section and key, current values. parse o serialize
/// is the identity on RunConfig.
std::string serialize_config(const RunConfig& cfg);

}  // namespace pesgen

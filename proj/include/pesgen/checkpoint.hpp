#pragma once

#include <string>

#include "pesgen/potential.hpp"

namespace pesgen {

/// Model checkpoints are JSON with a format_version field; doubles round-trip
/// bit-exactly (shortest-representation serialization).
void save_checkpoint(const std::string& path, const PotentialParams& p);
PotentialParams load_checkpoint(const std::string& path);

std::string checkpoint_to_string(const PotentialParams& p);
PotentialParams checkpoint_from_string(const std::string& text);

}  // namespace pesgen

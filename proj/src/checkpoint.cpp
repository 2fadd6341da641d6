#include "pesgen/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "pesgen/error.hpp"

namespace pesgen {

namespace {
constexpr int kFormatVersion = 1;

using nlohmann::json;

json require(const json& j, const char* key) {
  if (!j.contains(key)) throw IoError(std::string("checkpoint: missing key '") + key + "'");
  return j.at(key);
}
}  // namespace

std::string checkpoint_to_string(const PotentialParams& p) {
  validate_params(p);
  json j;
  j["format_version"] = kFormatVersion;
  j["model"] = {{"r_cut", p.hypers.r_cut},
                {"n_max", p.hypers.n_max},
                {"l_max", p.hypers.l_max},
                {"nu_max", p.hypers.nu_max},
                {"n_embedding", p.hypers.n_embedding},
                {"hidden_width", p.hypers.hidden_width},
                {"activation", p.hypers.activation}};
  j["elements"] = p.elements;
  j["embeddings"] = p.embeddings;
  j["w1"] = p.w1;
  j["b1"] = p.b1;
  j["w2"] = p.w2;
  j["b2"] = p.b2;
  return j.dump(2) + "\n";
}

PotentialParams checkpoint_from_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("checkpoint: invalid JSON: ") + e.what());
  }
  try {
    const int version = require(j, "format_version").get<int>();
    if (version != kFormatVersion)
      throw IoError("checkpoint: unsupported format_version " + std::to_string(version));
    PotentialParams p;
    const json m = require(j, "model");
    p.hypers.r_cut = require(m, "r_cut").get<double>();
    p.hypers.n_max = require(m, "n_max").get<int>();
    p.hypers.l_max = require(m, "l_max").get<int>();
    p.hypers.nu_max = require(m, "nu_max").get<int>();
    p.hypers.n_embedding = require(m, "n_embedding").get<int>();
    p.hypers.hidden_width = require(m, "hidden_width").get<int>();
    p.hypers.activation = require(m, "activation").get<std::string>();
    p.elements = require(j, "elements").get<std::vector<int>>();
    p.embeddings = require(j, "embeddings").get<std::vector<std::vector<double>>>();
    p.w1 = require(j, "w1").get<std::vector<std::vector<double>>>();
    p.b1 = require(j, "b1").get<std::vector<double>>();
    p.w2 = require(j, "w2").get<std::vector<double>>();
    p.b2 = require(j, "b2").get<double>();
    validate_params(p);
    return p;
  } catch (const json::exception& e) {
    throw IoError(std::string("checkpoint: malformed field: ") + e.what());
  }
}

void save_checkpoint(const std::string& path, const PotentialParams& p) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << checkpoint_to_string(p);
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

PotentialParams load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return checkpoint_from_string(text);
}

}  // namespace pesgen

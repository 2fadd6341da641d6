#include "pesgen/config.hpp"

#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pesgen/elements.hpp"
#include "pesgen/error.hpp"
#include "pesgen/extxyz.hpp"

namespace pesgen {

namespace {

std::string trim(const std::string& s) {
  const std::size_t first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const std::size_t last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& v) {
  std::size_t idx = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &idx);
  } catch (const std::exception&) {
    throw InvalidInput("expected a number, got '" + v + "'");
  }
  if (idx != v.size()) throw InvalidInput("expected a number, got '" + v + "'");
  return x;
}

long long to_int(const std::string& v) {
  std::size_t idx = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &idx);
  } catch (const std::exception&) {
    throw InvalidInput("expected an integer, got '" + v + "'");
  }
  if (idx != v.size()) throw InvalidInput("expected an integer, got '" + v + "'");
  return x;
}

std::uint64_t to_uint64(const std::string& v) {
  std::size_t idx = 0;
  unsigned long long x = 0;
  try {
    x = std::stoull(v, &idx);
  } catch (const std::exception&) {
    throw InvalidInput("expected a non-negative integer, got '" + v + "'");
  }
  if (idx != v.size() || v.find('-') != std::string::npos) {
    throw InvalidInput("expected a non-negative integer, got '" + v + "'");
  }
  return x;
}

bool to_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw InvalidInput("expected true or false, got '" + v + "'");
}

}  // namespace

std::vector<SpeciesCount> parse_composition(const std::string& text) {
  std::vector<SpeciesCount> comp;
  const std::string t = trim(text);
  if (t.empty()) return comp;
  std::size_t start = 0;
  while (start <= t.size()) {
    std::size_t end = t.find(',', start);
    if (end == std::string::npos) end = t.size();
    const std::string item = trim(t.substr(start, end - start));
    if (item.empty()) throw InvalidInput("composition: empty entry in '" + text + "'");
    const std::size_t colon = item.find(':');
    if (colon == std::string::npos) {
      throw InvalidInput("composition: expected SYMBOL:COUNT, got '" + item + "'");
    }
    const std::string symbol = trim(item.substr(0, colon));
    const long long count = to_int(trim(item.substr(colon + 1)));
    if (count < 1) throw InvalidInput("composition: count for " + symbol + " must be >= 1");
    comp.push_back({element_number(symbol), static_cast<int>(count)});
    start = end + 1;
    if (end == t.size()) break;
  }
  return comp;
}

std::string format_composition(const std::vector<SpeciesCount>& composition) {
  std::string out;
  for (const SpeciesCount& sc : composition) {
    if (!out.empty()) out += ",";
    out += element_symbol(sc.z) + ":" + std::to_string(sc.count);
  }
  return out;
}

RunConfig parse_config(const std::string& text, const std::string& source_name) {
  RunConfig cfg;
  std::optional<double> mv_min;
  std::optional<double> mv_max;

  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw = raw.substr(0, hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    auto fail = [&](const std::string& msg) -> ConfigError {
      return ConfigError(source_name + ":" + std::to_string(line_no) + ": " + msg);
    };

    if (line.front() == '[') {
      if (line.back() != ']') throw fail("malformed section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "noise" && section != "model" && section != "train" &&
          section != "generate" && section != "match") {
        throw fail("unknown section [" + section + "]");
      }
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw fail("expected key = value, got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw fail("missing key before '='");
    if (section.empty()) throw fail("key '" + key + "' outside any section");

    try {
      if (section == "noise") {
        if (key == "d_max") cfg.noise.d_max = to_double(value);
        else if (key == "gamma_max") cfg.noise.gamma_max = to_double(value);
        else if (key == "k") cfg.noise.k = to_double(value);
        else if (key == "rep_m") cfg.noise.rep_m = to_double(value);
        else if (key == "rep_n") cfg.noise.rep_n = static_cast<int>(to_int(value));
        else if (key == "rep_rc") cfg.noise.rep_rc = to_double(value);
        else if (key == "K_normal") cfg.noise.K_normal = to_double(value);
        else if (key == "K_shear") cfg.noise.K_shear = to_double(value);
        else if (key == "n_noise") cfg.noise.n_noise_per_structure = static_cast<int>(to_int(value));
        else throw InvalidInput("unknown key '" + key + "' in [noise]");
      } else if (section == "model") {
        if (key == "r_cut") cfg.model.r_cut = to_double(value);
        else if (key == "n_max") cfg.model.n_max = static_cast<int>(to_int(value));
        else if (key == "l_max") cfg.model.l_max = static_cast<int>(to_int(value));
        else if (key == "nu_max") cfg.model.nu_max = static_cast<int>(to_int(value));
        else if (key == "n_embedding") cfg.model.n_embedding = static_cast<int>(to_int(value));
        else if (key == "hidden_width") cfg.model.hidden_width = static_cast<int>(to_int(value));
        else if (key == "activation") cfg.model.activation = value;
        else throw InvalidInput("unknown key '" + key + "' in [model]");
      } else if (section == "train") {
        if (key == "beta") cfg.train.beta = to_double(value);
        else if (key == "learning_rate") cfg.train.learning_rate = to_double(value);
        else if (key == "batch_size") cfg.train.batch_size = static_cast<int>(to_int(value));
        else if (key == "epochs") cfg.train.epochs = static_cast<int>(to_int(value));
        else if (key == "seed") cfg.train.seed = to_uint64(value);
        else if (key == "validation_fraction") cfg.train.validation_fraction = to_double(value);
        else if (key == "grad_clip") cfg.train.grad_clip = to_double(value);
        else if (key == "checkpoint_interval") cfg.train.checkpoint_interval = static_cast<int>(to_int(value));
        else if (key == "checkpoint_path") cfg.train.checkpoint_path = value;
        else throw InvalidInput("unknown key '" + key + "' in [train]");
      } else if (section == "generate") {
        if (key == "composition") cfg.gen.composition = parse_composition(value);
        else if (key == "pbc") cfg.gen.pbc = to_bool(value);
        else if (key == "min_distance") cfg.gen.min_distance = to_double(value);
        else if (key == "molar_volume_min") mv_min = value.empty() ? std::optional<double>() : to_double(value);
        else if (key == "molar_volume_max") mv_max = value.empty() ? std::optional<double>() : to_double(value);
        else if (key == "f_tol") cfg.gen.f_tol = to_double(value);
        else if (key == "max_steps") cfg.gen.max_steps = static_cast<int>(to_int(value));
        else if (key == "relax_cell") cfg.gen.relax_cell = to_bool(value);
        else if (key == "n_samples") cfg.n_samples = static_cast<std::size_t>(to_uint64(value));
        else if (key == "seed") cfg.gen_seed = to_uint64(value);
        else throw InvalidInput("unknown key '" + key + "' in [generate]");
      } else {  // match
        if (key == "r_max") cfg.match.r_max = to_double(value);
        else if (key == "bins") cfg.match.bins = static_cast<int>(to_int(value));
        else if (key == "smearing") cfg.match.smearing = to_double(value);
        else if (key == "tol_v") cfg.match.tol_v = to_double(value);
        else if (key == "tol_f") cfg.match.tol_f = to_double(value);
        else throw InvalidInput("unknown key '" + key + "' in [match]");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw fail(e.what());
    }
  }

  if (mv_min.has_value() != mv_max.has_value()) {
    throw ConfigError(source_name + ": molar_volume_min and molar_volume_max must be set together");
  }
  if (mv_min) cfg.gen.molar_volume_range = std::make_pair(*mv_min, *mv_max);

  // Enforce the underlying spec constraints at parse time. The composition may
  // legitimately stay empty until `generate` supplies one.
  try {
    validate_noise_spec(cfg.noise);
    validate_hypers(cfg.model);
    validate_train_config(cfg.train);
    if (!cfg.gen.composition.empty()) {
      validate_gen_spec(cfg.gen);
    } else {
      GenSpec probe = cfg.gen;
      probe.composition = {{6, 1}};
      validate_gen_spec(probe);
    }
    if (!(cfg.match.r_max > 0.0)) throw InvalidInput("match: r_max must be positive");
    if (cfg.match.bins < 1) throw InvalidInput("match: bins must be at least 1");
    if (!(cfg.match.smearing > 0.0)) throw InvalidInput("match: smearing must be positive");
    if (cfg.match.tol_v < 0.0) throw InvalidInput("match: tol_v must be non-negative");
    if (!(cfg.match.tol_f > 0.0)) throw InvalidInput("match: tol_f must be positive");
    if (cfg.n_samples < 1) throw InvalidInput("generate: n_samples must be at least 1");
  } catch (const Error& e) {
    throw ConfigError(source_name + ": " + e.what());
  }
  return cfg;
}

RunConfig read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

std::string serialize_config(const RunConfig& cfg) {
  std::ostringstream os;
  os << "[noise]\n";
  os << "d_max = " << format_double(cfg.noise.d_max) << "\n";
  os << "gamma_max = " << format_double(cfg.noise.gamma_max) << "\n";
  os << "k = " << format_double(cfg.noise.k) << "\n";
  os << "rep_m = " << format_double(cfg.noise.rep_m) << "\n";
  os << "rep_n = " << cfg.noise.rep_n << "\n";
  os << "rep_rc = " << format_double(cfg.noise.rep_rc) << "\n";
  os << "K_normal = " << format_double(cfg.noise.K_normal) << "\n";
  os << "K_shear = " << format_double(cfg.noise.K_shear) << "\n";
  os << "n_noise = " << cfg.noise.n_noise_per_structure << "\n";
  os << "\n[model]\n";
  os << "r_cut = " << format_double(cfg.model.r_cut) << "\n";
  os << "n_max = " << cfg.model.n_max << "\n";
  os << "l_max = " << cfg.model.l_max << "\n";
  os << "nu_max = " << cfg.model.nu_max << "\n";
  os << "n_embedding = " << cfg.model.n_embedding << "\n";
  os << "hidden_width = " << cfg.model.hidden_width << "\n";
  os << "activation = " << cfg.model.activation << "\n";
  os << "\n[train]\n";
  os << "beta = " << format_double(cfg.train.beta) << "\n";
  os << "learning_rate = " << format_double(cfg.train.learning_rate) << "\n";
  os << "batch_size = " << cfg.train.batch_size << "\n";
  os << "epochs = " << cfg.train.epochs << "\n";
  os << "seed = " << cfg.train.seed << "\n";
  os << "validation_fraction = " << format_double(cfg.train.validation_fraction) << "\n";
  os << "grad_clip = " << format_double(cfg.train.grad_clip) << "\n";
  os << "checkpoint_interval = " << cfg.train.checkpoint_interval << "\n";
  os << "checkpoint_path = " << cfg.train.checkpoint_path << "\n";
  os << "\n[generate]\n";
  os << "composition = " << format_composition(cfg.gen.composition) << "\n";
  os << "pbc = " << (cfg.gen.pbc ? "true" : "false") << "\n";
  os << "min_distance = " << format_double(cfg.gen.min_distance) << "\n";
  os << "molar_volume_min = "
     << (cfg.gen.molar_volume_range ? format_double(cfg.gen.molar_volume_range->first) : "")
     << "\n";
  os << "molar_volume_max = "
     << (cfg.gen.molar_volume_range ? format_double(cfg.gen.molar_volume_range->second) : "")
     << "\n";
  os << "f_tol = " << format_double(cfg.gen.f_tol) << "\n";
  os << "max_steps = " << cfg.gen.max_steps << "\n";
  os << "relax_cell = " << (cfg.gen.relax_cell ? "true" : "false") << "\n";
  os << "n_samples = " << cfg.n_samples << "\n";
  os << "seed = " << cfg.gen_seed << "\n";
  os << "\n[match]\n";
  os << "r_max = " << format_double(cfg.match.r_max) << "\n";
  os << "bins = " << cfg.match.bins << "\n";
  os << "smearing = " << format_double(cfg.match.smearing) << "\n";
  os << "tol_v = " << format_double(cfg.match.tol_v) << "\n";
  os << "tol_f = " << format_double(cfg.match.tol_f) << "\n";
  return os.str();
}

}  // namespace pesgen

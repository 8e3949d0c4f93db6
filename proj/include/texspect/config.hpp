#pragma once

#include <fstream>
#include <map>
#include <string>

#include "texspect/training.hpp"

namespace texspect {

namespace detail {
inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace detail

/// Flat `key = value` file, one pair per line, '#' starts a comment.
inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError(path + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw FormatError(path + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = val;
  }
  return kv;
}

/// Documented keys mirror TrainConfig; unknown keys are rejected so typos
/// do not silently fall back to defaults.
inline void apply_config(TrainConfig& cfg, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, val] : kv) {
    try {
      if (key == "iters_per_scale") cfg.iters_per_scale = std::stoi(val);
      else if (key == "lr_g") cfg.lr_g = std::stod(val);
      else if (key == "lr_d") cfg.lr_d = std::stod(val);
      else if (key == "lambda_recon") cfg.lambda_recon = std::stod(val);
      else if (key == "d_steps") cfg.d_steps = std::stoi(val);
      else if (key == "g_steps") cfg.g_steps = std::stoi(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "scale_factor") cfg.scale_factor = std::stod(val);
      else if (key == "min_dim") cfg.min_dim = std::stoi(val);
      else if (key == "max_scales") cfg.max_scales = std::stoi(val);
      else if (key == "gen_width") cfg.gen_width = std::stoi(val);
      else if (key == "disc_width") cfg.disc_width = std::stoi(val);
      else if (key == "branch_width") cfg.branch_width = std::stoi(val);
      else if (key == "texture_module") cfg.texture_module = texture_module_from_string(val);
      else throw FormatError("unknown config key: " + key);
    } catch (const std::invalid_argument&) {
      throw FormatError("config key " + key + ": cannot parse value '" + val + "'");
    }
  }
}

}  // namespace texspect

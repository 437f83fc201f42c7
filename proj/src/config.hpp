#pragma once

#include <fstream>
#include <map>
#include <string>

#include "errors.hpp"
#include "train.hpp"

namespace gfs {

// Flat INI-style key=value file: blank lines, '#'/';' comments and optional
// [section] headers (ignored) are allowed.
inline std::map<std::string, std::string> parse_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  size_t lineno = 0;
  auto trim = [](std::string s) {
    const char* ws = " \t\r";
    size_t a = s.find_first_not_of(ws);
    if (a == std::string::npos) return std::string();
    size_t b = s.find_last_not_of(ws);
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[' && t.back() == ']') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError(path + ":" + std::to_string(lineno) +
                       ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty())
      throw ParseError(path + ":" + std::to_string(lineno) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

// Applies a parsed key=value map on top of a TrainConfig; unknown keys are
// rejected so typos fail loudly.
inline void apply_train_config(TrainConfig& cfg,
                               const std::map<std::string, std::string>& kv,
                               const std::string& origin) {
  for (const auto& [key, value] : kv) {
    try {
      if (key == "lr_pretrain") cfg.lr_pretrain = std::stod(value);
      else if (key == "lr_joint") cfg.lr_joint = std::stod(value);
      else if (key == "epochs_pretrain") cfg.epochs_pretrain = std::stoul(value);
      else if (key == "epochs_joint") cfg.epochs_joint = std::stoul(value);
      else if (key == "batch") cfg.batch = std::stoul(value);
      else if (key == "n_pretrain_samples") cfg.n_pretrain_samples = std::stoull(value);
      else if (key == "n_joint_samples") cfg.n_joint_samples = std::stoull(value);
      else if (key == "snr_db_train") cfg.snr_db_train = std::stod(value);
      else if (key == "n_active_min") cfg.n_active_min = std::stoul(value);
      else if (key == "n_active_max") cfg.n_active_max = std::stoul(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else throw ParseError(origin + ": unknown training key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw ParseError(origin + ": bad value for '" + key + "': " + value);
    } catch (const std::out_of_range&) {
      throw ParseError(origin + ": value out of range for '" + key + "'");
    }
  }
  cfg.validate();
}

}  // namespace gfs

#pragma once

// Parameters of one CLI run. Serialized as the "config" object of every run
// manifest; loading a manifest back reproduces the run.

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace fracgb::cli {

struct RunConfig {
  std::string command;
  std::uint64_t seed = 1;
  std::string out = "out";
  std::string format = "csv";
  double alpha = 0.5;
  double T = 1.0;
  std::size_t steps = 256;

  // bound
  std::string kind = "mixed-closed";
  std::string a = "const:1";
  std::string b = "zero";
  std::string g = "zero";
  std::string h = "const:1";
  std::string k = "zero";
  bool nondecreasing = false;
  double series_tol = 1e-12;
  unsigned n_max = 400;
  double m_cap = 0.0;  // 0 selects the largest sampled value of b and g

  // simulate / picard / fpk
  std::string drift = "zero";
  std::string sigma1 = "zero";
  std::string sigma2 = "zero";
  double x0 = 1.0;
  std::size_t paths = 1000;
  bool write_paths = false;
  unsigned threads = 1;
  double tol = 1e-8;
  unsigned k_max = 60;
  std::vector<double> offsets;
  double x_min = -4.0;
  double x_max = 6.0;
  std::size_t cells = 400;
  std::size_t slices = 11;

  // verify
  std::string battery = "default";
  double sabotage_scale = 1.0;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RunConfig, command, seed, out, format, alpha, T, steps, kind, a, b, g, h,
                                                k, nondecreasing, series_tol, n_max, m_cap, drift, sigma1, sigma2, x0,
                                                paths, write_paths, threads, tol, k_max, offsets, x_min, x_max, cells,
                                                slices, battery, sabotage_scale)

/// Reads a config file: either a bare RunConfig object or a run manifest
/// holding one under "config".
inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("config file '" + path + "' is not valid JSON: " + e.what());
  }
  if (j.contains("config")) j = j.at("config");
  if (!j.is_object()) throw std::runtime_error("config file '" + path + "' must hold a JSON object");
  const nlohmann::json known = RunConfig{};
  for (const auto& item : j.items()) {
    if (!known.contains(item.key())) throw std::runtime_error("unknown config key '" + item.key() + "' in " + path);
  }
  return j.get<RunConfig>();
}

}  // namespace fracgb::cli

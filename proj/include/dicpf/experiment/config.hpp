#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dicpf/common.hpp"
#include "dicpf/experiment/csv.hpp"
#include "dicpf/models/seir.hpp"

namespace dicpf {

/// Configuration of one experiment run or grid. Parsed from a plain
/// `key = value` file; unset keys keep the preset defaults. Lists are
/// comma-separated. The `include` key pulls in a named built-in preset
/// before the remaining keys are applied.
struct ExperimentConfig {
  std::string experiment;  // fig1 | dgi-grid | fdi-grid | mvn-grid | seir

  // state-space model (rw/sv grids and fig1)
  std::string model = "rw";  // rw | sv
  int T = 50;
  double rho = 1.0;
  double sigma_y = 1.0;
  double x1 = 0.0;

  // grid axes; the active ones depend on the experiment
  std::vector<double> sigma_x_list{0.5};
  std::vector<double> sigma1_list{100.0};
  std::vector<int> n_list{16};
  std::vector<double> alpha_list{0.8};
  std::vector<double> beta_list;  // nonempty: fixed-scale runs instead of adaptive
  std::vector<std::string> method_list{"cpf-bs"};
  std::vector<int> d_list{1};
  std::vector<double> sigma_list{10.0};

  long n_iters = 6000;
  long burn_in = 1000;
  long thin = 1;
  int replicates = 1;
  std::uint64_t seed = 1;
  std::uint64_t data_seed = 1234;
  std::string out = "out";
  double am_scale = 2.38 * 2.38;  // covariance scaling of the non-Rao-Blackwellised adaptation

  // stabilisation of the adapted covariances; off by default
  std::string stabilisation = "off";  // off | project | reject
  double stabilisation_eps = 1e-6;

  // seir block
  SeirParams seir;
  double seir_sigma_true = 0.135;
  double seir_p_true = 0.2;
  double seir_e1 = 300;
  double seir_i1 = 150;
  std::vector<int> r0_breaks{1, 41, 81};
  std::vector<double> r0_values{3.0, 1.2, 0.8};
  std::string data_file;  // optional observed counts (date,count CSV)

  void validate() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::vector<double> double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) out.push_back(std::stod(item));
  return out;
}

inline std::vector<int> int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& item : split_list(s)) out.push_back(std::stoi(item));
  return out;
}

template <typename T>
std::string join_list(const std::vector<T>& xs) {
  std::ostringstream ss;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) ss << ',';
    ss << xs[i];
  }
  return ss.str();
}

}  // namespace detail

using ConfigMap = std::map<std::string, std::string>;

ExperimentConfig preset_config(const std::string& name);

/// Applies `key = value` entries onto a config. Unknown keys are an error so
/// typos surface immediately.
inline void apply_config_map(ExperimentConfig& cfg, const ConfigMap& map) {
  using detail::double_list;
  using detail::int_list;
  for (const auto& [key, value] : map) {
    try {
      if (key == "experiment") cfg.experiment = value;
      else if (key == "model") cfg.model = value;
      else if (key == "T") cfg.T = std::stoi(value);
      else if (key == "rho") cfg.rho = std::stod(value);
      else if (key == "sigma_y") cfg.sigma_y = std::stod(value);
      else if (key == "x1") cfg.x1 = std::stod(value);
      else if (key == "sigma_x_list") cfg.sigma_x_list = double_list(value);
      else if (key == "sigma1_list") cfg.sigma1_list = double_list(value);
      else if (key == "n_list") cfg.n_list = int_list(value);
      else if (key == "alpha_list") cfg.alpha_list = double_list(value);
      else if (key == "beta_list") cfg.beta_list = double_list(value);
      else if (key == "method_list") cfg.method_list = detail::split_list(value);
      else if (key == "d_list") cfg.d_list = int_list(value);
      else if (key == "sigma_list") cfg.sigma_list = double_list(value);
      else if (key == "n_iters") cfg.n_iters = std::stol(value);
      else if (key == "burn_in") cfg.burn_in = std::stol(value);
      else if (key == "thin") cfg.thin = std::stol(value);
      else if (key == "replicates") cfg.replicates = std::stoi(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "data_seed") cfg.data_seed = std::stoull(value);
      else if (key == "out") cfg.out = value;
      else if (key == "am_scale") cfg.am_scale = std::stod(value);
      else if (key == "stabilisation") cfg.stabilisation = value;
      else if (key == "stabilisation_eps") cfg.stabilisation_eps = std::stod(value);
      else if (key == "popsize") cfg.seir.popsize = std::stod(value);
      else if (key == "r0_max") cfg.seir.r0_max = std::stod(value);
      else if (key == "incubation_rate") cfg.seir.incubation_rate = std::stod(value);
      else if (key == "recovery_rate") cfg.seir.recovery_rate = std::stod(value);
      else if (key == "sampling_effort") cfg.seir.sampling_effort = std::stod(value);
      else if (key == "seir_sigma_true") cfg.seir_sigma_true = std::stod(value);
      else if (key == "seir_p_true") cfg.seir_p_true = std::stod(value);
      else if (key == "seir_e1") cfg.seir_e1 = std::stod(value);
      else if (key == "seir_i1") cfg.seir_i1 = std::stod(value);
      else if (key == "r0_breaks") cfg.r0_breaks = int_list(value);
      else if (key == "r0_values") cfg.r0_values = double_list(value);
      else if (key == "data_file") cfg.data_file = value;
      else throw ConfigError("unknown configuration key '" + key + "'");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("invalid value for '" + key + "': " + value);
    }
  }
}

/// Round-trips a config into the key/value form stored in manifests.
inline ConfigMap config_to_map(const ExperimentConfig& cfg) {
  using detail::join_list;
  ConfigMap m;
  m["experiment"] = cfg.experiment;
  m["model"] = cfg.model;
  m["T"] = std::to_string(cfg.T);
  m["rho"] = format_double(cfg.rho);
  m["sigma_y"] = format_double(cfg.sigma_y);
  m["x1"] = format_double(cfg.x1);
  m["sigma_x_list"] = join_list(cfg.sigma_x_list);
  m["sigma1_list"] = join_list(cfg.sigma1_list);
  m["n_list"] = join_list(cfg.n_list);
  m["alpha_list"] = join_list(cfg.alpha_list);
  if (!cfg.beta_list.empty()) m["beta_list"] = join_list(cfg.beta_list);
  m["method_list"] = join_list(cfg.method_list);
  m["d_list"] = join_list(cfg.d_list);
  m["sigma_list"] = join_list(cfg.sigma_list);
  m["n_iters"] = std::to_string(cfg.n_iters);
  m["burn_in"] = std::to_string(cfg.burn_in);
  m["thin"] = std::to_string(cfg.thin);
  m["replicates"] = std::to_string(cfg.replicates);
  m["seed"] = std::to_string(cfg.seed);
  m["data_seed"] = std::to_string(cfg.data_seed);
  m["out"] = cfg.out;
  m["am_scale"] = format_double(cfg.am_scale);
  m["stabilisation"] = cfg.stabilisation;
  m["stabilisation_eps"] = format_double(cfg.stabilisation_eps);
  m["popsize"] = format_double(cfg.seir.popsize);
  m["r0_max"] = format_double(cfg.seir.r0_max);
  m["incubation_rate"] = format_double(cfg.seir.incubation_rate);
  m["recovery_rate"] = format_double(cfg.seir.recovery_rate);
  m["sampling_effort"] = format_double(cfg.seir.sampling_effort);
  m["seir_sigma_true"] = format_double(cfg.seir_sigma_true);
  m["seir_p_true"] = format_double(cfg.seir_p_true);
  m["seir_e1"] = format_double(cfg.seir_e1);
  m["seir_i1"] = format_double(cfg.seir_i1);
  m["r0_breaks"] = join_list(cfg.r0_breaks);
  m["r0_values"] = join_list(cfg.r0_values);
  if (!cfg.data_file.empty()) m["data_file"] = cfg.data_file;
  return m;
}

/// Parses a `key = value` file. `include = <preset>` switches to that
/// preset's defaults before later keys override them. A bare preset name is
/// also accepted in place of a path.
inline ExperimentConfig parse_config_file(const std::string& path_or_preset) {
  std::ifstream in(path_or_preset);
  if (!in) return preset_config(path_or_preset);

  ExperimentConfig cfg;
  bool preset_loaded = false;
  ConfigMap pending;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key == "include") {
      cfg = preset_config(value);
      preset_loaded = true;
    } else {
      pending[key] = value;
    }
  }
  if (!preset_loaded && pending.count("experiment")) {
    cfg = preset_config(pending.at("experiment"));
  }
  apply_config_map(cfg, pending);
  return cfg;
}

inline void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& field, const std::string& why) {
    if (!ok) throw ConfigError("config field '" + field + "': " + why);
  };
  require(experiment == "fig1" || experiment == "dgi-grid" || experiment == "fdi-grid" ||
              experiment == "mvn-grid" || experiment == "seir",
          "experiment", "must be one of fig1, dgi-grid, fdi-grid, mvn-grid, seir");
  require(model == "rw" || model == "sv", "model", "must be rw or sv");
  require(T >= 1, "T", "must be >= 1");
  require(n_iters > burn_in, "n_iters", "must exceed burn_in");
  require(thin >= 1, "thin", "must be >= 1");
  require(replicates >= 1, "replicates", "must be >= 1");
  require(!n_list.empty(), "n_list", "must be nonempty");
  for (int n : n_list) require(n >= 1, "n_list", "particle counts must be >= 1");
  require(!alpha_list.empty() || !beta_list.empty(), "alpha_list", "need a nonempty grid");
  for (double a : alpha_list) require(a > 0.0 && a < 1.0, "alpha_list", "targets must be in (0,1)");
  for (double b : beta_list) require(b > 0.0 && b <= 1.0, "beta_list", "scales must be in (0,1]");
  require(!sigma_x_list.empty(), "sigma_x_list", "must be nonempty");
  require(!sigma1_list.empty(), "sigma1_list", "must be nonempty");
  require(!method_list.empty(), "method_list", "must be nonempty");
  for (const auto& mth : method_list) {
    require(mth == "cpf-bs" || mth == "dgi" || mth == "fdi-am" || mth == "fdi-aswam" ||
                mth == "dpg",
            "method_list", "unknown method '" + mth + "'");
    require(beta_list.empty() || mth != "fdi-aswam", "beta_list",
            "fixed autoregression scales only apply to the dgi method");
  }
  require(stabilisation == "off" || stabilisation == "project" || stabilisation == "reject",
          "stabilisation", "must be off, project or reject");
  if (experiment == "mvn-grid") {
    require(!d_list.empty(), "d_list", "must be nonempty");
    require(!sigma_list.empty(), "sigma_list", "must be nonempty");
  }
  if (experiment == "seir") {
    require(r0_breaks.size() == r0_values.size() && !r0_breaks.empty(), "r0_breaks",
            "must match r0_values and be nonempty");
    require(seir_p_true > 0.0 && seir_p_true < 1.0, "seir_p_true", "must be in (0,1)");
  }
}

inline ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.experiment = name;
  if (name == "fig1") {
    cfg.model = "rw";
    cfg.rho = 0.8;
    cfg.T = 50;
    cfg.sigma_x_list = {0.5};
    cfg.sigma_y = 0.5;
    cfg.sigma1_list = {10.0, 100.0, 1000.0};
    cfg.n_list = {16};
    cfg.method_list = {"cpf-bs"};
    cfg.n_iters = 6000;
    cfg.burn_in = 1000;
    cfg.replicates = 1;
    cfg.out = "out/fig1";
  } else if (name == "dgi-grid") {
    cfg.model = "rw";
    cfg.rho = 1.0;
    cfg.T = 50;
    cfg.sigma_y = 1.0;
    cfg.sigma_x_list = {1.0};
    cfg.sigma1_list = {100.0};
    cfg.n_list = {8, 32, 128};
    cfg.alpha_list = {0.2, 0.5, 0.8, 0.95};
    cfg.method_list = {"dgi", "cpf-bs"};
    cfg.n_iters = 3000;
    cfg.burn_in = 500;
    cfg.replicates = 2;
    cfg.out = "out/dgi-grid";
  } else if (name == "fdi-grid") {
    cfg.model = "rw";
    cfg.rho = 1.0;
    cfg.T = 50;
    cfg.sigma_y = 1.0;
    cfg.sigma_x_list = {0.1, 1.0};
    cfg.n_list = {32, 128};
    cfg.alpha_list = {0.8};
    cfg.method_list = {"fdi-aswam", "fdi-am", "dpg"};
    cfg.n_iters = 3000;
    cfg.burn_in = 500;
    cfg.replicates = 2;
    cfg.out = "out/fdi-grid";
  } else if (name == "mvn-grid") {
    cfg.n_list = {64};
    cfg.alpha_list = {0.5, 0.8, 0.95};
    cfg.d_list = {1, 2, 5};
    cfg.sigma_list = {10.0};
    cfg.method_list = {"fdi-aswam"};
    cfg.n_iters = 6000;
    cfg.burn_in = 500;
    cfg.replicates = 1;
    cfg.out = "out/mvn-grid";
  } else if (name == "seir") {
    cfg.T = 120;
    cfg.n_list = {64};
    cfg.alpha_list = {0.8};
    cfg.method_list = {"fdi-aswam"};
    cfg.n_iters = 20000;
    cfg.burn_in = 2000;
    cfg.thin = 10;
    cfg.replicates = 1;
    cfg.out = "out/seir";
  } else {
    throw ConfigError("unknown experiment preset '" + name + "'");
  }
  return cfg;
}

}  // namespace dicpf

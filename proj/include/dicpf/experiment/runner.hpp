#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dicpf/diagnostics.hpp"
#include "dicpf/drivers.hpp"
#include "dicpf/experiment/config.hpp"
#include "dicpf/experiment/csv.hpp"
#include "dicpf/models/mvn_static.hpp"
#include "dicpf/models/noisy_ar.hpp"
#include "dicpf/models/seir.hpp"
#include "dicpf/models/stochastic_volatility.hpp"

namespace dicpf {

inline constexpr const char* kVersion = "0.1.0";

struct StatsRow {
  std::string experiment;  // preset id plus the grid-point label
  int replicate = 0;
  std::string variable;
  long n = 0;
  double iact = kNaN, neff = kNaN, ire = kNaN, ci_lo = kNaN, ci_hi = kNaN;
};

struct RunSpec {
  int index = 0;  // also the RNG stream id of the run
  std::string label;
  std::string method;
  int replicate = 0;
  int n_particles = 0;
  double alpha_target = 0.8;
  double beta_fixed = 0.0;  // > 0: fixed autoregression scale instead of adaptation
  double sigma_x = 1.0;
  double sigma1 = 100.0;
  int dataset_id = 0;
  // mvn grid
  int dim = 1;
  double mvn_sigma = 10.0;
};

struct RunOutcome {
  RunSpec spec;
  bool ok = false;
  std::string error;
  std::string chain_file;
  std::vector<StatsRow> stats;
};

namespace detail {

inline StabilisationOptions stabilisation_options(const ExperimentConfig& cfg) {
  StabilisationOptions opt;
  opt.eps = cfg.stabilisation_eps;
  if (cfg.stabilisation == "project") opt.mode = Stabilisation::Project;
  else if (cfg.stabilisation == "reject") opt.mode = Stabilisation::Reject;
  return opt;
}

inline std::string run_file_name(const RunSpec& spec) {
  std::string label = spec.label;
  for (char& c : label) {
    if (c == ';' || c == '=' || c == ' ' || c == '/') c = '_';
  }
  return "chain_" + std::to_string(spec.index) + "_" + label + ".csv";
}

/// Observations for one (model, sigma_x, sigma1) grid point; deterministic in
/// the data seed and shared by every run on that point.
inline Vector grid_dataset(const ExperimentConfig& cfg, const RunSpec& spec) {
  RngStream rng(cfg.data_seed, 500000 + static_cast<std::uint64_t>(spec.dataset_id));
  if (cfg.model == "sv") {
    return simulate_sv({spec.sigma_x, cfg.sigma_y, 1.0, false}, cfg.T, cfg.x1, rng).second;
  }
  return simulate_noisy_ar({cfg.rho, spec.sigma_x, cfg.sigma_y, 1.0, false}, cfg.T, cfg.x1, rng)
      .second;
}

template <FeynmanKac M>
void write_smoothing_chain(const std::string& path, const ChainOutput& out, const M& model) {
  CsvWriter csv(path, {"iter", "x1", "xT", "alpha", "scale", "sigma_trace"});
  const int T = model.num_steps();
  for (const auto& rec : out.records) {
    csv.row({std::to_string(rec.iteration), format_double(rec.trajectory.state(1)(0)),
             format_double(rec.trajectory.state(T)(0)), format_double(rec.alpha),
             format_double(rec.scale), format_double(rec.sigma_trace)});
  }
}

inline StatsRow stats_row(const std::string& experiment_label, int replicate,
                          const std::string& variable, const Vector& chain, int n_particles) {
  StatsRow row;
  row.experiment = experiment_label;
  row.replicate = replicate;
  row.variable = variable;
  row.n = chain.size();
  const auto est = iact(chain);
  if (!est.diverged) {
    row.iact = est.value;
    row.neff = neff(est.value, chain.size());
    row.ire = ire(est.value, n_particles);
  }
  const auto ci = mean_ci(chain);
  if (!ci.degenerate) {
    row.ci_lo = ci.lo;
    row.ci_hi = ci.hi;
  }
  return row;
}

inline Vector record_first_states(const std::vector<ChainRecord>& records) {
  Vector x(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) x(i) = records[i].trajectory.state(1)(0);
  return x;
}

template <FeynmanKac M>
ChainOutput run_smoothing_method(const ExperimentConfig& cfg, const RunSpec& spec, const M& model,
                                 const Trajectory& ref, RngStream& rng) {
  const ChainOptions opt{cfg.n_iters, cfg.burn_in, cfg.thin, true};
  if (spec.method == "cpf-bs") {
    auto adapter = FixedKernelAdapter(exact_m1_kernel(model.initial()));
    return aai_cpf_run(model, adapter, ref, PathSelector::BackwardSampling, spec.n_particles, opt,
                       rng);
  }
  if (spec.method == "dgi") {
    if (spec.beta_fixed > 0.0) {
      auto adapter = FixedKernelAdapter(
          CrankNicolsonKernel(model.initial().mean(), model.initial().cov(), spec.beta_fixed));
      return aai_cpf_run(model, adapter, ref, PathSelector::BackwardSampling, spec.n_particles,
                         opt, rng);
    }
    DgiScaleAdapter adapter(model.initial(), spec.alpha_target);
    return aai_cpf_run(model, adapter, ref, PathSelector::BackwardSampling, spec.n_particles, opt,
                       rng);
  }
  if (spec.method == "fdi-am") {
    FdiAmAdapter adapter(ref.state(1), model.initial().domain(), cfg.am_scale, StepSchedule{},
                         stabilisation_options(cfg));
    return aai_cpf_run(model, adapter, ref, PathSelector::BackwardSampling, spec.n_particles, opt,
                       rng);
  }
  if (spec.method == "fdi-aswam") {
    FdiAswamAdapter adapter(ref.state(1), model.initial().domain(), spec.alpha_target,
                            StepSchedule{}, stabilisation_options(cfg));
    return aai_cpf_run(model, adapter, ref, PathSelector::BackwardSampling, spec.n_particles, opt,
                       rng);
  }
  if (spec.method == "dpg") {
    Trajectory tail(Matrix(ref.values().rightCols(ref.length() - 1)));
    return dpg_bs_run(model, ref.state(1), tail, spec.n_particles, opt, rng);
  }
  throw ConfigError("unknown method '" + spec.method + "'");
}

inline RunOutcome run_grid_point(const ExperimentConfig& cfg, const RunSpec& spec,
                                 const std::filesystem::path& out_dir) {
  RunOutcome outcome;
  outcome.spec = spec;
  RngStream rng(cfg.seed, 1 + static_cast<std::uint64_t>(spec.index));

  ChainOutput out;
  int T = cfg.T;
  if (cfg.experiment == "mvn-grid") {
    MvnStaticModel model(MvnStaticParams{spec.dim, spec.mvn_sigma});
    Trajectory ref = Trajectory::zero(spec.dim, 1);
    FdiAswamAdapter adapter(ref.state(1), model.initial().domain(), spec.alpha_target,
                            StepSchedule{}, stabilisation_options(cfg));
    out = aai_cpf_run(model, adapter, ref, PathSelector::BackwardSampling, spec.n_particles,
                      ChainOptions{cfg.n_iters, cfg.burn_in, cfg.thin, true}, rng);
    T = 1;
  } else {
    const Vector y = grid_dataset(cfg, spec);
    const bool flat = spec.method == "fdi-am" || spec.method == "fdi-aswam" ||
                      spec.method == "dpg";
    const double start = flat ? y(0) : cfg.x1;
    if (cfg.model == "sv") {
      SvModel model({spec.sigma_x, cfg.sigma_y, spec.sigma1, flat}, y);
      Trajectory ref = make_initial_trajectory(model, Vector::Constant(1, start), rng);
      out = run_smoothing_method(cfg, spec, model, ref, rng);
      outcome.chain_file = run_file_name(spec);
      write_smoothing_chain((out_dir / outcome.chain_file).string(), out, model);
    } else {
      NoisyArModel model({cfg.rho, spec.sigma_x, cfg.sigma_y, spec.sigma1, flat}, y);
      Trajectory ref = make_initial_trajectory(model, Vector::Constant(1, start), rng);
      out = run_smoothing_method(cfg, spec, model, ref, rng);
      outcome.chain_file = run_file_name(spec);
      write_smoothing_chain((out_dir / outcome.chain_file).string(), out, model);
    }
  }

  if (cfg.experiment == "mvn-grid") {
    outcome.chain_file = run_file_name(spec);
    CsvWriter csv((out_dir / outcome.chain_file).string(),
                  {"iter", "x1", "alpha", "scale", "sigma_trace"});
    for (const auto& rec : out.records) {
      csv.row({std::to_string(rec.iteration), format_double(rec.trajectory.state(1)(0)),
               format_double(rec.alpha), format_double(rec.scale),
               format_double(rec.sigma_trace)});
    }
  }

  outcome.stats.push_back(
      stats_row(cfg.experiment + "/" + spec.label, spec.replicate,
                "x1", record_first_states(out.records), spec.n_particles));
  outcome.ok = true;
  return outcome;
}

struct SeirRunData {
  SeirSimulation sim;
  Vector counts;
};

inline SeirRunData seir_dataset(const ExperimentConfig& cfg) {
  SeirRunData data;
  if (!cfg.data_file.empty()) {
    const CsvTable table = read_csv(cfg.data_file);
    data.counts = table.numeric_column("count");
    return data;
  }
  SeirParams sim_params = cfg.seir;
  sim_params.rw_sd = cfg.seir_sigma_true;
  sim_params.obs_failure_prob = cfg.seir_p_true;
  RngStream rng(cfg.data_seed, 900001);
  const Vector rho_path = piecewise_r0_path(cfg.T, cfg.r0_breaks, cfg.r0_values, cfg.seir.r0_max);
  data.sim = simulate_seir(sim_params, rho_path, cfg.seir_e1, cfg.seir_i1, rng);
  data.counts = data.sim.counts;
  return data;
}

inline RunOutcome run_seir(const ExperimentConfig& cfg, const RunSpec& spec,
                           const std::filesystem::path& out_dir) {
  RunOutcome outcome;
  outcome.spec = spec;
  RngStream rng(cfg.seed, 1 + static_cast<std::uint64_t>(spec.index));

  const SeirRunData data = seir_dataset(cfg);
  SeirHyper hyper;
  hyper.base = cfg.seir;
  hyper.counts = data.counts;

  Vector theta0(2);
  theta0 << hyper.log_sigma_prior_mean, 0.0;
  const auto model0 = hyper.make_model(theta0);

  // start in the interior of the constraint set, scaled to the first days
  const double p_gamma = model0.p_recovery();
  const double early_count = std::max(data.counts.head(std::min<Eigen::Index>(7, data.counts.size())).mean(), 1.0);
  const double i0 = std::max(1.0, std::round(early_count / (cfg.seir.sampling_effort * p_gamma)));
  Vector start(seir::kDim);
  start << cfg.seir.popsize - 2.0 * i0, i0, i0, 0.0, logit(2.5 / cfg.seir.r0_max);
  RngStream init_rng = rng.substream(17);
  Trajectory ref = make_initial_trajectory(model0, start, init_rng);

  FdiAswamAdapter adapter(model0.initial().domain().to_free(ref.state(1)),
                          model0.initial().domain(), spec.alpha_target, StepSchedule{},
                          stabilisation_options(cfg));
  const auto out = aai_pg_run(hyper, theta0, ref, adapter, RamState::init(2),
                              PathSelector::BackwardSampling, spec.n_particles,
                              ChainOptions{cfg.n_iters, cfg.burn_in, cfg.thin, true}, rng);

  outcome.chain_file = run_file_name(spec);
  {
    CsvWriter csv((out_dir / outcome.chain_file).string(),
                  {"iter", "E1", "I1", "R0_1", "sigma", "p", "alpha", "theta_accepted", "scale"});
    for (const auto& rec : out.records) {
      csv.row({std::to_string(rec.iteration), format_double(rec.trajectory.state(1)(seir::kE)),
               format_double(rec.trajectory.state(1)(seir::kI)),
               format_double(cfg.seir.r0_max * inv_logit(rec.trajectory.state(1)(seir::kRho))),
               format_double(std::exp(rec.theta(0))), format_double(inv_logit(rec.theta(1))),
               format_double(rec.alpha), rec.theta_accepted ? "1" : "0",
               format_double(rec.scale)});
    }
  }
  {
    CsvWriter csv((out_dir / ("states_" + std::to_string(spec.index) + ".csv")).string(),
                  {"iter", "t", "I", "rho"});
    for (const auto& rec : out.records) {
      for (int t = 1; t <= cfg.T; ++t) {
        csv.row({std::to_string(rec.iteration), std::to_string(t),
                 format_double(rec.trajectory.state(t)(seir::kI)),
                 format_double(rec.trajectory.state(t)(seir::kRho))});
      }
    }
  }

  const std::string label = cfg.experiment + "/" + spec.label;
  const std::size_t n_rec = out.records.size();
  Vector e1(n_rec), i1(n_rec), r0(n_rec), sig(n_rec), p(n_rec);
  for (std::size_t i = 0; i < n_rec; ++i) {
    const auto& rec = out.records[i];
    e1(i) = rec.trajectory.state(1)(seir::kE);
    i1(i) = rec.trajectory.state(1)(seir::kI);
    r0(i) = cfg.seir.r0_max * inv_logit(rec.trajectory.state(1)(seir::kRho));
    sig(i) = std::exp(rec.theta(0));
    p(i) = inv_logit(rec.theta(1));
  }
  outcome.stats.push_back(stats_row(label, spec.replicate, "E1", e1, spec.n_particles));
  outcome.stats.push_back(stats_row(label, spec.replicate, "I1", i1, spec.n_particles));
  outcome.stats.push_back(stats_row(label, spec.replicate, "R0_1", r0, spec.n_particles));
  outcome.stats.push_back(stats_row(label, spec.replicate, "sigma", sig, spec.n_particles));
  outcome.stats.push_back(stats_row(label, spec.replicate, "p", p, spec.n_particles));
  outcome.ok = true;
  return outcome;
}

inline std::vector<RunSpec> build_run_list(const ExperimentConfig& cfg) {
  std::vector<RunSpec> runs;
  int index = 0;
  auto push = [&](RunSpec spec) {
    spec.index = index++;
    runs.push_back(std::move(spec));
  };

  if (cfg.experiment == "seir") {
    for (int rep = 1; rep <= cfg.replicates; ++rep) {
      RunSpec spec;
      spec.method = "fdi-pg";
      spec.replicate = rep;
      spec.n_particles = cfg.n_list.front();
      spec.alpha_target = cfg.alpha_list.front();
      spec.label = "N=" + std::to_string(spec.n_particles) + ";rep=" + std::to_string(rep);
      push(std::move(spec));
    }
    return runs;
  }

  if (cfg.experiment == "mvn-grid") {
    for (int d : cfg.d_list) {
      for (double sigma : cfg.sigma_list) {
        for (int n : cfg.n_list) {
          for (double alpha : cfg.alpha_list) {
            for (int rep = 1; rep <= cfg.replicates; ++rep) {
              RunSpec spec;
              spec.method = "fdi-aswam";
              spec.replicate = rep;
              spec.n_particles = n;
              spec.alpha_target = alpha;
              spec.dim = d;
              spec.mvn_sigma = sigma;
              spec.label = "d=" + std::to_string(d) + ";sigma=" + format_double(sigma) +
                           ";N=" + std::to_string(n) + ";alpha=" + format_double(alpha) +
                           ";rep=" + std::to_string(rep);
              push(std::move(spec));
            }
          }
        }
      }
    }
    return runs;
  }

  // fig1 / dgi-grid / fdi-grid share the (dataset x method x N x scale) shape
  const bool diffuse_gaussian = cfg.experiment == "fig1" || cfg.experiment == "dgi-grid";
  const std::vector<double> scale_axis =
      !cfg.beta_list.empty() ? cfg.beta_list : cfg.alpha_list;
  int dataset_id = 0;
  for (double sigma_x : cfg.sigma_x_list) {
    const int dataset = dataset_id++;  // sigma1 is a sampler parameter, not a data parameter
    for (double sigma1 : cfg.sigma1_list) {
      for (const std::string& method : cfg.method_list) {
        // cpf-bs and dpg have no tunable acceptance target
        const bool scaled = method == "dgi" || method == "fdi-aswam";
        const std::vector<double> scales = scaled ? scale_axis : std::vector<double>{0.0};
        for (int n : cfg.n_list) {
          for (double scale : scales) {
            for (int rep = 1; rep <= cfg.replicates; ++rep) {
              RunSpec spec;
              spec.method = method;
              spec.replicate = rep;
              spec.n_particles = n;
              spec.sigma_x = sigma_x;
              spec.sigma1 = sigma1;
              spec.dataset_id = dataset;
              if (scaled && !cfg.beta_list.empty()) spec.beta_fixed = scale;
              else if (scaled) spec.alpha_target = scale;
              spec.label = "method=" + method + ";sigmax=" + format_double(sigma_x) +
                           (diffuse_gaussian ? ";sigma1=" + format_double(sigma1) : "") +
                           ";N=" + std::to_string(n) +
                           (scaled ? (!cfg.beta_list.empty() ? ";beta=" : ";alpha=") +
                                         format_double(scale)
                                   : "") +
                           ";rep=" + std::to_string(rep);
              push(std::move(spec));
            }
          }
        }
      }
    }
  }
  return runs;
}

}  // namespace detail

/// Posterior predictive counts: for each retained draw, observations are
/// re-simulated from the count distribution given the draw's infected path
/// and failure probability. Returns draws x T.
inline Matrix posterior_predictive(const std::vector<ChainRecord>& records,
                                   const SeirParams& base, RngStream& rng) {
  if (records.empty()) return Matrix(0, 0);
  const int T = records.front().trajectory.length();
  const double p_gamma = 1.0 - std::exp(-base.recovery_rate);
  Matrix draws(records.size(), T);
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& rec = records[i];
    const double p = rec.theta.size() >= 2 ? inv_logit(rec.theta(1)) : base.obs_failure_prob;
    for (int t = 1; t <= T; ++t) {
      const double infected = rec.trajectory.state(t)(seir::kI);
      const double r = base.sampling_effort * p_gamma * (p / (1.0 - p)) * infected;
      draws(i, t - 1) = static_cast<double>(rng.neg_binomial(r, p));
    }
  }
  return draws;
}

struct ExperimentResult {
  int exit_code = 0;
  std::vector<RunOutcome> outcomes;
  std::string stats_file;
  std::string manifest_file;
};

/// Runs every grid point of the experiment, replicates distributed over a
/// small worker pool. Outputs are deterministic in (config, seeds) and
/// independent of the worker count; failures are recorded per run without
/// aborting the rest of the grid.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, int workers = 1) {
  cfg.validate();
  namespace fs = std::filesystem;
  const fs::path out_dir(cfg.out);
  fs::create_directories(out_dir);

  // write the dataset(s) used by the grid; a broken data source surfaces as
  // per-run failures below
  if (cfg.experiment == "seir") {
    try {
      const auto data = detail::seir_dataset(cfg);
      CsvWriter csv((out_dir / "data.csv").string(), {"date", "count"});
      for (Eigen::Index t = 0; t < data.counts.size(); ++t) {
        csv.row({std::to_string(t + 1), format_double(data.counts(t))});
      }
      if (data.sim.latent.size() > 0) {
        CsvWriter truth((out_dir / "latent_truth.csv").string(),
                        {"t", "S", "E", "I", "R", "rho"});
        for (int t = 0; t < data.sim.latent.cols(); ++t) {
          truth.row({std::to_string(t + 1), format_double(data.sim.latent(seir::kS, t)),
                     format_double(data.sim.latent(seir::kE, t)),
                     format_double(data.sim.latent(seir::kI, t)),
                     format_double(data.sim.latent(seir::kR, t)),
                     format_double(data.sim.latent(seir::kRho, t))});
        }
      }
    } catch (const std::exception&) {
      // runs report the details
    }
  }

  std::vector<RunSpec> runs = detail::build_run_list(cfg);
  std::vector<RunOutcome> outcomes(runs.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= runs.size()) break;
      try {
        outcomes[i] = cfg.experiment == "seir" ? detail::run_seir(cfg, runs[i], out_dir)
                                               : detail::run_grid_point(cfg, runs[i], out_dir);
      } catch (const std::exception& e) {
        outcomes[i].spec = runs[i];
        outcomes[i].ok = false;
        outcomes[i].error = e.what();
      }
    }
  };

  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  ExperimentResult result;
  result.outcomes = outcomes;

  // aggregate stats in run order: identical regardless of the worker count
  result.stats_file = (out_dir / "stats.csv").string();
  {
    CsvWriter csv(result.stats_file, {"experiment", "replicate", "variable", "n", "iact", "neff",
                                      "ire", "ci_lo", "ci_hi"});
    for (const auto& outcome : outcomes) {
      for (const auto& row : outcome.stats) {
        csv.row({row.experiment, std::to_string(row.replicate), row.variable,
                 std::to_string(row.n), format_double(row.iact), format_double(row.neff),
                 format_double(row.ire), format_double(row.ci_lo), format_double(row.ci_hi)});
      }
    }
  }

  // manifest: enough to replay the experiment exactly
  result.manifest_file = (out_dir / "manifest.json").string();
  {
    nlohmann::json manifest;
    manifest["tool"] = "dicpf";
    manifest["version"] = kVersion;
    nlohmann::json config_json;
    for (const auto& [key, value] : config_to_map(cfg)) config_json[key] = value;
    manifest["config"] = config_json;
    nlohmann::json runs_json = nlohmann::json::array();
    for (const auto& outcome : outcomes) {
      nlohmann::json r;
      r["index"] = outcome.spec.index;
      r["label"] = outcome.spec.label;
      r["stream"] = outcome.spec.index + 1;
      r["status"] = outcome.ok ? "ok" : "failed";
      if (!outcome.ok) r["error"] = outcome.error;
      if (!outcome.chain_file.empty()) r["file"] = outcome.chain_file;
      runs_json.push_back(std::move(r));
    }
    manifest["runs"] = std::move(runs_json);
    std::ofstream out(result.manifest_file);
    out << manifest.dump(2) << '\n';
  }

  for (const auto& outcome : outcomes) {
    if (!outcome.ok) result.exit_code = 2;
  }
  return result;
}

/// Loads a config from a preset name, a key-value file, or a manifest
/// produced by run_experiment (replay).
inline ExperimentConfig load_config(const std::string& source) {
  if (source.size() > 5 && source.substr(source.size() - 5) == ".json") {
    std::ifstream in(source);
    if (!in) throw ConfigError("cannot open manifest " + source);
    nlohmann::json manifest;
    in >> manifest;
    if (!manifest.contains("config")) throw ConfigError("manifest has no config block");
    ConfigMap map;
    for (const auto& [key, value] : manifest["config"].items()) {
      map[key] = value.get<std::string>();
    }
    ExperimentConfig cfg = preset_config(map.at("experiment"));
    apply_config_map(cfg, map);
    return cfg;
  }
  return parse_config_file(source);
}

}  // namespace dicpf

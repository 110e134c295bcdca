// Command-line harness: dataset simulation, experiment grids, chain
// diagnostics and posterior predictive simulation. Exit codes: 0 success,
// 1 configuration error, 2 runtime error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "dicpf/dicpf.hpp"
#include "dicpf/experiment/runner.hpp"

namespace {

using namespace dicpf;

int resolve_workers(int cli_workers) {
  if (cli_workers > 0) return cli_workers;
  if (const char* env = std::getenv("DICPF_WORKERS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

int cmd_simulate(const std::string& config_source, const std::string& out_override,
                 std::uint64_t seed_override) {
  ExperimentConfig cfg = load_config(config_source);
  if (!out_override.empty()) cfg.out = out_override;
  if (seed_override != 0) cfg.data_seed = seed_override;
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out);

  if (cfg.experiment == "seir") {
    const auto data = detail::seir_dataset(cfg);
    CsvWriter csv((fs::path(cfg.out) / "data.csv").string(), {"date", "count"});
    for (Eigen::Index t = 0; t < data.counts.size(); ++t) {
      csv.row({std::to_string(t + 1), format_double(data.counts(t))});
    }
    if (data.sim.latent.size() > 0) {
      CsvWriter truth((fs::path(cfg.out) / "latent_truth.csv").string(),
                      {"t", "S", "E", "I", "R", "rho"});
      for (int t = 0; t < data.sim.latent.cols(); ++t) {
        truth.row({std::to_string(t + 1), format_double(data.sim.latent(seir::kS, t)),
                   format_double(data.sim.latent(seir::kE, t)),
                   format_double(data.sim.latent(seir::kI, t)),
                   format_double(data.sim.latent(seir::kR, t)),
                   format_double(data.sim.latent(seir::kRho, t))});
      }
    }
    std::cout << "wrote " << (fs::path(cfg.out) / "data.csv").string() << "\n";
    return 0;
  }

  int dataset_id = 0;
  for (double sigma_x : cfg.sigma_x_list) {
    RngStream rng(cfg.data_seed, 500000 + static_cast<std::uint64_t>(dataset_id));
    Vector x, y;
    if (cfg.model == "sv") {
      std::tie(x, y) = simulate_sv({sigma_x, cfg.sigma_y, 1.0, false}, cfg.T, cfg.x1, rng);
    } else {
      std::tie(x, y) =
          simulate_noisy_ar({cfg.rho, sigma_x, cfg.sigma_y, 1.0, false}, cfg.T, cfg.x1, rng);
    }
    const std::string tag = std::to_string(dataset_id);
    CsvWriter data((fs::path(cfg.out) / ("data_" + tag + ".csv")).string(), {"t", "y"});
    CsvWriter truth((fs::path(cfg.out) / ("latent_" + tag + ".csv")).string(), {"t", "x1"});
    for (int t = 0; t < cfg.T; ++t) {
      data.row({std::to_string(t + 1), format_double(y(t))});
      truth.row({std::to_string(t + 1), format_double(x(t))});
    }
    ++dataset_id;  // one dataset per sigma_x; sigma1 only affects the sampler
    std::cout << "wrote " << (fs::path(cfg.out) / ("data_" + tag + ".csv")).string() << "\n";
  }
  return 0;
}

int cmd_run(const std::string& config_source, const std::string& out_override,
            std::uint64_t seed_override, int workers) {
  ExperimentConfig cfg = load_config(config_source);
  if (!out_override.empty()) cfg.out = out_override;
  if (seed_override != 0) cfg.seed = seed_override;
  const auto result = run_experiment(cfg, resolve_workers(workers));
  int failures = 0;
  for (const auto& outcome : result.outcomes) {
    if (!outcome.ok) {
      ++failures;
      std::cerr << "run " << outcome.spec.index << " (" << outcome.spec.label
                << ") failed: " << outcome.error << "\n";
    }
  }
  std::cout << "runs: " << result.outcomes.size() - failures << " ok, " << failures
            << " failed; stats: " << result.stats_file << "\n";
  return result.exit_code;
}

int cmd_stats(const std::string& input, const std::string& out_file, int n_particles,
              const std::string& label, int replicate) {
  const CsvTable table = read_csv(input);
  CsvWriter csv(out_file, {"experiment", "replicate", "variable", "n", "iact", "neff", "ire",
                           "ci_lo", "ci_hi"});
  for (const auto& column : table.header) {
    if (column == "iter" || column == "t" || column == "theta_accepted") continue;
    const Vector chain = table.numeric_column(column);
    double iact_v = kNaN, neff_v = kNaN, ire_v = kNaN, lo = kNaN, hi = kNaN;
    const auto est = iact(chain);
    if (!est.diverged) {
      iact_v = est.value;
      neff_v = neff(est.value, chain.size());
      ire_v = ire(est.value, n_particles);
    }
    const auto ci = mean_ci(chain);
    if (!ci.degenerate) {
      lo = ci.lo;
      hi = ci.hi;
    }
    csv.row({label, std::to_string(replicate), column, std::to_string(chain.size()),
             format_double(iact_v), format_double(neff_v), format_double(ire_v),
             format_double(lo), format_double(hi)});
  }
  std::cout << "wrote " << out_file << "\n";
  return 0;
}

int cmd_predictive(const std::string& chain_file, const std::string& states_file,
                   const std::string& config_source, const std::string& out_file,
                   std::uint64_t seed) {
  const ExperimentConfig cfg = load_config(config_source);
  const CsvTable chain = read_csv(chain_file);
  const CsvTable states = read_csv(states_file);

  // rebuild minimal records: infected path per retained draw plus theta
  const int iter_col = states.column("iter");
  const int t_col = states.column("t");
  const int i_col = states.column("I");
  std::map<long, std::map<int, double>> infected;
  for (const auto& row : states.rows) {
    infected[std::stol(row[iter_col])][std::stoi(row[t_col])] = std::stod(row[i_col]);
  }
  const int c_iter = chain.column("iter");
  const int c_p = chain.column("p");
  std::vector<ChainRecord> records;
  for (const auto& row : chain.rows) {
    const long iter = std::stol(row[c_iter]);
    const auto it = infected.find(iter);
    if (it == infected.end()) continue;
    ChainRecord rec;
    rec.iteration = iter;
    const int T = static_cast<int>(it->second.size());
    Matrix traj = Matrix::Zero(seir::kDim, T);
    for (const auto& [t, value] : it->second) traj(seir::kI, t - 1) = value;
    rec.trajectory = Trajectory(std::move(traj));
    rec.theta = Vector(2);
    rec.theta << 0.0, logit(std::stod(row[c_p]));
    records.push_back(std::move(rec));
  }

  RngStream rng(seed == 0 ? cfg.seed : seed, 770001);
  const Matrix draws = posterior_predictive(records, cfg.seir, rng);
  CsvWriter csv(out_file, {"draw", "t", "y"});
  for (Eigen::Index d = 0; d < draws.rows(); ++d) {
    for (Eigen::Index t = 0; t < draws.cols(); ++t) {
      csv.row({std::to_string(records[d].iteration), std::to_string(t + 1),
               format_double(draws(d, t))});
    }
  }
  std::cout << "wrote " << out_file << " (" << draws.rows() * draws.cols() << " rows)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conditional particle filter smoothing experiments"};
  app.require_subcommand(1);

  std::string config_source, out_override, input, states_file, chain_file, out_file = "stats.csv";
  std::string label = "adhoc";
  std::uint64_t seed = 0;
  int workers = 0, n_particles = 1, replicate = 1;

  auto* sim = app.add_subcommand("simulate", "simulate datasets for an experiment config");
  sim->add_option("--config", config_source, "config file, preset name or manifest")->required();
  sim->add_option("--out", out_override, "output directory override");
  sim->add_option("--seed", seed, "data seed override");

  auto* run = app.add_subcommand("run", "run an experiment grid");
  run->add_option("--config", config_source, "config file, preset name or manifest")->required();
  run->add_option("--out", out_override, "output directory override");
  run->add_option("--seed", seed, "root seed override");
  run->add_option("--workers", workers, "worker threads (default: DICPF_WORKERS or hardware)");

  auto* stats = app.add_subcommand("stats", "chain diagnostics for a chain CSV");
  stats->add_option("--input", input, "chain CSV")->required();
  stats->add_option("--out", out_file, "output stats CSV");
  stats->add_option("--n-particles", n_particles, "particle count used by the run");
  stats->add_option("--experiment", label, "experiment label for the stats rows");
  stats->add_option("--replicate", replicate, "replicate id");

  auto* pred = app.add_subcommand("predictive", "posterior predictive counts for a seir run");
  pred->add_option("--chain", chain_file, "chain CSV from a seir run")->required();
  pred->add_option("--states", states_file, "states CSV from a seir run")->required();
  pred->add_option("--config", config_source, "config file, preset name or manifest")->required();
  pred->add_option("--out", out_file, "output CSV")->required();
  pred->add_option("--seed", seed, "seed override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(config_source, out_override, seed);
    if (run->parsed()) return cmd_run(config_source, out_override, seed, workers);
    if (stats->parsed()) return cmd_stats(input, out_file, n_particles, label, replicate);
    if (pred->parsed()) return cmd_predictive(chain_file, states_file, config_source, out_file, seed);
  } catch (const dicpf::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

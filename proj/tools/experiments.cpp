#include "experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <utility>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "incfed/error.hpp"

namespace incfed::experiments {

namespace {

struct RawOptions {
  std::string mode = "run";
  std::string env = "synthetic";
  std::string mechanism = "pe";
  std::string dc = "auto";
  std::string costs = "1";
  double sigma = 0.1;
};

double parse_real(const std::string& key, std::string_view text) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    throw ConfigError(key, "cannot parse '" + std::string(text) + "' as a number");
  }
  return value;
}

std::vector<double> parse_costs(const std::string& text, std::size_t n_clients) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string::npos ? text.size() : comma;
    values.push_back(parse_real("costs", std::string_view(text).substr(start, end - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (values.size() == 1) values.assign(n_clients, values.front());
  if (values.size() != n_clients) {
    throw ConfigError("costs", "expected 1 or " + std::to_string(n_clients) + " values, got " +
                                   std::to_string(values.size()));
  }
  for (double c : values) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("costs", "must be finite and >= 0");
  }
  return values;
}

void build_cli(CLI::App& app, ExperimentSpec& spec, RawOptions& raw) {
  app.description("Incentivized federated linear bandit simulator");
  app.set_config("--config", "", "Read options from an INI/TOML file");
  app.allow_config_extras(CLI::config_extras_mode::error);

  app.add_option("--mode", raw.mode, "run | ablate")->capture_default_str();
  app.add_option("--env", raw.env, "synthetic | dataset:<path>")->capture_default_str();
  app.add_option("--N", spec.env.n_clients, "Number of clients")->capture_default_str();
  app.add_option("--T", spec.env.horizon, "Horizon")->capture_default_str();
  app.add_option("--d", spec.env.dim, "Feature dimension")->capture_default_str();
  app.add_option("--K", spec.env.pool_size, "Arms per round")->capture_default_str();
  app.add_option("--sigma", raw.sigma, "Reward noise scale (environment and model)")
      ->capture_default_str();
  app.add_option("--lambda", spec.protocol.model.lambda, "Ridge regularizer")
      ->capture_default_str();
  app.add_option("--delta", spec.protocol.model.delta, "Confidence parameter")
      ->capture_default_str();
  app.add_option("--mechanism", raw.mechanism, "pf | pe | dislinucb | none")
      ->capture_default_str();
  app.add_option("--beta", spec.protocol.beta, "Beta gap for the payment-efficient mechanism")
      ->capture_default_str();
  app.add_option("--dc", raw.dc, "Communication threshold: auto | <real>")->capture_default_str();
  app.add_option("--costs", raw.costs, "Sharing costs: scalar or comma list of N values")
      ->capture_default_str();
  app.add_option("--seeds", spec.seed_base, "First seed")->capture_default_str();
  app.add_option("--n-seeds", spec.n_seeds, "Number of seeds")->capture_default_str();
  app.add_option("--out", spec.output_dir, "Output directory")->capture_default_str();
  app.add_option("--jobs", spec.jobs, "Worker threads (0 = hardware concurrency)")
      ->capture_default_str();
  app.add_flag("--skip-zero-uploads", spec.protocol.skip_zero_uploads,
               "Do not meter valuation uploads of clients without pending data");
  app.add_flag("--wo-pf", spec.protocol.ablations.disable_payment_free_absorption,
               "Disable data-incentivized participation (payment-efficient only)");
  app.add_flag("--wo-is", spec.protocol.ablations.disable_iterative_search,
               "Rank candidates once instead of after every addition");
  app.add_flag("--audit", spec.protocol.audit, "Check conservation and the beta gap every round");
  app.add_flag("!--no-steps", spec.emit.per_step_csv, "Do not write per-step CSVs");
  app.add_flag("!--no-epochs", spec.emit.epoch_log, "Do not write epoch logs");
  app.add_flag("!--no-summary", spec.emit.summary, "Do not write summary.csv");
}

void resolve(ExperimentSpec& spec, const RawOptions& raw) {
  if (raw.mode == "run") {
    spec.mode = RunMode::run;
  } else if (raw.mode == "ablate") {
    spec.mode = RunMode::ablate;
  } else {
    throw ConfigError("mode", "expected run or ablate, got '" + raw.mode + "'");
  }

  if (raw.env == "synthetic") {
    spec.dataset.reset();
  } else if (raw.env.starts_with("dataset:") && raw.env.size() > 8) {
    spec.dataset = raw.env.substr(8);
  } else {
    throw ConfigError("env", "expected synthetic or dataset:<path>, got '" + raw.env + "'");
  }

  const auto mech = parse_mechanism(raw.mechanism);
  if (!mech) throw ConfigError("mechanism", "expected pf, pe, dislinucb or none");
  spec.protocol.mechanism = *mech;

  if (raw.dc == "auto") {
    spec.protocol.d_c.reset();
  } else {
    spec.protocol.d_c = parse_real("dc", raw.dc);
  }

  spec.env.noise_sigma = raw.sigma;
  spec.protocol.model.sigma = raw.sigma;

  if (spec.n_seeds < 1) throw ConfigError("n-seeds", "must be >= 1");
  if (!(spec.protocol.beta >= 0.0 && spec.protocol.beta <= 1.0)) {
    throw ConfigError("beta", "must lie in [0, 1]");
  }
  if (!(spec.protocol.model.lambda > 0.0)) throw ConfigError("lambda", "must be > 0");
  if (!(spec.protocol.model.delta > 0.0 && spec.protocol.model.delta < 1.0)) {
    throw ConfigError("delta", "must lie in (0, 1)");
  }
  if (!(raw.sigma > 0.0)) throw ConfigError("sigma", "must be > 0");
  spec.env.validate();
  if (spec.protocol.mechanism == Mechanism::payment_efficient && !spec.protocol.d_c &&
      spec.protocol.beta == 0.0) {
    throw ConfigError("dc", "auto threshold is undefined for beta = 0; pass an explicit --dc");
  }

  // The dataset header decides N; costs are broadcast against it.
  std::size_t n_clients = spec.env.n_clients;
  if (spec.dataset) n_clients = Environment::load_dataset(*spec.dataset).n_clients();
  spec.protocol.costs = parse_costs(raw.costs, n_clients);
  spec.protocol.validate(n_clients);
}

std::string key_from_cli_error(const std::string& message) {
  const auto pos = message.find("--");
  if (pos == std::string::npos) return "cli";
  auto end = message.find_first_of(" :=", pos);
  return message.substr(pos + 2, end == std::string::npos ? std::string::npos : end - pos - 2);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void write_variant(const ExperimentSpec& spec, const std::string& variant,
                   std::span<const RunMetrics> runs) {
  if (!spec.emit.per_step_csv && !spec.emit.epoch_log) return;
  const auto dir = spec.output_dir / variant;
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto seed = std::to_string(spec.seed_base + k);
    if (spec.emit.per_step_csv) write_file(dir / ("steps_seed" + seed + ".csv"), format_steps_csv(runs[k]));
    if (spec.emit.epoch_log) write_file(dir / ("epochs_seed" + seed + ".csv"), format_epochs_csv(runs[k]));
  }
}

void write_summary(const ExperimentSpec& spec, std::span<const VariantSummary> rows) {
  if (!spec.emit.summary) return;
  std::filesystem::create_directories(spec.output_dir);
  write_file(spec.output_dir / "summary.csv", format_summary_csv(rows));
}

}  // namespace

ExperimentSpec parse_config(const std::vector<std::string>& args) {
  ExperimentSpec spec;
  RawOptions raw;
  CLI::App app;
  build_cli(app, spec, raw);
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw;
  } catch (const CLI::CallForAllHelp&) {
    throw;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(key_from_cli_error(e.what()), e.what());
  }
  resolve(spec, raw);
  return spec;
}

std::string usage() {
  ExperimentSpec spec;
  RawOptions raw;
  CLI::App app;
  build_cli(app, spec, raw);
  return app.help("incfed_sim");
}

VariantSummary summarize(std::string variant, std::span<const RunMetrics> runs) {
  VariantSummary s;
  s.variant = std::move(variant);
  s.n_seeds = runs.size();
  if (runs.empty()) return s;
  const double n = static_cast<double>(runs.size());
  for (const auto& r : runs) {
    s.mean_final += r.final_value();
    s.mean_comm += static_cast<double>(r.final_comm());
    s.mean_payment += r.final_payment();
  }
  s.mean_final /= n;
  s.mean_comm /= n;
  s.mean_payment /= n;
  if (runs.size() > 1) {
    double ss = 0.0;
    for (const auto& r : runs) ss += (r.final_value() - s.mean_final) * (r.final_value() - s.mean_final);
    s.std_final = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

std::string format_steps_csv(const RunMetrics& m) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf), "step,cum_regret_or_reward,cum_comm_scalars,cum_payment\n");
  for (std::size_t i = 0; i < m.cum_regret_or_reward.size(); ++i) {
    fmt::format_to(std::back_inserter(buf), "{},{:.12g},{},{:.12g}\n", i + 1,
                   m.cum_regret_or_reward[i], m.cum_comm_scalars[i], m.cum_payment[i]);
  }
  return fmt::to_string(buf);
}

std::string format_epochs_csv(const RunMetrics& m) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf),
                 "step,trigger_client,n_participants,round_payment,round_scalars,beta_gap_logratio\n");
  for (const auto& e : m.epochs) {
    fmt::format_to(std::back_inserter(buf), "{},{},{},{:.12g},{},{:.12g}\n", e.step,
                   e.trigger_client + 1, e.n_participants, e.round_payment, e.round_scalars,
                   e.beta_gap_logratio);
  }
  return fmt::to_string(buf);
}

std::string format_summary_csv(std::span<const VariantSummary> rows) {
  fmt::memory_buffer buf;
  fmt::format_to(std::back_inserter(buf),
                 "variant,mean_final_regret_or_reward,std,mean_comm,mean_payment,n_seeds\n");
  for (const auto& r : rows) {
    fmt::format_to(std::back_inserter(buf), "{},{:.12g},{:.12g},{:.12g},{:.12g},{}\n", r.variant,
                   r.mean_final, r.std_final, r.mean_comm, r.mean_payment, r.n_seeds);
  }
  return fmt::to_string(buf);
}

Environment make_environment(const ExperimentSpec& spec, std::uint64_t seed) {
  if (spec.dataset) return Environment::load_dataset(*spec.dataset);
  EnvConfig cfg = spec.env;
  cfg.seed = seed;
  return Environment::synthetic(cfg);
}

std::vector<RunMetrics> run_seeds(const ExperimentSpec& spec, const ProtocolConfig& cfg) {
  const std::size_t n = spec.n_seeds;
  std::vector<RunMetrics> results(n);
  std::vector<std::exception_ptr> errors(n);

  std::size_t workers = spec.jobs != 0 ? spec.jobs : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, n);

  // A dataset is identical for every seed; load it once and share it read-only.
  std::optional<Environment> shared;
  if (spec.dataset) shared = Environment::load_dataset(*spec.dataset);

  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        if (shared) {
          results[k] = run_protocol(*shared, cfg);
        } else {
          const Environment env = make_environment(spec, spec.seed_base + k);
          results[k] = run_protocol(env, cfg);
        }
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

Report run_experiment(const ExperimentSpec& spec) {
  Report report;
  const std::string variant(to_string(spec.protocol.mechanism));
  report.runs.push_back(run_seeds(spec, spec.protocol));
  report.variants.push_back(summarize(variant, report.runs.back()));
  write_variant(spec, variant, report.runs.back());
  write_summary(spec, report.variants);
  return report;
}

Report run_ablation(const ExperimentSpec& spec) {
  struct Variant {
    const char* name;
    bool wo_pf;
    bool wo_is;
  };
  static constexpr Variant kVariants[] = {
      {"full", false, false}, {"wo_pf", true, false}, {"wo_is", false, true}, {"wo_pf_is", true, true}};

  Report report;
  for (const auto& v : kVariants) {
    ProtocolConfig cfg = spec.protocol;
    cfg.mechanism = Mechanism::payment_efficient;
    cfg.ablations.disable_payment_free_absorption = v.wo_pf;
    cfg.ablations.disable_iterative_search = v.wo_is;
    report.runs.push_back(run_seeds(spec, cfg));
    report.variants.push_back(summarize(v.name, report.runs.back()));
    write_variant(spec, v.name, report.runs.back());
  }
  write_summary(spec, report.variants);
  return report;
}

Report run(const ExperimentSpec& spec) {
  return spec.mode == RunMode::ablate ? run_ablation(spec) : run_experiment(spec);
}

}  // namespace incfed::experiments

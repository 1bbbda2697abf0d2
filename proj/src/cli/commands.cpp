#include "decoy/cli/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "decoy/cli/config.hpp"
#include "decoy/cli/report.hpp"
#include "decoy/error.hpp"
#include "decoy/optimizer.hpp"
#include "decoy/parallel.hpp"
#include "decoy/simulator.hpp"

namespace decoy::cli {
namespace {

// Acceptance tolerances for the reference tables.
constexpr double kS1Tolerance = 0.002;
constexpr double kMuSTolerance = 0.005;
constexpr double kRatioTolerance = 0.005;

struct Options {
  std::string config;
  std::optional<double> eta;
  std::optional<double> qber;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string format = "json";
  std::optional<double> xi;
  std::optional<std::string> f_convention;
  std::string out_dir = ".";
};

struct Context {
  Options opt;
  OutputFormat format = OutputFormat::Json;
  std::ostream& out;
  std::ostream& err;
  std::shared_ptr<spdlog::logger> log;
};

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_st>(err);
  auto logger = std::make_shared<spdlog::logger>("decoy-rate", sink);
  logger->set_pattern("[%l] %v");
  logger->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("DECOY_RATE_LOG")) {
    logger->set_level(spdlog::level::from_str(env));
  }
  return logger;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidConfig:
    case ErrorKind::Domain:
    case ErrorKind::OrderingViolation:
    case ErrorKind::EmptyFeasibleSet:
      return kExitInvalidInput;
    case ErrorKind::InconsistentRates:
      return kExitVerificationFailed;
    default:
      return kExitInternal;
  }
}

void emit_json(Context& ctx, const json& report) { ctx.out << report.dump(2) << '\n'; }

/// Loads the config file if one was given and applies flag overrides.
RunConfig resolve_config(const Context& ctx, bool require_file) {
  RunConfig cfg;
  if (!ctx.opt.config.empty()) {
    cfg = load_config(ctx.opt.config);
  } else if (require_file) {
    throw Error(ErrorKind::InvalidConfig, "--config: required for this command");
  }
  if (ctx.opt.eta || ctx.opt.qber) {
    ChannelModel ch = cfg.channel.value_or(ChannelModel{});
    if (ctx.opt.eta) ch.eta = *ctx.opt.eta;
    if (ctx.opt.qber) ch.qber = *ctx.opt.qber;
    cfg.channel = ch;
  }
  if (ctx.opt.xi) cfg.protocol.fluctuation.xi = *ctx.opt.xi;
  if (ctx.opt.f_convention) cfg.f_convention = parse_f_convention(*ctx.opt.f_convention);
  if (ctx.opt.seed) cfg.simulation.seed = *ctx.opt.seed;
  validate(cfg);
  return cfg;
}

ChannelModel require_channel(const RunConfig& cfg) {
  if (!cfg.channel) throw Error(ErrorKind::InvalidConfig, "channel: required for this command");
  return *cfg.channel;
}

int cmd_tamkr(Context& ctx) {
  RunConfig cfg = resolve_config(ctx, false);
  if (!ctx.opt.eta && !(cfg.channel && !ctx.opt.config.empty())) {
    throw Error(ErrorKind::InvalidConfig, "--eta: required");
  }
  const ChannelModel ch = require_channel(cfg);
  const auto best = tamkr(ch.eta, ch.qber);
  ctx.log->info("tamkr eta={} qber={} -> R={} mu={}", ch.eta, ch.qber, best.rate, best.mu.value());

  switch (ctx.format) {
    case OutputFormat::Json:
      emit_json(ctx, {{"command", "tamkr"},
                      {"eta", ch.eta},
                      {"qber", ch.qber},
                      {"rate", best.rate},
                      {"rate_over_eta", best.rate / ch.eta},
                      {"mu", best.mu.value()}});
      break;
    case OutputFormat::Csv:
      ctx.out << "eta,qber,rate,rate_over_eta,mu\n"
              << format_real(ch.eta) << ',' << format_real(ch.qber) << ',' << format_real(best.rate) << ','
              << format_real(best.rate / ch.eta) << ',' << format_real(best.mu.value()) << '\n';
      break;
    case OutputFormat::Text:
      ctx.out << fmt::format("R={:.3e} mu={:.3f}\n", best.rate, best.mu.value());
      break;
  }
  return kExitOk;
}

int cmd_verify(Context& ctx) {
  const RunConfig cfg = resolve_config(ctx, true);
  const auto& p = cfg.protocol;
  ObservedRates obs;
  if (cfg.observed) {
    obs = *cfg.observed;
  } else if (cfg.channel) {
    obs = ObservedRates::paper_mode(p.mu, p.mu_prime, p.mu_s, cfg.channel->eta, cfg.channel->s0);
  } else {
    throw Error(ErrorKind::InvalidConfig, "observed: required unless a channel is given");
  }

  json report = {{"command", "verify"},
                 {"protocol",
                  {{"mu", p.mu.value()},
                   {"mu_prime", p.mu_prime.value()},
                   {"n_fluctuation", p.n_fluctuation()},
                   {"xi", p.fluctuation.xi}}},
                 {"observed", to_json(obs)}};

  try {
    const double delta = delta_upper_asymptotic(p.mu, p.mu_prime, obs);
    report["asymptotic"] = {{"delta_upper", delta}, {"s1_lower", s1_lower_asymptotic(p.mu, delta, obs)}};
  } catch (const Error& e) {
    report["asymptotic"] = {{"error", e.what()}};
  }

  std::optional<VerificationResult> result;
  std::string failure;
  try {
    result = verify_s1_finite(p, obs);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::InconsistentRates) throw;
    failure = e.what();
  }

  bool abort = !result;
  if (result) {
    report["result"] = to_json(*result);
    if (cfg.channel) {
      const double expected = expected_s1_for(p, *cfg.channel);
      abort = result->s1_lower < (1.0 - cfg.simulation.abort_threshold) * expected;
      report["s1_over_eta"] = result->s1_lower / cfg.channel->eta;
      report["expected_s1"] = expected;
    }
  } else {
    report["result"] = nullptr;
    report["error"] = failure;
  }
  report["abort"] = abort;

  std::ostringstream summary;
  if (result) {
    summary << fmt::format("verified s1 >= {:.6e}, Delta <= {:.6f} ({} iterations{})", result->s1_lower,
                           result->delta_upper, result->iterations, result->clamped ? ", clamped" : "");
    if (cfg.channel) summary << fmt::format(", s1/eta = {:.4f}", result->s1_lower / cfg.channel->eta);
  } else {
    summary << "verification rejected the observed rates: " << failure;
  }
  summary << (abort ? "; ABORT\n" : "\n");

  switch (ctx.format) {
    case OutputFormat::Json:
      emit_json(ctx, report);
      ctx.err << summary.str();
      break;
    case OutputFormat::Csv:
      ctx.out << "mu,mu_prime,xi,delta_upper,s1_lower,abort\n"
              << format_real(p.mu.value()) << ',' << format_real(p.mu_prime.value()) << ','
              << format_real(p.fluctuation.xi) << ',' << (result ? format_real(result->delta_upper) : "") << ','
              << (result ? format_real(result->s1_lower) : "") << ',' << (abort ? 1 : 0) << '\n';
      break;
    case OutputFormat::Text:
      ctx.out << summary.str();
      break;
  }
  return abort ? kExitVerificationFailed : kExitOk;
}

int cmd_optimize(Context& ctx) {
  const RunConfig cfg = resolve_config(ctx, false);
  const ChannelModel ch = require_channel(cfg);
  OptimizerOptions oo;
  oo.threads = ctx.opt.threads;

  const auto stage1 = optimize_mu_prime(cfg.protocol.mu, ch, cfg.protocol, oo);
  const double s1_over_eta = stage1.verification.s1_lower / ch.eta;
  ctx.log->info("mu'* = {} with s1/eta = {}", stage1.mu_prime.value(), s1_over_eta);
  const auto stage2 = optimize_mu_s(s1_over_eta, cfg.protocol.mu, ch, cfg.f_convention);

  switch (ctx.format) {
    case OutputFormat::Json:
      emit_json(ctx, {{"command", "optimize"},
                      {"eta", ch.eta},
                      {"s0", ch.s0},
                      {"qber", ch.qber},
                      {"f_convention", to_string(cfg.f_convention)},
                      {"mu", cfg.protocol.mu.value()},
                      {"mu_prime", stage1.mu_prime.value()},
                      {"s1_over_eta", s1_over_eta},
                      {"verification", to_json(stage1.verification)},
                      {"mu_s", stage2.mu_s.value()},
                      {"r_signal", stage2.report.r_signal},
                      {"r_signal_over_eta", stage2.report.r_signal / ch.eta},
                      {"ratio", stage2.report.ratio},
                      {"report", to_json(stage2.report)}});
      break;
    case OutputFormat::Csv:
      ctx.out << "eta,s0,mu,mu_prime,s1_over_eta,mu_s,r_signal,ratio\n"
              << format_real(ch.eta) << ',' << format_real(ch.s0) << ',' << format_real(cfg.protocol.mu.value())
              << ',' << format_real(stage1.mu_prime.value()) << ',' << format_real(s1_over_eta) << ','
              << format_real(stage2.mu_s.value()) << ',' << format_real(stage2.report.r_signal) << ','
              << format_real(stage2.report.ratio) << '\n';
      break;
    case OutputFormat::Text:
      ctx.out << fmt::format("mu'={:.4f} s1/eta={:.4f} mu_s={:.4f} R_s={:.4e} ratio={:.1f}%{}\n",
                             stage1.mu_prime.value(), s1_over_eta, stage2.mu_s.value(), stage2.report.r_signal,
                             100.0 * stage2.report.ratio, stage2.report.rate_zero ? " (rate zero)" : "");
      break;
  }
  return kExitOk;
}

json attack_json(const AttackStrategy& a) {
  if (a.kind == AttackStrategy::Kind::None) return {{"kind", "none"}};
  return {{"kind", "pns"},
          {"block_single", a.pns.block_single},
          {"multi_keep", a.pns.multi_keep},
          {"forward_transmittance", a.pns.forward_transmittance}};
}

int cmd_simulate(Context& ctx) {
  const RunConfig cfg = resolve_config(ctx, true);
  const ChannelModel ch = require_channel(cfg);
  const auto& sim = cfg.simulation;
  if (sim.mode == SimulationMode::MonteCarlo && !sim.seed) {
    throw Error(ErrorKind::InvalidConfig, "--seed: required for monte-carlo simulation");
  }
  const std::uint64_t seed = sim.seed.value_or(0);

  if (sim.scenario == Scenario::WeakDecoy) {
    const auto rep = weak_decoy_counterexample(sim.weak_decoy.n_pulses, Intensity{sim.weak_decoy.mu_v}, ch,
                                               sim.weak_decoy.trials, seed, sim.mode, cfg.protocol.fluctuation,
                                               ctx.opt.threads);
    switch (ctx.format) {
      case OutputFormat::Json: {
        json j = to_json(rep);
        j["command"] = "simulate";
        j["scenario"] = "weak-decoy";
        j["seed"] = seed;
        emit_json(ctx, j);
        break;
      }
      case OutputFormat::Csv:
        ctx.out << "trial,count\n";
        for (std::size_t t = 0; t < rep.counts.size(); ++t) ctx.out << t << ',' << rep.counts[t] << '\n';
        break;
      case OutputFormat::Text:
        ctx.out << fmt::format(
            "expected {:.1f} counts ({:.1f} dark + {:.1f} signal), spread {:.1f}; observed mean {:.1f} sd {:.1f}; "
            "{:.1f}% of trials explainable by dark counts alone\n",
            rep.expected_total, rep.expected_dark, rep.expected_signal, rep.expected_stddev, rep.mean_count,
            rep.sample_stddev, 100.0 * rep.fraction_dark_explainable);
        break;
    }
    return kExitOk;
  }

  std::vector<EndToEndResult> runs(sim.trials);
  std::vector<std::uint64_t> seeds(sim.trials);
  parallel_for(sim.trials, ctx.opt.threads, [&](std::size_t t) {
    SimulationConfig sc;
    sc.seed = seeds[t] = trial_seed(seed, t);
    sc.params = cfg.protocol;
    sc.channel = ch;
    sc.attack = sim.attack;
    sc.mode = sim.mode;
    sc.rate_model = sim.rate_model;
    sc.n_max = sim.n_max;
    runs[t] = end_to_end_verify(sc, sim.abort_threshold);
  });

  std::uint64_t aborts = 0;
  std::uint64_t violations = 0;
  json run_list = json::array();
  for (std::size_t t = 0; t < runs.size(); ++t) {
    const auto& r = runs[t];
    aborts += r.abort ? 1 : 0;
    const bool violated = r.verification && r.verification->s1_lower > r.outcome.true_s1;
    violations += violated ? 1 : 0;
    json item = {{"trial", t},
                 {"seed", seeds[t]},
                 {"observed", to_json(r.outcome.observed)},
                 {"true_s1", r.outcome.true_s1},
                 {"expected_s1", r.expected_s1},
                 {"abort", r.abort}};
    if (r.verification) {
      item["verification"] = to_json(*r.verification);
      item["s1_over_eta"] = r.verification->s1_lower / ch.eta;
    } else {
      item["verification"] = nullptr;
      item["verifier_error"] = r.verifier_error;
    }
    run_list.push_back(std::move(item));
  }
  ctx.log->info("{} trials, {} aborts, {} conservatism violations", runs.size(), aborts, violations);

  switch (ctx.format) {
    case OutputFormat::Json: {
      json j = {{"command", "simulate"},
                {"scenario", "end-to-end"},
                {"seed", seed},
                {"trials", sim.trials},
                {"mode", sim.mode == SimulationMode::MonteCarlo ? "monte-carlo" : "analytic"},
                {"rate_model", sim.rate_model == RateModel::Paper ? "paper" : "physical"},
                {"attack", attack_json(sim.attack)},
                {"abort_threshold", sim.abort_threshold},
                {"aborts", aborts},
                {"conservatism_violations", violations},
                {"runs", run_list}};
      if (runs.size() == 1) {
        RunConfig follow_up;
        follow_up.protocol = cfg.protocol;
        follow_up.channel = ch;
        follow_up.observed = runs.front().outcome.observed;
        j["verify_config"] = to_json(follow_up);
      }
      emit_json(ctx, j);
      break;
    }
    case OutputFormat::Csv:
      ctx.out << "trial,seed,s1_lower,true_s1,expected_s1,abort\n";
      for (std::size_t t = 0; t < runs.size(); ++t) {
        const auto& r = runs[t];
        ctx.out << t << ',' << seeds[t] << ',' << (r.verification ? format_real(r.verification->s1_lower) : "")
                << ',' << format_real(r.outcome.true_s1) << ',' << format_real(r.expected_s1) << ','
                << (r.abort ? 1 : 0) << '\n';
      }
      break;
    case OutputFormat::Text:
      ctx.out << fmt::format("{} trials: {} aborted, {} with s1_lower above the true s1\n", runs.size(), aborts,
                             violations);
      break;
  }
  return aborts > 0 ? kExitVerificationFailed : kExitOk;
}

int cmd_reproduce_tables(Context& ctx) {
  RunConfig cfg;
  if (!ctx.opt.config.empty()) cfg = load_config(ctx.opt.config);
  if (ctx.opt.xi) cfg.protocol.fluctuation.xi = *ctx.opt.xi;
  if (ctx.opt.f_convention) cfg.f_convention = parse_f_convention(*ctx.opt.f_convention);
  const double qber = cfg.channel ? cfg.channel->qber : 0.03;

  const auto configs = reference_table_configs();
  const auto table1 = reproduce_table1(configs, cfg.protocol.fluctuation);
  const auto table2 = reproduce_table2(configs, qber, cfg.protocol.fluctuation, cfg.f_convention);

  std::vector<std::string> notes;
  bool within = true;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    const auto& c = configs[i];
    const auto col = i + 1;
    if (c.printed_mu_prime_alt > 0.0) {
      auto alt = c;
      alt.mu_prime = Intensity{c.printed_mu_prime_alt};
      const auto alt_row = reproduce_table1({alt}, cfg.protocol.fluctuation).front();
      notes.push_back(fmt::format(
          "column {}: verification table prints mu'={}, key-rate table prints mu'={}; reproduction uses {} "
          "(s1/eta = {:.4f}; at mu'={} it is {:.4f})",
          col, c.printed_mu_prime_alt, c.mu_prime.value(), c.mu_prime.value(), table1[i].s1_over_eta,
          c.printed_mu_prime_alt, alt_row.s1_over_eta));
    }

    double ratio_target = c.printed_ratio;
    const double direct = ratio_at_printed_point(c, qber);
    if (std::abs(direct - c.printed_ratio) > kRatioTolerance) {
      ratio_target = direct;
      notes.push_back(fmt::format(
          "column {}: printed ratio {:.3f} is not reproduced by the signal-rate formula at the printed "
          "s1/eta={} and mu_s={} (direct evaluation gives {:.4f}); reproduced ratio {:.4f} is checked "
          "against the direct value",
          col, c.printed_ratio, c.printed_s1_over_eta, c.printed_mu_s, direct, table2[i].ratio));
    }

    const auto cell = [&](const char* name, double got, double want, double tol) {
      if (std::abs(got - want) > tol) {
        within = false;
        notes.push_back(fmt::format("column {}: {} = {:.4f} deviates from {:.4f} by more than {}", col, name, got,
                                    want, tol));
      }
    };
    cell("s1/eta", table1[i].s1_over_eta, c.printed_s1_over_eta, kS1Tolerance);
    cell("mu_s", table2[i].mu_s.value(), c.printed_mu_s, kMuSTolerance);
    cell("ratio", table2[i].ratio, ratio_target, kRatioTolerance);
  }

  const std::filesystem::path dir(ctx.opt.out_dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream f(dir / "table1.csv");
    write_table1_csv(f, table1);
  }
  {
    std::ofstream f(dir / "table2.csv");
    write_table2_csv(f, table2);
  }
  {
    std::ofstream f(dir / "deviations.txt");
    for (const auto& n : notes) f << n << '\n';
  }

  switch (ctx.format) {
    case OutputFormat::Json: {
      json t1 = json::array();
      json t2 = json::array();
      for (const auto& r : table1) t1.push_back(to_json(r));
      for (const auto& r : table2) t2.push_back(to_json(r));
      emit_json(ctx, {{"command", "reproduce-tables"},
                      {"qber", qber},
                      {"xi", cfg.protocol.fluctuation.xi},
                      {"f_convention", to_string(cfg.f_convention)},
                      {"table1", t1},
                      {"table2", t2},
                      {"deviations", notes},
                      {"within_tolerance", within}});
      break;
    }
    case OutputFormat::Csv:
      write_table2_csv(ctx.out, table2);
      break;
    case OutputFormat::Text:
      for (const auto& r : table2) {
        ctx.out << fmt::format("eta={:.0e} s0={:.0e} mu={:.2f} mu'={:.2f} s1/eta={:.4f} mu_s={:.4f} ratio={:.1f}%\n",
                               r.eta, r.s0, r.mu.value(), r.mu_prime.value(), r.s1_over_eta, r.mu_s.value(),
                               100.0 * r.ratio);
      }
      for (const auto& n : notes) ctx.out << "note: " << n << '\n';
      break;
  }
  return within ? kExitOk : kExitToleranceExceeded;
}

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON run configuration ('-' for stdin)");
  cmd->add_option("--eta", o.eta, "Channel transmittance");
  cmd->add_option("--qber", o.qber, "Ideal-protocol error rate E");
  cmd->add_option("--seed", o.seed, "PRNG seed (required for randomized runs)");
  cmd->add_option("--threads", o.threads, "Worker threads")->check(CLI::Range(1u, 1024u));
  cmd->add_option("--format", o.format, "Report format")->check(CLI::IsMember({"json", "csv", "text"}));
  cmd->add_option("--xi", o.xi, "Confidence multiplier");
  cmd->add_option("--f-convention", o.f_convention, "Phase-error exponent convention")
      ->check(CLI::IsMember({"literal", "physical"}));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Decoy-state QKD verification, key-rate optimization and simulation", "decoy-rate"};
  app.require_subcommand(1);
  Options opt;

  auto* tamkr_cmd = app.add_subcommand("tamkr", "Maximum key rate of the ideal protocol");
  auto* verify_cmd = app.add_subcommand("verify", "Finite-statistics single-photon bound from observed rates");
  auto* optimize_cmd = app.add_subcommand("optimize", "Two-stage choice of mu' and mu_s");
  auto* simulate_cmd = app.add_subcommand("simulate", "Channel and attack simulation with verification");
  auto* tables_cmd = app.add_subcommand("reproduce-tables", "Recompute the reference tables as CSV");
  for (auto* c : {tamkr_cmd, verify_cmd, optimize_cmd, simulate_cmd, tables_cmd}) add_common(c, opt);
  tables_cmd->add_option("--out-dir", opt.out_dir, "Directory for table1.csv, table2.csv, deviations.txt");

  std::vector<std::string> argv_store{"decoy-rate"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidInput;
  }

  Context ctx{opt, OutputFormat::Json, out, err, make_logger(err)};
  try {
    ctx.format = parse_format(opt.format);
    if (tamkr_cmd->parsed()) return cmd_tamkr(ctx);
    if (verify_cmd->parsed()) return cmd_verify(ctx);
    if (optimize_cmd->parsed()) return cmd_optimize(ctx);
    if (simulate_cmd->parsed()) return cmd_simulate(ctx);
    if (tables_cmd->parsed()) return cmd_reproduce_tables(ctx);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInvalidInput;
}

}  // namespace decoy::cli

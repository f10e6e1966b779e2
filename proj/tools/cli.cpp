#include "cli.hpp"

#include "uplink/amc.hpp"
#include "uplink/analysis.hpp"
#include "uplink/config.hpp"
#include "uplink/engine.hpp"
#include "uplink/format.hpp"
#include "uplink/metrics.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string_view>

namespace uplink::cli {

namespace {

// Thrown for anything the user can fix by changing flags or the config.
class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string command;
  std::string config_path;
  std::string output_path;
  std::string preset;
  std::string distances;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::optional<int> frames;
  std::vector<std::string> schedulers;
  std::vector<double> values;
  std::vector<std::string> sets;
  std::optional<double> ber;
  unsigned workers = 0;
  std::string trace_snr;
  std::string trace_alloc;
  std::string trace_tcp;
};

struct Preset {
  std::string_view name;
  std::string_view command;
  std::vector<SchedulerKind> schedulers;
  DistanceLayout layout;
};

const std::vector<double> kSigmaValues = {4, 6, 8, 10, 12};
const std::vector<double> kCwndValues = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};

// Ids follow the figure numbering listed in the README.
const std::vector<Preset>& presets() {
  using K = SchedulerKind;
  static const std::vector<Preset> table = {
      {"fig-4", "sweep-cwnd", {K::TWUS, K::TWUSA}, DistanceLayout::Equal},
      {"fig-5", "sweep-sigma", {K::RRA, K::TWUSA, K::DTWUSA}, DistanceLayout::Equal},
      {"fig-6", "sweep-sigma", {K::RRA, K::TWUSA, K::DTWUSA}, DistanceLayout::Equal},
      {"fig-7", "sweep-sigma", {K::RR, K::TWUS, K::DTWUS}, DistanceLayout::Equal},
      {"fig-8", "sweep-sigma", {K::RR, K::TWUS, K::DTWUS}, DistanceLayout::Equal},
      {"fig-9", "sweep-sigma", {K::RRA, K::TWUSA, K::DTWUSA}, DistanceLayout::Unequal},
      {"fig-10", "sweep-sigma", {K::RRA, K::TWUSA, K::DTWUSA}, DistanceLayout::Equal},
      {"fig-11", "sweep-sigma", {K::RR, K::TWUS, K::DTWUS}, DistanceLayout::Equal},
      {"fig-12", "validate-analysis", {K::TWUSA}, DistanceLayout::Equal},
      {"fig-13", "validate-analysis", {K::DTWUSA}, DistanceLayout::Equal},
      {"fig-14", "validate-analysis", {K::TWUSA}, DistanceLayout::Unequal},
      {"fig-15", "validate-analysis", {K::DTWUSA}, DistanceLayout::Unequal},
  };
  return table;
}

const Preset* find_preset(std::string_view name) {
  for (const auto& p : presets()) {
    if (p.name == name) {
      return &p;
    }
  }
  return nullptr;
}

std::string fixed(double value, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, value);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw UsageError("cannot read config file '" + path + "'");
  }
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) {
      out += sep;
    }
    out += parts[i];
  }
  return out;
}

// Everything needed to build one validated config per scheduler.
struct Plan {
  Options opts;
  const Preset* preset = nullptr;
  DistanceLayout layout = DistanceLayout::Equal;
  std::string config_text;
  std::string set_text;
  std::vector<SchedulerKind> schedulers;
  std::vector<double> values;

  ExperimentConfig config_for(SchedulerKind kind) const {
    auto config = parse_config(config_text, default_config(layout, kind));
    config = parse_config(set_text, config);
    config.scheduler = kind;
    if (opts.seed) {
      config.rng_seed = *opts.seed;
    }
    if (opts.runs) {
      config.num_runs = *opts.runs;
    }
    if (opts.frames) {
      config.num_frames = *opts.frames;
    }
    validate(config);
    return config;
  }
};

Plan make_plan(const Options& opts) {
  Plan plan;
  plan.opts = opts;

  if (!opts.preset.empty()) {
    plan.preset = find_preset(opts.preset);
    if (!plan.preset) {
      throw UsageError("unknown preset '" + opts.preset + "'");
    }
    if (plan.preset->command != opts.command) {
      throw UsageError("preset " + opts.preset + " belongs to the " + std::string(plan.preset->command) +
                       " subcommand");
    }
  }

  if (opts.distances == "equal") {
    plan.layout = DistanceLayout::Equal;
  } else if (opts.distances == "unequal") {
    plan.layout = DistanceLayout::Unequal;
  } else if (!opts.distances.empty()) {
    throw UsageError("--distances expects equal or unequal");
  } else if (plan.preset) {
    plan.layout = plan.preset->layout;
  }

  std::string path = opts.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnvVar); env && *env) {
      path = env;
    }
  }
  if (!path.empty()) {
    plan.config_text = read_file(path);
  }
  plan.set_text = join(opts.sets, "\n");

  for (const auto& name : opts.schedulers) {
    const auto kind = parse_scheduler_kind(name);
    if (!kind) {
      throw UsageError("unknown scheduler '" + name + "'");
    }
    plan.schedulers.push_back(*kind);
  }
  if (plan.schedulers.empty()) {
    if (plan.preset) {
      plan.schedulers = plan.preset->schedulers;
    } else {
      auto probe = parse_config(plan.config_text, default_config(plan.layout));
      probe = parse_config(plan.set_text, probe);
      plan.schedulers.push_back(probe.scheduler);
    }
  }

  plan.values = opts.values;
  if (plan.values.empty()) {
    plan.values = opts.command == "sweep-sigma" ? kSigmaValues : kCwndValues;
  }
  return plan;
}

std::vector<std::string> aggregate_header() {
  std::vector<std::string> header = {"scheduler", "parameter", "value", "runs"};
  for (const auto& field : metric_fields()) {
    header.push_back("mean_" + std::string(field.name));
    header.push_back("std_" + std::string(field.name));
  }
  return header;
}

std::vector<std::string> aggregate_row(SchedulerKind kind, std::string_view parameter, double value,
                                       const AggregateMetrics& agg) {
  std::vector<std::string> row = {std::string(to_string(kind)), std::string(parameter), format_number(value),
                                  std::to_string(agg.runs)};
  for (const auto& field : metric_fields()) {
    row.push_back(format_number(agg.mean.*field.member));
    row.push_back(format_number(agg.stddev.*field.member));
  }
  return row;
}

struct Outcome {
  CsvTable table;
  std::string summary;
};

std::string describe(SchedulerKind kind, double sigma, const AggregateMetrics& agg) {
  return std::string(to_string(kind)) + " sigma_db=" + format_number(sigma) +
         " throughput_mbps=" + fixed(agg.mean.avg_throughput_bps / 1e6, 3) + " jfi=" + fixed(agg.mean.jfi, 4);
}

ExperimentOptions experiment_options(const Options& opts) {
  ExperimentOptions options;
  options.workers = opts.workers;
  return options;
}

std::ofstream open_trace(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write trace file '" + path + "'");
  }
  return out;
}

Outcome command_run(const Plan& plan) {
  const bool tracing = !plan.opts.trace_snr.empty() || !plan.opts.trace_alloc.empty() ||
                       !plan.opts.trace_tcp.empty();
  if (tracing && plan.schedulers.size() != 1) {
    throw UsageError("trace output needs exactly one scheduler");
  }
  std::vector<ExperimentConfig> configs;
  for (const auto kind : plan.schedulers) {
    configs.push_back(plan.config_for(kind));
  }

  Outcome outcome;
  outcome.table.header = aggregate_header();
  std::vector<std::string> parts;
  for (const auto& config : configs) {
    const auto agg = run_experiment(config, experiment_options(plan.opts));
    outcome.table.rows.push_back(aggregate_row(config.scheduler, "sigma_db", config.shadowing_sigma_dB, agg));
    parts.push_back(describe(config.scheduler, config.shadowing_sigma_dB, agg));
  }
  outcome.summary = join(parts, "; ");

  if (tracing) {
    std::ofstream snr;
    std::ofstream alloc;
    std::ofstream tcp;
    RunOptions options;
    if (!plan.opts.trace_snr.empty()) {
      snr = open_trace(plan.opts.trace_snr);
      options.traces.snr = &snr;
    }
    if (!plan.opts.trace_alloc.empty()) {
      alloc = open_trace(plan.opts.trace_alloc);
      options.traces.allocation = &alloc;
    }
    if (!plan.opts.trace_tcp.empty()) {
      tcp = open_trace(plan.opts.trace_tcp);
      options.traces.tcp = &tcp;
    }
    run_single(configs.front(), 0, options);
    for (auto* stream : {&snr, &alloc, &tcp}) {
      if (stream->is_open() && !stream->flush()) {
        throw std::runtime_error("failed writing trace output");
      }
    }
  }
  return outcome;
}

Outcome command_sweep(const Plan& plan, SweepParameter parameter) {
  const std::string_view name = parameter == SweepParameter::SigmaDb ? "sigma_db" : "cwnd_max";
  std::vector<ExperimentConfig> configs;
  for (const auto kind : plan.schedulers) {
    configs.push_back(plan.config_for(kind));
  }
  for (const double value : plan.values) {
    const bool ok = parameter == SweepParameter::SigmaDb ? value >= 0.0 : value >= 1.0;
    if (!ok) {
      throw UsageError("sweep value " + format_number(value) + " out of range for " + std::string(name));
    }
  }

  Outcome outcome;
  outcome.table.header = aggregate_header();
  double thr_sum = 0.0;
  double jfi_sum = 0.0;
  for (const double value : plan.values) {
    for (const auto& base : configs) {
      const std::vector<double> point = {value};
      const auto rows = sweep(base, parameter, point, experiment_options(plan.opts));
      const auto& agg = rows.front().metrics;
      outcome.table.rows.push_back(aggregate_row(base.scheduler, name, value, agg));
      thr_sum += agg.mean.avg_throughput_bps;
      jfi_sum += agg.mean.jfi;
    }
  }
  std::vector<std::string> kinds;
  for (const auto kind : plan.schedulers) {
    kinds.emplace_back(to_string(kind));
  }
  const auto n = static_cast<double>(outcome.table.rows.size());
  outcome.summary = plan.opts.command + " " + join(kinds, ",") + " " + std::string(name) + "=" +
                    format_number(plan.values.front()) + ".." + format_number(plan.values.back()) +
                    (parameter == SweepParameter::SigmaDb
                         ? std::string()
                         : " sigma_db=" + format_number(configs.front().shadowing_sigma_dB)) +
                    " throughput_mbps=" + fixed(thr_sum / n / 1e6, 3) + " jfi=" + fixed(jfi_sum / n, 4);
  return outcome;
}

Outcome command_validate(const Plan& plan) {
  if (plan.schedulers.size() != 1) {
    throw UsageError("validate-analysis takes exactly one scheduler");
  }
  for (const double value : plan.values) {
    if (value < 1.0) {
      throw UsageError("cwnd_max values must be >= 1");
    }
  }
  const auto config = plan.config_for(plan.schedulers.front());
  const auto rows = compare_with_simulation(config, plan.values, experiment_options(plan.opts));

  Outcome outcome;
  outcome.table.header = {"cwnd_max", "sim_bps", "model_bps", "rel_err"};
  double worst = 0.0;
  double p_sum = 0.0;
  for (const auto& row : rows) {
    outcome.table.rows.push_back({std::to_string(row.cwnd_max), format_number(row.sim_bps),
                                  format_number(row.model_bps), format_number(row.rel_err)});
    worst = std::max(worst, row.rel_err);
    p_sum += row.params.p;
  }
  outcome.summary = "validate-analysis " + std::string(to_string(config.scheduler)) +
                    " sigma_db=" + format_number(config.shadowing_sigma_dB) +
                    " p=" + fixed(p_sum / static_cast<double>(rows.size()), 4) +
                    " max_rel_err=" + fixed(worst, 4);
  return outcome;
}

Outcome command_amc(const Plan& plan) {
  auto config = parse_config(plan.config_text, default_config(plan.layout));
  config = parse_config(plan.set_text, config);
  if (plan.opts.ber) {
    config.target_ber = *plan.opts.ber;
  }
  validate(config);
  const auto table = build_table(config.channel_bandwidth_hz, config.target_ber, config.rates_bps);

  Outcome outcome;
  outcome.table.header = {"scheme", "rate_mbps", "spectral_eff", "mod_index", "snr_th_db"};
  for (const auto& row : table.rows) {
    outcome.table.rows.push_back({std::string(to_string(row.scheme)), format_number(row.rate_bps / 1e6),
                                  format_number(row.spectral_eff), format_number(row.mod_index),
                                  format_number(row.snr_th_dB)});
  }
  outcome.summary = "dump-amc-table ber=" + format_number(config.target_ber) + " schemes=" +
                    std::to_string(table.rows.size());
  return outcome;
}

void add_experiment_flags(CLI::App& sub, Options& opts, bool with_values) {
  sub.add_option("--scheduler", opts.schedulers, "Comma-separated schedulers (rr, rr-a, twus, twus-a, dtwus, dtwus-a)")
      ->delimiter(',');
  sub.add_option("--runs", opts.runs, "Independent runs")->check(CLI::PositiveNumber);
  sub.add_option("--frames", opts.frames, "Frames per run")->check(CLI::PositiveNumber);
  sub.add_option("--workers", opts.workers, "Worker threads, 0 = all cores");
  if (with_values) {
    sub.add_option("--values", opts.values, "Comma-separated sweep values")->delimiter(',');
    sub.add_option("--preset", opts.preset, "Figure preset, fig-<n>");
  }
}

} // namespace

void write_csv(const CsvTable& table, std::ostream& out) {
  const auto line = [&](const std::vector<std::string>& cells) {
    if (cells.size() != table.header.size()) {
      throw std::invalid_argument("csv row width does not match header");
    }
    out << join(cells, ",") << '\n';
  };
  line(table.header);
  for (const auto& row : table.rows) {
    line(row);
  }
}

void emit_csv(const CsvTable& table, const std::string& path) {
  std::ostringstream text;
  write_csv(table, text);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text.str()) || !out.flush()) {
    throw std::runtime_error("cannot write output file '" + path + "'");
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opts;
  CLI::App app{"Frame-level simulator of TCP-aware uplink scheduling in 802.16 networks"};
  app.name(args.empty() ? "uplink-sim" : args.front());
  app.require_subcommand(1, 1);

  app.add_option("-c,--config", opts.config_path,
                 std::string("Config file (key = value); defaults to $") + kConfigEnvVar);
  app.add_option("-o,--output", opts.output_path, "CSV output path; stdout when omitted");
  app.add_option("--seed", opts.seed, "Override rng_seed");
  app.add_option("--distances", opts.distances, "equal or unequal station layout");
  app.add_option("--set", opts.sets, "Override one config key, key=value (repeatable)");

  auto* run_cmd = app.add_subcommand("run", "Run one experiment per scheduler");
  add_experiment_flags(*run_cmd, opts, false);
  run_cmd->add_option("--trace-snr", opts.trace_snr, "Per-frame SNR trace of run 0");
  run_cmd->add_option("--trace-alloc", opts.trace_alloc, "Per-frame allocation trace of run 0");
  run_cmd->add_option("--trace-tcp", opts.trace_tcp, "TCP event trace of run 0");

  auto* sigma_cmd = app.add_subcommand("sweep-sigma", "Sweep the shadowing standard deviation");
  add_experiment_flags(*sigma_cmd, opts, true);
  auto* cwnd_cmd = app.add_subcommand("sweep-cwnd", "Sweep cwnd_max");
  add_experiment_flags(*cwnd_cmd, opts, true);
  auto* analysis_cmd = app.add_subcommand("validate-analysis", "Compare simulated and modelled send rates");
  add_experiment_flags(*analysis_cmd, opts, true);
  auto* amc_cmd = app.add_subcommand("dump-amc-table", "Print the modulation threshold table");
  amc_cmd->add_option("--ber", opts.ber, "Target bit error rate")->check(CLI::Range(1e-300, 0.2));

  // Global flags may appear after the subcommand too.
  for (auto* sub : {run_cmd, sigma_cmd, cwnd_cmd, analysis_cmd, amc_cmd}) {
    sub->fallthrough();
  }

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  if (args.empty()) {
    argv.push_back("uplink-sim");
  }
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }
  opts.command = app.get_subcommands().front()->get_name();

  Plan plan;
  try {
    plan = make_plan(opts);
    if (opts.command != "dump-amc-table") {
      for (const auto kind : plan.schedulers) {
        (void)plan.config_for(kind);
      }
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    Outcome outcome;
    if (opts.command == "run") {
      outcome = command_run(plan);
    } else if (opts.command == "sweep-sigma") {
      outcome = command_sweep(plan, SweepParameter::SigmaDb);
    } else if (opts.command == "sweep-cwnd") {
      outcome = command_sweep(plan, SweepParameter::CwndMax);
    } else if (opts.command == "validate-analysis") {
      outcome = command_validate(plan);
    } else {
      outcome = command_amc(plan);
    }
    if (opts.output_path.empty()) {
      write_csv(outcome.table, out);
      err << outcome.summary << '\n';
    } else {
      emit_csv(outcome.table, opts.output_path);
      out << outcome.summary << '\n';
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

} // namespace uplink::cli

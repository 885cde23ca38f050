// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "trajfuse/trajfuse.hpp"

#ifndef TRAJFUSE_VERSION
#define TRAJFUSE_VERSION "0.0.0"
#endif

namespace trajfuse::cli {

namespace fs = std::filesystem;
using nlohmann::json;

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kMissingInput = 3,
  kFormatError = 4,
  kNumericalError = 5,
};

struct Options {
  std::string command;
  std::string env_kind;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string in_dir;
  std::string method = "fusian";
  std::string targets;
  bool no_noise = false;
};

inline void log_line(const std::string& msg) { std::cerr << "[trajfuse] " << msg << '\n'; }

/// Stage context: resolved paths, seed and config snapshot for the manifest.
class Stage {
 public:
  Stage(const Options& opt, std::string name)
      : opt_(opt), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {
    if (opt.seed) {
      seed_ = *opt.seed;
    } else {
      std::random_device rd;
      seed_ = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
      log_line("no --seed given; drew " + std::to_string(seed_));
    }
    out_ = opt.out_dir;
    in_ = opt.in_dir.empty() ? out_ : fs::path(opt.in_dir);
    fs::create_directories(out_);
    if (!opt.config_path.empty()) {
      const auto text = detail::read_file(opt.config_path);
      try {
        file_config_ = json::parse(text);
      } catch (const json::parse_error& e) {
        throw ConfigError(opt.config_path + ": " + e.what());
      }
      config::check_top_level(file_config_);
      inputs_.push_back(opt.config_path);
    } else {
      file_config_ = json::object();
    }
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stage_seed(const std::string& tag) const { return derive_seed(seed_, tag); }
  const json& section(const std::string& key) const {
    static const json empty = json::object();
    return file_config_.contains(key) ? file_config_.at(key) : empty;
  }
  bool has_section(const std::string& key) const { return file_config_.contains(key); }

  fs::path input(const std::string& file) {
    const fs::path p = in_ / file;
    if (!fs::exists(p)) throw MissingInput("required input " + p.string() + " does not exist");
    inputs_.push_back(p.string());
    return p;
  }
  fs::path output(const std::string& file) {
    outputs_.push_back(file);
    return out_ / file;
  }
  void snapshot(const std::string& key, json value) { snapshot_[key] = std::move(value); }
  const json& snapshot() const { return snapshot_; }

  void write_manifest(const std::string& file) const {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m = {{"command", name_},
              {"config", snapshot_},
              {"seed", seed_},
              {"inputs", inputs_},
              {"outputs", outputs_},
              {"tool_version", TRAJFUSE_VERSION},
              {"wall_clock_seconds", secs}};
    detail::write_file(out_ / file, m.dump(2) + "\n");
  }

 private:
  const Options& opt_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
  std::uint64_t seed_ = 0;
  fs::path out_, in_;
  json file_config_;
  json snapshot_ = json::object();
  std::vector<std::string> inputs_, outputs_;
};

// --- environment description shared between stages -------------------------

struct EnvSpec {
  std::string kind;  // "analytic" | "toysft"
  AnalyticEnvConfig analytic;
  ToySFTConfig toy;

  std::unique_ptr<Environment> make(bool noise = true) const {
    if (kind == "analytic") {
      AnalyticEnvConfig c = analytic;
      if (!noise) c.noise_sd = 0.0;
      return std::make_unique<AnalyticEnvironment>(c);
    }
    return std::make_unique<ToySFTEnvironment>(toy);
  }

  json to_json() const {
    return {{"format_version", 1},
            {"env", kind},
            {"config", kind == "analytic" ? config::to_json(analytic) : config::to_json(toy)}};
  }
};

inline EnvSpec env_from_file(const fs::path& path) {
  const auto j = detail::parse_json(detail::read_file(path), path.string());
  if (detail::field<int>(j, "format_version", "") != 1)
    throw VersionError(path.string() + ": unsupported env format_version");
  EnvSpec spec;
  spec.kind = detail::field<std::string>(j, "env", "");
  try {
    if (spec.kind == "analytic")
      spec.analytic = config::analytic_from_json(j.at("config"));
    else if (spec.kind == "toysft")
      spec.toy = config::toy_from_json(j.at("config"));
    else
      throw FormatError(path.string() + ": unknown env '" + spec.kind + "'");
  } catch (const ConfigError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return spec;
}

inline std::vector<double> parse_targets(const std::string& list) {
  std::vector<double> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      if (!(v >= 0.0 && v <= 100.0)) throw ConfigError("target " + item + " outside [0,100]");
      out.push_back(v);
    } catch (const std::logic_error&) {
      throw ConfigError("cannot parse target '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError("--targets is empty");
  return out;
}

template <typename Fn>
void write_stream(const fs::path& path, Fn&& fn) {
  std::ostringstream os;
  fn(os);
  detail::write_file(path, os.str());
}

// --- commands ---------------------------------------------------------------

inline int cmd_collect(const Options& opt) {
  Stage st(opt, "collect");
  EnvSpec spec;
  spec.kind = opt.env_kind.empty() ? "toysft" : opt.env_kind;
  TrajectoryLibrary lib;
  if (spec.kind == "analytic") {
    spec.analytic = config::analytic_from_json(st.section("env"));
    spec.analytic.seed = st.stage_seed("env");
    if (opt.no_noise) spec.analytic.noise_sd = 0.0;
    const auto tcfg = config::trajectory_from_json(st.section("trajectory"));
    st.snapshot("trajectory", config::to_json(tcfg));
    Rng rng(st.stage_seed("collect"));
    lib = analytic_trajectory(spec.analytic, tcfg, rng);
  } else if (spec.kind == "toysft") {
    spec.toy = config::toy_from_json(st.section("env"));
    spec.toy.seed = st.stage_seed("collect");
    auto result = toy_sft_collect(spec.toy);
    for (auto s : result.skipped_steps)
      log_line("warning: step " + std::to_string(s) + " answered all-neutral; skipped");
    lib = std::move(result.library);
  } else {
    throw ConfigError("--env must be 'analytic' or 'toysft'");
  }
  st.snapshot("env", spec.to_json());

  save_library(lib, st.output("library.json"));
  write_stream(st.output("scores.csv"), [&](std::ostream& os) {
    os << "step,P\n";
    for (const auto& c : lib.checkpoints)
      os << c.step << ',' << detail::format_double(c.trait_percentage) << '\n';
  });
  detail::write_file(st.output("env.json"), spec.to_json().dump(2) + "\n");
  st.write_manifest("manifest_collect.json");
  log_line("collected " + std::to_string(lib.checkpoints.size()) + " checkpoints");
  return kOk;
}

inline int cmd_select(const Options& opt) {
  Stage st(opt, "select");
  const auto lib = load_library(st.input("library.json"));
  const auto cfg = config::selection_from_json(st.section("selection"));
  st.snapshot("selection", config::to_json(cfg));
  const auto sel = select_basis(lib, cfg);
  save_basis(sel.basis, st.output("basis.json"));
  write_stream(st.output("selection_report.csv"),
               [&](std::ostream& os) { write_selection_report(os, lib, sel); });
  // Downstream stages read the environment and library from the same directory.
  for (const char* file : {"env.json", "library.json"}) {
    const fs::path src = st.input(file);
    const fs::path dst = fs::path(opt.out_dir) / file;
    if (!fs::exists(dst) || !fs::equivalent(src, dst))
      fs::copy_file(src, st.output(file), fs::copy_options::overwrite_existing);
  }
  st.write_manifest("manifest_select.json");
  log_line("selected " + std::to_string(sel.basis.size()) + " basis adapters");
  return kOk;
}

inline int cmd_train(const Options& opt) {
  Stage st(opt, "train");
  const auto spec = env_from_file(st.input("env.json"));
  const auto basis = load_basis(st.input("basis.json"));
  auto tcfg = config::train_from_json(st.section("train"));
  tcfg.seed = st.stage_seed("train");
  const auto rcfg = config::reward_from_json(st.section("reward"));
  st.snapshot("env", spec.to_json());
  st.snapshot("train", config::to_json(tcfg));
  st.snapshot("reward", config::to_json(rcfg));
  st.snapshot("no_noise", opt.no_noise);

  const auto env = spec.make(!opt.no_noise);
  Rng init_rng(derive_seed(tcfg.seed, "policy-init"));
  auto policy = PolicyNetwork::initialized(static_cast<int>(basis.size()), init_rng);

  TrainHooks hooks;
  hooks.on_epoch_end = [&](int epoch, const PolicyNetwork& p) {
    const bool last = epoch + 1 == tcfg.epochs;
    if (tcfg.checkpoint_every == 0 || (!last && (epoch + 1) % tcfg.checkpoint_every != 0)) return;
    char name[64];
    std::snprintf(name, sizeof name, "policies/policy_epoch_%04d.json", epoch);
    save_policy(p, tcfg.seed, st.output(name));
  };
  hooks.on_abort = [&](const PolicyNetwork& p) {
    save_policy(p, tcfg.seed, st.output("policy_last_good.json"));
  };
  const auto result = train_policy(*env, basis, std::move(policy), tcfg, rcfg, hooks);
  save_policy(result.policy, tcfg.seed, st.output("policy.json"));
  write_stream(st.output("training_log.csv"),
               [&](std::ostream& os) { write_training_log(os, result.log); });
  st.write_manifest("manifest_train.json");
  log_line("trained " + std::to_string(tcfg.epochs) + " epochs, " +
           std::to_string(result.log.size()) + " rollouts");
  return kOk;
}

inline int cmd_eval(const Options& opt) {
  Stage st(opt, "eval");
  const auto spec = env_from_file(st.input("env.json"));
  const auto basis = load_basis(st.input("basis.json"));
  const auto ecfg = config::eval_from_json(st.section("eval"));
  st.snapshot("env", spec.to_json());
  st.snapshot("eval", config::to_json(ecfg));
  st.snapshot("method", opt.method);
  const auto env = spec.make(ecfg.noise);

  const auto [lo, hi] = env->controllable_range(basis);
  const auto targets = opt.targets.empty() ? default_eval_targets(lo, hi)
                                           : parse_targets(opt.targets);
  if (targets.empty()) throw ConfigError("no default targets inside the controllable range");
  st.snapshot("targets", targets);

  Controller controller;
  std::optional<LoadedPolicy> policy;
  if (opt.method == "fusian") {
    policy = load_policy(st.input("policy.json"));
    if (static_cast<std::size_t>(policy->network.output_dim()) != basis.size())
      throw FormatError("policy output dimension does not match basis size");
    controller = policy_mean_controller(policy->network, basis);
  } else if (opt.method == "nearest") {
    controller = nearest_controller(basis);
  } else if (opt.method == "interp") {
    controller = interp_controller(basis);
  } else if (opt.method == "scaled") {
    const auto lib = load_library(st.input("library.json"));
    if (lib.checkpoints.empty()) throw FormatError("library has no checkpoints");
    const auto& final_cp = lib.checkpoints.back();
    const double p0 = env->evaluate(Adapter::zeros(final_cp.adapter.shape_meta()), nullptr);
    controller = scaled_controller(final_cp.adapter, p0, final_cp.trait_percentage,
                                   ecfg.scaled_max_coeff);
  } else {
    throw ConfigError("--method must be one of fusian, nearest, interp, scaled");
  }

  Rng noise(st.stage_seed("eval-noise"));
  const auto report = eval_grid(controller, *env, targets, opt.method,
                                ecfg.noise ? &noise : nullptr);
  const std::string hash = [&] {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(st.snapshot().dump())));
    return std::string(buf);
  }();
  write_stream(st.output("report_" + opt.method + ".csv"),
               [&](std::ostream& os) { write_report_csv(os, report); });
  detail::write_file(st.output("report_" + opt.method + ".json"),
                     report_summary_json(report, hash));
  st.write_manifest("manifest_eval_" + opt.method + ".json");
  log_line(opt.method + ": MAE " + detail::format_double(report.mae));
  return kOk;
}

inline int cmd_ablate(const Options& opt) {
  Stage st(opt, "ablate");
  const auto spec = env_from_file(st.input("env.json"));
  const auto lib = load_library(st.input("library.json"));
  AblationConfig cfg;
  cfg.selection = config::selection_from_json(st.section("selection"));
  cfg.train = config::train_from_json(st.section("train"));
  cfg.train.seed = st.stage_seed("train");
  cfg.reward = config::reward_from_json(st.section("reward"));
  st.snapshot("env", spec.to_json());
  st.snapshot("selection", config::to_json(cfg.selection));
  st.snapshot("train", config::to_json(cfg.train));
  st.snapshot("reward", config::to_json(cfg.reward));
  st.snapshot("no_noise", opt.no_noise);
  // Training sees the configured noise; scoring is noise-free.
  const auto train_env = spec.make(!opt.no_noise);
  const auto rows = run_ablations(*train_env, lib, cfg);
  write_stream(st.output("ablation.csv"), [&](std::ostream& os) { write_ablation_csv(os, rows); });
  st.write_manifest("manifest_ablate.json");
  for (const auto& r : rows) log_line(r.variant + ": MAE " + detail::format_double(r.report.mae));
  return kOk;
}

inline int cmd_oracle(const Options& opt) {
  Stage st(opt, "oracle");
  AnalyticEnvConfig acfg;
  const fs::path env_path = (opt.in_dir.empty() ? fs::path(opt.out_dir) : fs::path(opt.in_dir)) /
                            "env.json";
  if (st.has_section("env") || !fs::exists(env_path)) {
    acfg = config::analytic_from_json(st.section("env"));
  } else {
    const auto spec = env_from_file(st.input("env.json"));
    if (spec.kind != "analytic") throw ConfigError("the oracle supports the analytic env only");
    acfg = spec.analytic;
  }
  const auto ocfg = config::oracle_from_json(st.section("oracle"));
  st.snapshot("env", config::to_json(acfg));
  st.snapshot("oracle", config::to_json(ocfg));
  const auto basis = analytic_basis(acfg);
  const auto targets = opt.targets.empty()
                           ? default_eval_targets(basis.min_intensity(), basis.max_intensity())
                           : parse_targets(opt.targets);
  st.snapshot("targets", targets);

  double total = 0.0;
  write_stream(st.output("oracle.csv"), [&](std::ostream& os) {
    os << "target,achieved,residual";
    for (std::size_t i = 0; i < acfg.basis_intensities.size(); ++i) os << ",w" << i;
    os << '\n';
    for (double t : targets) {
      const auto r = oracle_best_weights(acfg, t, ocfg.grid_step);
      total += r.residual;
      os << detail::format_double(t) << ',' << detail::format_double(r.achieved) << ','
         << detail::format_double(r.residual);
      for (double w : r.weights) os << ',' << detail::format_double(w);
      os << '\n';
    }
  });
  const double mean = total / static_cast<double>(targets.size());
  detail::write_file(st.output("oracle_summary.json"),
                     "{\n  \"mean_residual\": " + detail::format_double(mean) + "\n}\n");
  st.write_manifest("manifest_oracle.json");
  log_line("oracle mean residual " + detail::format_double(mean));
  return kOk;
}

/// Entry point; returns the process exit code.
inline int run(int argc, const char* const* argv) {
  CLI::App app{"Trajectory-basis adapter fusion: collect, select, train, evaluate"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "JSON config file");
    sub->add_option("--seed", opt.seed, "root seed (drawn and recorded if omitted)");
    sub->add_option("--out", opt.out_dir, "output directory")->capture_default_str();
    sub->add_option("--in", opt.in_dir, "input directory (defaults to --out)");
  };
  auto* collect = app.add_subcommand("collect", "record a fine-tuning trajectory");
  add_common(collect);
  collect->add_option("--env", opt.env_kind, "environment")
      ->check(CLI::IsMember({"analytic", "toysft"}));
  collect->add_flag("--no-noise", opt.no_noise, "disable measurement noise");

  auto* select = app.add_subcommand("select", "filter the trajectory and pick the basis");
  add_common(select);

  auto* train = app.add_subcommand("train", "train the fusion policy");
  add_common(train);
  train->add_flag("--no-noise", opt.no_noise, "disable environment noise");

  auto* eval = app.add_subcommand("eval", "score a controller on the target grid");
  add_common(eval);
  eval->add_option("--method", opt.method, "fusian|nearest|interp|scaled")
      ->check(CLI::IsMember({"fusian", "nearest", "interp", "scaled"}));
  eval->add_option("--targets", opt.targets, "comma-separated target intensities");

  auto* ablate = app.add_subcommand("ablate", "run the ablation table");
  add_common(ablate);
  ablate->add_flag("--no-noise", opt.no_noise, "disable environment noise during training");

  auto* oracle = app.add_subcommand("oracle", "brute-force best weights on the analytic env");
  add_common(oracle);
  oracle->add_option("--targets", opt.targets, "comma-separated target intensities");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*collect) return cmd_collect(opt);
    if (*select) return cmd_select(opt);
    if (*train) return cmd_train(opt);
    if (*eval) return cmd_eval(opt);
    if (*ablate) return cmd_ablate(opt);
    if (*oracle) return cmd_oracle(opt);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const OracleUnsupported& e) {
    std::cerr << "error: " << e.what() << " (raise oracle.grid_step)\n";
    return kConfigError;
  } catch (const MissingInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kMissingInput;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFormatError;
  } catch (const VersionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFormatError;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace trajfuse::cli

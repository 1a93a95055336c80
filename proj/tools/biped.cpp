// Command-line front end: expert rollouts, cloning, value pretraining, PPO
// training, evaluation, transfer reports, gain retuning and plot data.
//
// Exit status: 0 success, 1 usage error, 2 runtime error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "biped/config.hpp"
#include "biped/experiment.hpp"
#include "biped/io.hpp"
#include "biped/transfer.hpp"

namespace fs = std::filesystem;
using namespace biped;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string policy;
  std::string value;
  std::optional<int> iterations;
  std::optional<int> episodes;
  std::string kind;
  std::string terrain;
  std::string env = "nominal";
  std::string gain;
  double gain_value = 0.0;
  std::string input;
  std::vector<std::string> columns;
  int stride = 1;
  bool expert = false;
};

struct Resolved {
  ExperimentConfig cfg;
  std::uint64_t seed;
  fs::path out;
};

Resolved resolve(const Options& o) {
  Resolved r;
  if (!o.config_path.empty()) r.cfg = load_config(o.config_path);
  if (o.seed) r.cfg.run.seed = *o.seed;
  if (o.iterations) r.cfg.run.iterations = *o.iterations;
  if (o.episodes) r.cfg.run.episodes = *o.episodes;
  if (!o.out.empty()) r.cfg.run.out_dir = o.out;
  if (!o.kind.empty()) r.cfg.policy.kind = policy_kind_from_string(o.kind);
  if (o.terrain == "flat") r.cfg.run.rough = false;
  if (o.terrain == "rough") r.cfg.run.rough = true;
  validate(r.cfg);
  r.seed = r.cfg.run.seed;
  r.out = r.cfg.run.out_dir;
  std::printf("seed: %llu\n", static_cast<unsigned long long>(r.seed));
  return r;
}

EnvSpec chosen_env(const Resolved& r, const std::string& which) {
  EnvSpec nominal = make_env(r.cfg);
  if (which == "surrogate") return make_surrogate(nominal, r.cfg.surrogate);
  return nominal;
}

void print_eval(const char* label, const EvalResult& e) {
  std::printf("%s: %d/%d episodes without a fall (rate %.3f), mean reward %.2f, mean steps %.1f\n", label,
              e.n_success, e.n_episodes, e.success_rate, e.mean_reward, e.mean_steps);
}

int cmd_rollout_expert(const Options& o) {
  Resolved r = resolve(o);
  EnvSpec env = make_env(r.cfg);
  EpisodeSeeds seeds = episode_seeds(r.seed, 0);
  Terrain terrain = episode_terrain(env, seeds.terrain);
  RobotState start = initial_state(env.params, r.cfg.gains, terrain, env.init);
  fs::path path = r.out / "trajectory.csv";
  auto out = detail::open_out(path);
  TrajectoryWriter writer(out);
  EpisodeSummary sum = run_episode(env, terrain, start, r.cfg.gains, seeds.noise, expert_controller(r.cfg.gains),
                                   [&](const StepView& v) { writer(v); });
  detail::check_written(out, path);
  std::printf("expert on %s terrain: %d steps, %s, distance %.3f m, total reward %.2f\n",
              env.rough ? "rough" : "flat", sum.steps, sum.fell ? "fell" : "no fall", sum.distance, sum.total_reward);
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

int cmd_clone(const Options& o) {
  Resolved r = resolve(o);
  ExpertData data = expert_dataset(r.cfg, r.seed);
  GaussianMlpPolicy p = clone_expert(r.cfg, r.cfg.policy.kind, r.seed, data);
  std::vector<BcSample> samples = bc_dataset(data, p);
  std::printf("cloned %s on %zu expert transitions (%d episodes), final loss %.6g\n", to_string(p.kind),
              samples.size(), data.episodes, bc_loss(p, samples));
  fs::path path = r.out / "policy.ckpt";
  save_policy(path, p);
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

int cmd_pretrain_value(const Options& o) {
  Resolved r = resolve(o);
  ExpertData data = expert_dataset(r.cfg, r.seed);
  ValueNet before = fresh_value_net(r.cfg, r.seed);
  ValueNet v = pretrain_value(r.cfg, r.seed, data);
  std::printf("TD loss %.6g -> %.6g on %zu transitions\n", td_loss(before, data.td, r.cfg.ppo.gamma),
              td_loss(v, data.td, r.cfg.ppo.gamma), data.td.size());
  fs::path path = r.out / "value.ckpt";
  save_value_net(path, v);
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

int cmd_train(const Options& o) {
  Resolved r = resolve(o);
  GaussianMlpPolicy policy =
      o.policy.empty() ? fresh_policy(r.cfg, r.cfg.policy.kind, r.seed) : load_policy(o.policy);
  ValueNet value = o.value.empty() ? fresh_value_net(r.cfg, r.seed) : load_value_net(o.value);
  TrainResult res = train_loop(make_env(r.cfg), std::move(policy), std::move(value), r.cfg.ppo,
                               r.cfg.run.iterations, r.seed, [](const CurveRow& row, const PpoStats& s) {
                                 std::printf("iter %d: mean reward %.2f, falls %.2f, ratio %.4f, clip %.3f\n",
                                             row.iteration, row.mean_reward, row.fall_fraction, s.mean_ratio,
                                             s.clip_fraction);
                                 std::fflush(stdout);
                               });
  write_reward_curve(r.out / "reward_curve.csv", res.curve);
  save_policy(r.out / "policy.ckpt", res.policy);
  save_value_net(r.out / "value.ckpt", res.value);
  std::printf("wrote %s\n", (r.out / "reward_curve.csv").string().c_str());
  return 0;
}

int cmd_eval(const Options& o) {
  Resolved r = resolve(o);
  EnvSpec env = chosen_env(r, o.env);
  if (o.expert) {
    print_eval("expert", evaluate_expert(env, r.cfg.gains, r.cfg.run.episodes, r.seed));
    return 0;
  }
  if (o.policy.empty()) throw InvalidArgument("eval needs --policy or --expert");
  GaussianMlpPolicy p = load_policy(o.policy);
  print_eval(to_string(p.kind), evaluate_policy(env, p, r.cfg.run.episodes, r.seed));
  return 0;
}

int cmd_transfer(const Options& o) {
  Resolved r = resolve(o);
  if (o.input.empty()) throw InvalidArgument("transfer needs --dir with checkpoints");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(o.input))
    if (entry.is_regular_file() && entry.path().extension() == ".ckpt") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<NamedPolicy> policies;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::string first;
    in >> first;
    if (first == "biped-policy") policies.push_back({f.stem().string(), load_policy(f)});
  }
  if (policies.empty()) throw InvalidArgument("no policy checkpoints in '" + o.input + "'");
  EnvSpec nominal = make_env(r.cfg);
  TransferReport rep = transfer_experiment(policies, nominal, make_surrogate(nominal, r.cfg.surrogate),
                                           r.cfg.run.episodes, r.seed);
  for (const auto& a : rep.aggregates)
    std::printf("%s on %s: %d/%d (rate %.3f)\n", to_string(a.kind), a.env.c_str(), a.n_success, a.n_episodes,
                a.success_rate());
  fs::path path = r.out / "transfer_report.csv";
  write_transfer_report(path, rep);
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

int cmd_retune(const Options& o) {
  Resolved r = resolve(o);
  if (o.policy.empty()) throw InvalidArgument("retune needs --policy");
  GaussianMlpPolicy p = retune_gain(load_policy(o.policy), o.gain, o.gain_value, r.cfg.sim);
  fs::path path = r.out / "policy.ckpt";
  save_policy(path, p);
  std::printf("set %s = %s\nwrote %s\n", o.gain.c_str(), format_double(o.gain_value).c_str(), path.string().c_str());
  return 0;
}

// Selected columns of any CSV log, every `stride`-th row, with stance_leg
// mapped to 0/1/2 so every column is numeric.
int cmd_plot_data(const Options& o) {
  Resolved r = resolve(o);
  CsvTable t = read_csv(o.input);
  std::vector<std::size_t> idx;
  if (o.columns.empty()) {
    for (std::size_t i = 0; i < t.header.size(); ++i)
      if (t.header[i] != "policy_id") idx.push_back(i);
  } else {
    for (const auto& c : o.columns) {
      auto it = std::find(t.header.begin(), t.header.end(), c);
      if (it == t.header.end()) throw InvalidArgument("no column '" + c + "' in " + o.input);
      idx.push_back(static_cast<std::size_t>(it - t.header.begin()));
    }
  }
  fs::path path = r.out / ("plot_" + fs::path(o.input).filename().string());
  auto out = detail::open_out(path);
  std::vector<std::string> head;
  for (auto i : idx) head.push_back(t.header[i]);
  detail::write_row(out, head);
  for (std::size_t k = 0; k < t.rows.size(); k += static_cast<std::size_t>(o.stride)) {
    std::vector<std::string> row;
    for (auto i : idx) {
      const std::string& v = t.rows[k][i];
      if (v == "left") row.push_back("0");
      else if (v == "right") row.push_back("1");
      else if (v == "flight") row.push_back("2");
      else row.push_back(v);
    }
    detail::write_row(out, row);
  }
  detail::check_written(out, path);
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Planar biped: expert controller, learned policies and transfer experiments"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "experiment configuration file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out, "output directory");
  };

  auto* rollout = app.add_subcommand("rollout-expert", "run the expert controller and write trajectory.csv");
  common(rollout);
  rollout->add_option("--terrain", o.terrain, "flat or rough")->check(CLI::IsMember({"flat", "rough"}));

  auto* clone = app.add_subcommand("clone", "behavior-clone the expert into a policy checkpoint");
  common(clone);
  clone->add_option("--kind", o.kind, "pure or heuristic");

  auto* pretrain = app.add_subcommand("pretrain-value", "fit the value network to expert data by TD");
  common(pretrain);

  auto* train = app.add_subcommand("train", "PPO training");
  common(train);
  train->add_option("--policy", o.policy, "initial policy checkpoint");
  train->add_option("--value", o.value, "initial value checkpoint");
  train->add_option("--iterations", o.iterations, "training iterations")->check(CLI::NonNegativeNumber);
  train->add_option("--kind", o.kind, "kind of a fresh policy (pure or heuristic)");
  train->add_option("--terrain", o.terrain, "flat or rough")->check(CLI::IsMember({"flat", "rough"}));

  auto* eval = app.add_subcommand("eval", "evaluate a policy at its mean action");
  common(eval);
  eval->add_option("--policy", o.policy, "policy checkpoint");
  eval->add_flag("--expert", o.expert, "evaluate the expert controller instead");
  eval->add_option("--episodes", o.episodes, "number of episodes")->check(CLI::PositiveNumber);
  eval->add_option("--env", o.env, "nominal or surrogate")->check(CLI::IsMember({"nominal", "surrogate"}));
  eval->add_option("--terrain", o.terrain, "flat or rough")->check(CLI::IsMember({"flat", "rough"}));

  auto* transfer = app.add_subcommand("transfer", "evaluate every checkpoint in a directory on both environments");
  common(transfer);
  transfer->add_option("--dir", o.input, "checkpoint directory")->required()->check(CLI::ExistingDirectory);
  transfer->add_option("--episodes", o.episodes, "episodes per policy and environment")->check(CLI::PositiveNumber);
  transfer->add_option("--terrain", o.terrain, "flat or rough")->check(CLI::IsMember({"flat", "rough"}));

  auto* retune = app.add_subcommand("retune", "change one embedded gain of a HeuristicNN checkpoint");
  common(retune);
  retune->add_option("--policy", o.policy, "policy checkpoint")->required();
  retune->add_option("--gain", o.gain, "gain name, e.g. k")->required();
  retune->add_option("--value", o.gain_value, "new gain value")->required();

  auto* plot = app.add_subcommand("plot-data", "re-emit a CSV log as numeric plot data");
  common(plot);
  plot->add_option("--input", o.input, "CSV log")->required()->check(CLI::ExistingFile);
  plot->add_option("--columns", o.columns, "columns to keep")->delimiter(',');
  plot->add_option("--stride", o.stride, "keep every n-th row")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (rollout->parsed()) return cmd_rollout_expert(o);
    if (clone->parsed()) return cmd_clone(o);
    if (pretrain->parsed()) return cmd_pretrain_value(o);
    if (train->parsed()) return cmd_train(o);
    if (eval->parsed()) return cmd_eval(o);
    if (transfer->parsed()) return cmd_transfer(o);
    if (retune->parsed()) return cmd_retune(o);
    if (plot->parsed()) return cmd_plot_data(o);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

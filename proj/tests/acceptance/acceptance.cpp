// End-to-end acceptance runs. Prints one PASS/FAIL line per criterion and a
// few indented detail lines under it; artifacts go to --out.
//
// Exit status is 0 whenever every run completed, so the suite can record an
// honest FAIL; --strict turns any FAIL into exit status 1.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "biped/config.hpp"
#include "biped/experiment.hpp"
#include "biped/io.hpp"
#include "biped/transfer.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace biped;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  explicit Outcome(std::string i) : id(std::move(i)) {}
  std::string id;
  bool pass = false;
  std::string summary;
  std::vector<std::string> details;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void report(const Outcome& o) {
  std::printf("%s %s  %s\n", o.id.c_str(), o.pass ? "PASS" : "FAIL", o.summary.c_str());
  for (const auto& d : o.details) std::printf("      %s\n", d.c_str());
  std::fflush(stdout);
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// ---------------------------------------------------------------------------
// A1-A3: expert and cloning

Outcome a1(const ExperimentConfig& c) {
  auto t0 = Clock::now();
  EnvSpec env = demonstration_env(c);
  EvalResult r = evaluate_expert(env, c.gains, 1, c.run.seed);
  double dt = seconds_since(t0);
  Outcome o("A1");
  o.pass = r.n_success == 1 && dt <= 5.0;
  o.summary = fmt("expert on flat nominal ground: %d steps, %s, %.2f m in %.2f s wall", r.episodes[0].steps,
                  r.episodes[0].fell ? "fell" : "no fall", r.episodes[0].distance, dt);
  return o;
}

Outcome a2(const ExperimentConfig& c) {
  auto t0 = Clock::now();
  EnvSpec env = make_env(c);
  env.rough = true;
  EvalResult r = evaluate_expert(env, c.gains, 20, c.run.seed);
  double dt = seconds_since(t0);
  Outcome o("A2");
  o.pass = r.success_rate < 0.5 && dt <= 120.0;
  o.summary = fmt("expert on 20 rough terrains: %d/20 without a fall (rate %.2f < 0.5), %.1f s", r.n_success,
                  r.success_rate, dt);
  std::string hist = "falls by second:";
  for (int h : r.fall_histogram) hist += fmt(" %d", h);
  o.details.push_back(hist);
  return o;
}

Outcome a3(const ExperimentConfig& c, const fs::path& out) {
  auto t0 = Clock::now();
  ExpertData data = expert_dataset(c, c.run.seed);
  GaussianMlpPolicy p = clone_expert(c, PolicyKind::PureNN, c.run.seed, data);
  save_policy(out / "cloned_pure.ckpt", p);
  EvalResult flat = evaluate_policy(demonstration_env(c), p, c.run.episodes, c.run.seed);
  EnvSpec rough_env = make_env(c);
  rough_env.rough = true;
  EvalResult rough = evaluate_policy(rough_env, p, c.run.episodes, c.run.seed);
  double dt = seconds_since(t0);
  Outcome o("A3");
  bool walks = !flat.episodes[0].fell;
  o.pass = walks && rough.success_rate < flat.success_rate && dt <= 600.0;
  o.summary = fmt("cloned PureNN: flat %d/%d, rough %d/%d, first flat episode %s, %.0f s", flat.n_success,
                  flat.n_episodes, rough.n_success, rough.n_episodes, walks ? "walks 10 s" : "falls", dt);
  o.details.push_back(fmt("%zu expert transitions from %d flat episodes", data.obs.size(), data.episodes));
  return o;
}

// ---------------------------------------------------------------------------
// Trained population shared by A4-A8

struct Trained {
  PolicyKind kind;
  std::uint64_t seed;
  GaussianMlpPolicy policy;
  std::vector<CurveRow> curve;
  double seconds;
};

const char* short_name(PolicyKind k) { return k == PolicyKind::PureNN ? "pure" : "heuristic"; }

Trained train_one(const ExperimentConfig& c, PolicyKind kind, std::uint64_t seed, const fs::path& out,
                  const std::string& tag) {
  auto t0 = Clock::now();
  TrainedPair tp = train_from_expert(c, kind, seed, c.run.iterations);
  Trained t{kind, seed, std::move(tp.policy), std::move(tp.curve), seconds_since(t0)};
  write_reward_curve(out / ("curve_" + tag + ".csv"), t.curve);
  save_policy(out / "policies" / (tag + ".ckpt"), t.policy);
  std::printf("  trained %-22s baseline %8.1f  final %8.1f  (%.0f s)\n", tag.c_str(), t.curve.front().mean_reward,
              t.curve.back().mean_reward, t.seconds);
  std::fflush(stdout);
  return t;
}

// Mean iteration reward over the last `window` iterations.
double final_reward(const std::vector<CurveRow>& curve, int window) {
  int n = static_cast<int>(curve.size());
  int w = std::min(window, n);
  double s = 0.0;
  for (int i = n - w; i < n; ++i) s += curve[static_cast<std::size_t>(i)].mean_reward;
  return s / w;
}

constexpr int kFinalWindow = 5;
constexpr int kSmoothWindow = 3;

Outcome a4(const std::map<PolicyKind, std::vector<Trained>>& pop, int iterations, double budget_s) {
  Outcome o("A4");
  o.pass = true;
  std::string parts;
  for (const auto& [kind, runs] : pop) {
    std::vector<double> base, fin;
    double secs = 0.0;
    for (const auto& t : runs) {
      base.push_back(t.curve.front().mean_reward);
      fin.push_back(final_reward(t.curve, kFinalWindow));
      secs += t.seconds;
    }
    double b = mean(base), f = mean(fin);
    bool ok = b > 0.0 ? f >= 1.2 * b : f >= b + 0.2 * std::abs(b);
    ok = ok && secs <= budget_s;
    o.pass = o.pass && ok;
    parts += fmt("%s %.0f -> %.0f (x%.2f, %.0f s); ", to_string(kind), b, f, b != 0.0 ? f / b : 0.0, secs);
    std::string per = fmt("%s per seed (baseline -> mean of last %d):", to_string(kind), kFinalWindow);
    for (std::size_t i = 0; i < runs.size(); ++i) per += fmt(" %.0f->%.0f", base[i], fin[i]);
    o.details.push_back(per);
  }
  o.summary = fmt("rough-terrain reward, %d iterations x 8192 samples, need x1.2: ", iterations) + parts;
  return o;
}

// Iteration at which the smoothed curve first reaches 90% of the final reward.
int time_to_ninety(const std::vector<CurveRow>& curve) {
  double target = 0.9 * final_reward(curve, kFinalWindow);
  int n = static_cast<int>(curve.size());
  for (int i = 0; i < n; ++i) {
    int lo = std::max(0, i - kSmoothWindow + 1);
    double s = 0.0;
    for (int k = lo; k <= i; ++k) s += curve[static_cast<std::size_t>(k)].mean_reward;
    if (s / (i - lo + 1) >= target) return i;
  }
  return n;
}

Outcome a5(const std::map<PolicyKind, std::vector<Trained>>& pop, int iterations) {
  const int early = std::max(1, static_cast<int>(std::ceil(0.2 * iterations)));
  std::map<PolicyKind, int> fast;
  Outcome o("A5");
  for (const auto& [kind, runs] : pop) {
    std::string per = fmt("%s iterations to 90%% of final:", to_string(kind));
    for (const auto& t : runs) {
      int it = time_to_ninety(t.curve);
      if (it < early) ++fast[kind];
      per += fmt(" %d", it);
    }
    o.details.push_back(per);
  }
  int h = fast[PolicyKind::HeuristicNN], p = fast[PolicyKind::PureNN];
  o.pass = h >= 3 && p <= 2;
  o.summary = fmt("seeds at 90%% of final within the first %d iterations: HeuristicNN %d/5 (need >= 3), PureNN %d/5 "
                  "(need <= 2)",
                  early, h, p);
  return o;
}

Outcome a6(const ExperimentConfig& c, const std::map<PolicyKind, std::vector<Trained>>& pop, const fs::path& out,
           TransferReport& rep) {
  auto t0 = Clock::now();
  std::vector<NamedPolicy> named;
  for (const auto& [kind, runs] : pop)
    for (const auto& t : runs) named.push_back({fmt("%s_%llu", short_name(kind), static_cast<unsigned long long>(t.seed)), t.policy});
  EnvSpec nominal = make_env(c);
  rep = transfer_experiment(named, nominal, make_surrogate(nominal, c.surrogate), c.run.episodes, c.run.seed);
  write_transfer_report(out / "transfer_report.csv", rep);
  double h = rep.rate(PolicyKind::HeuristicNN, "surrogate"), p = rep.rate(PolicyKind::PureNN, "surrogate");
  Outcome o("A6");
  o.pass = h > p;
  o.summary = fmt("surrogate success: HeuristicNN %.2f vs PureNN %.2f (nominal %.2f vs %.2f), %.0f s", h, p,
                  rep.rate(PolicyKind::HeuristicNN, "nominal"), rep.rate(PolicyKind::PureNN, "nominal"),
                  seconds_since(t0));
  for (const auto& r : rep.rows)
    if (r.env == "surrogate") o.details.push_back(fmt("%s: %d/%d", r.policy_id.c_str(), r.n_success, r.n_episodes));
  return o;
}

// One evaluation episode (same seeds as evaluate_policy's episode i) with the
// mean forward speed over the last second.
struct EpisodeTrace {
  EpisodeSummary sum;
  double late_speed = 0.0;
};

EpisodeTrace trace_episode(const EnvSpec& env, const GaussianMlpPolicy& p, std::uint64_t seed, int i) {
  EpisodeSeeds seeds = episode_seeds(seed, static_cast<std::uint64_t>(i));
  Terrain terrain = episode_terrain(env, seeds.terrain);
  RobotState start = initial_state(env.params, p.gains, terrain, env.init);
  std::vector<double> speeds;
  EpisodeTrace tr;
  tr.sum = run_episode(env, terrain, start, p.gains, seeds.noise, mean_controller(p),
                       [&](const StepView& v) { speeds.push_back(v.after.dx); });
  int window = static_cast<int>(std::lround(1.0 / env.params.dt));
  std::size_t from = speeds.size() > static_cast<std::size_t>(window) ? speeds.size() - window : 0;
  tr.late_speed = std::accumulate(speeds.begin() + static_cast<long>(from), speeds.end(), 0.0) /
                  std::max<double>(1.0, static_cast<double>(speeds.size() - from));
  return tr;
}

// A failure counts as overspeeding when the robot averaged more than 1.5x
// the target speed over its final second.
Outcome a7(const ExperimentConfig& c, const std::vector<Trained>& heuristic) {
  auto t0 = Clock::now();
  EnvSpec surrogate = make_surrogate(make_env(c), c.surrogate);
  const double limit = 1.5 * c.gains.v_tgt;
  const std::vector<double> ks{0.3, 0.4, 0.5, 0.7};
  int overspeed = 0, fixed = 0;
  Outcome o("A7");
  for (const auto& t : heuristic)
    for (int i = 0; i < c.run.episodes; ++i) {
      EpisodeTrace base = trace_episode(surrogate, t.policy, c.run.seed, i);
      if (!base.sum.fell || base.late_speed <= limit) continue;
      ++overspeed;
      std::string line = fmt("heuristic_%llu episode %d: fell at %.2f s at %.2f m/s;",
                             static_cast<unsigned long long>(t.seed), i, base.sum.steps * surrogate.params.dt,
                             base.late_speed);
      bool ok = false;
      for (double k : ks) {
        if (k <= t.policy.gains.k) continue;
        GaussianMlpPolicy q = retune_gain(t.policy, "k", k, surrogate.params);
        EpisodeTrace r = trace_episode(surrogate, q, c.run.seed, i);
        line += fmt(" k=%.1f %s", k, r.sum.fell ? "falls" : "walks");
        if (!r.sum.fell) {
          ok = true;
          break;
        }
      }
      fixed += ok ? 1 : 0;
      o.details.push_back(line);
    }
  o.pass = fixed >= 1;
  o.summary = fmt("surrogate failures by overspeeding (> %.2f m/s over the last second): %d, converted by a larger k: "
                  "%d, %.0f s",
                  limit, overspeed, fixed, seconds_since(t0));
  return o;
}

Outcome a8(const ExperimentConfig& c, const std::vector<Trained>& plain, const fs::path& out) {
  auto t0 = Clock::now();
  ExperimentConfig pc = c;
  pc.reward.torque_penalty_C4 = kDefaultTorquePenaltyC4;
  EnvSpec nominal = make_env(c);
  EnvSpec surrogate = make_surrogate(nominal, c.surrogate);
  double axial0 = 0.0, axial1 = 0.0;
  int succ0 = 0, succ1 = 0, n = 0;
  Outcome o("A8");
  for (const auto& t : plain) {
    Trained pen = train_one(pc, PolicyKind::HeuristicNN, t.seed, out, fmt("heuristic_c4_%llu", static_cast<unsigned long long>(t.seed)));
    // Axial force is compared on the nominal rough terrain the policies were trained on.
    EvalResult e0 = evaluate_policy(nominal, t.policy, c.run.episodes, c.run.seed);
    EvalResult e1 = evaluate_policy(nominal, pen.policy, c.run.episodes, c.run.seed);
    EvalResult s0 = evaluate_policy(surrogate, t.policy, c.run.episodes, c.run.seed);
    EvalResult s1 = evaluate_policy(surrogate, pen.policy, c.run.episodes, c.run.seed);
    axial0 += e0.mean_abs_axial_steady;
    axial1 += e1.mean_abs_axial_steady;
    succ0 += s0.n_success;
    succ1 += s1.n_success;
    n += s0.n_episodes;
    o.details.push_back(fmt("seed %llu: |axial| %.1f -> %.1f N, surrogate %d -> %d of %d",
                            static_cast<unsigned long long>(t.seed), e0.mean_abs_axial_steady,
                            e1.mean_abs_axial_steady, s0.n_success, s1.n_success, s0.n_episodes));
  }
  axial0 /= static_cast<double>(plain.size());
  axial1 /= static_cast<double>(plain.size());
  o.pass = axial1 < axial0 && succ1 >= succ0;
  o.summary = fmt("HeuristicNN with C4=%g: steady |axial| %.1f N vs %.1f N with C4=0, surrogate success %d/%d vs "
                  "%d/%d, %.0f s",
                  kDefaultTorquePenaltyC4, axial1, axial0, succ1, n, succ0, n, seconds_since(t0));
  return o;
}

// ---------------------------------------------------------------------------
// A9: numerical suite

Outcome a9() {
  using biped::testing::max_fd_error;
  auto t0 = Clock::now();
  Outcome o("A9");
  std::vector<std::pair<std::string, bool>> checks;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> nd(0.0, 0.5);
  auto random_obs = [&] {
    Observation ob{};
    for (double& v : ob) v = nd(rng);
    return ob;
  };

  {  // MLP
    MlpParams p = mlp_init({6, 64, 64, 3}, rng, 1.0);
    for (double& v : p.values) v += 0.1 * nd(rng);
    Observation x = random_obs();
    std::vector<double> up{0.3, -1.2, 0.7};
    MlpGradient g = mlp_gradient(p, x, up);
    auto f = [&] {
      auto y = mlp_forward(p, x);
      return y[0] * up[0] + y[1] * up[1] + y[2] * up[2];
    };
    double e = max_fd_error(p.values, g.params, f, 50, 1);
    checks.push_back({fmt("mlp gradient %.1e", e), e <= 1e-5});
  }
  GaussianMlpPolicy pol = make_policy(PolicyKind::PureNN, GainSet{}, rng, {{32, 32}, -0.5, 1.0});
  {  // value
    ValueNet v = make_value_net(rng, {32, 32}, 50.0);
    RolloutBatch b;
    std::vector<double> ret;
    for (int i = 0; i < 40; ++i) {
      Transition t;
      t.obs = random_obs();
      b.transitions.push_back(t);
      ret.push_back(40.0 * nd(rng));
    }
    auto idx = all_indices(40);
    std::vector<double> g(v.net.values.size(), 0.0);
    value_loss(v, b, ret, idx, 0.5, &g);
    double e = max_fd_error(v.net.values, g, [&] { return value_loss(v, b, ret, idx, 0.5); }, 50, 2);
    checks.push_back({fmt("value gradient %.1e", e), e <= 1e-5});
  }
  {  // BC
    std::vector<BcSample> data;
    for (int i = 0; i < 40; ++i) {
      BcSample s;
      s.obs = random_obs();
      for (double& a : s.target) a = nd(rng);
      data.push_back(s);
    }
    auto idx = all_indices(data.size());
    std::vector<double> gm(pol.mean_net.values.size(), 0.0), gs(kActionDim, 0.0);
    bc_loss(pol, data, idx, &gm, &gs);
    auto f = [&] { return bc_loss(pol, data, idx); };
    double e = std::max(max_fd_error(pol.mean_net.values, gm, f, 50, 3), max_fd_error(pol.log_std, gs, f, 3, 4));
    checks.push_back({fmt("bc gradient %.1e", e), e <= 1e-5});
  }
  {  // PPO surrogate
    RolloutBatch b;
    std::vector<double> adv;
    std::uniform_real_distribution<double> u(-0.05, 0.05);
    for (int i = 0; i < 40; ++i) {
      Transition t;
      t.obs = random_obs();
      PolicySample s = policy_sample(pol, t.obs, rng);
      t.pre_squash = s.pre_squash;
      t.logprob = s.logprob + u(rng);
      b.transitions.push_back(t);
      adv.push_back(nd(rng));
    }
    auto idx = all_indices(40);
    std::vector<double> gm(pol.mean_net.values.size(), 0.0), gs(kActionDim, 0.0);
    ppo_surrogate(pol, b, adv, idx, 0.2, &gm, &gs);
    auto f = [&] { return -ppo_surrogate(pol, b, adv, idx, 0.2); };
    double e = std::max(max_fd_error(pol.mean_net.values, gm, f, 50, 5), max_fd_error(pol.log_std, gs, f, 3, 6));
    checks.push_back({fmt("ppo gradient %.1e", e), e <= 1e-5});
  }
  {  // GAE
    RolloutBatch b;
    for (int i = 0; i < 20; ++i) {
      Transition t;
      t.reward = nd(rng);
      t.value = nd(rng);
      t.done = i == 19;
      b.transitions.push_back(t);
    }
    b.episodes.push_back({0, 20, 0.0, 20, false});
    const double g = 0.98, l = 0.9;
    Advantages a = compute_gae(b, g, l, false);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      double s = 0.0;
      for (int k = t; k < 20; ++k) {
        double nv = k + 1 < 20 ? b.transitions[static_cast<std::size_t>(k + 1)].value : 0.0;
        s += std::pow(g * l, k - t) * (b.transitions[static_cast<std::size_t>(k)].reward + g * nv -
                                       b.transitions[static_cast<std::size_t>(k)].value);
      }
      worst = std::max(worst, std::abs(s - a.advantages[static_cast<std::size_t>(t)]));
    }
    checks.push_back({fmt("gae %.1e", worst), worst <= 1e-10});
  }
  {  // ballistic flight
    SimParams p;
    RobotState s;
    s.z = 2.0;
    s.dx = 0.7;
    s.dz = 1.1;
    s.stance_leg = StanceLeg::Flight;
    s.left.length = s.right.length = s.left.motor_length = s.right.motor_length = 0.8;
    update_foot(s.left, {s.x, s.z});
    update_foot(s.right, {s.x, s.z});
    Terrain ground = Terrain::flat(-10.0);
    MotorCommand cmd;
    cmd.stance_motor_length = 0.8;
    cmd.swing_length_target = 0.8;
    const int n = static_cast<int>(std::lround(0.5 / p.dt));
    for (int i = 0; i < n; ++i) s = step(s, cmd, p, ground);
    double T = n * p.dt;
    double ex = std::abs(s.x - 0.7 * T), ez = std::abs(s.z - (2.0 + 1.1 * T - 0.5 * p.gravity * T * T));
    checks.push_back({fmt("ballistic %.1e m", std::max(ex, ez)), std::max(ex, ez) <= 1e-6});
  }
  {  // inverse dynamics round trip
    SimParams p;
    std::uniform_real_distribution<double> ang(-0.4, 0.4), fz(200.0, 1200.0), fr(-0.9, 0.9);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      double a = ang(rng), Fz = fz(rng), Fx = fr(rng) * p.friction_mu * Fz;
      StanceCommand c = inverse_dynamics(Fx, Fz, a, 0.9, 0.0, p);
      if (std::abs(c.hip_torque) >= p.torque_max) continue;
      Vec2 f = stance_force(c.axial_force, c.hip_torque, a, 0.9);
      worst = std::max({worst, std::abs(f.x - Fx), std::abs(f.z - Fz)});
    }
    checks.push_back({fmt("inverse dynamics %.1e N", worst), worst <= 1e-9});
  }
  {  // reward cases
    RewardConfig rc;
    bool ok = reward(rc.v_tgt, 0.0, false, rc) == 1.0 && std::abs(reward(rc.v_tgt + 0.5, 1.0, false, rc) - 0.45) < 1e-12 &&
              reward(0.0, 0.0, true, rc) == -100.0;
    checks.push_back({"reward 1.0/0.45/-100", ok});
  }
  {  // zero network == expert
    EnvSpec env;
    PolicyInit init;
    init.out_scale = 0.0;
    GaussianMlpPolicy h = make_policy(PolicyKind::HeuristicNN, GainSet{}, rng, init);
    EpisodeSeeds seeds = episode_seeds(3, 0);
    Terrain terrain = episode_terrain(env, seeds.terrain);
    RobotState start = initial_state(env.params, h.gains, terrain, env.init);
    std::vector<RobotState> a, b;
    run_episode(env, terrain, start, h.gains, seeds.noise, expert_controller(h.gains),
                [&](const StepView& v) { a.push_back(v.after); });
    run_episode(env, terrain, start, h.gains, seeds.noise, mean_controller(h),
                [&](const StepView& v) { b.push_back(v.after); });
    bool same = a.size() == b.size();
    for (std::size_t i = 0; same && i < a.size(); ++i)
      same = a[i].x == b[i].x && a[i].z == b[i].z && a[i].pitch == b[i].pitch && a[i].dx == b[i].dx;
    checks.push_back({fmt("zero-network trajectory (%zu steps)", a.size()), same});
  }
  {  // training determinism
    EnvSpec env;
    PpoConfig cfg;
    cfg.samples_per_iter = 1000;
    cfg.episode_len_max_s = 1.0;
    cfg.minibatch = 250;
    cfg.epochs = 2;
    std::mt19937_64 r1(5);
    GaussianMlpPolicy p = make_policy(PolicyKind::HeuristicNN, GainSet{}, r1, {{16, 16}, -1.0, 0.01});
    ValueNet v = make_value_net(r1, {16, 16});
    TrainResult x = train_loop(env, p, v, cfg, 10, 17);
    TrainResult y = train_loop(env, p, v, cfg, 10, 17);
    bool same = x.policy == y.policy && x.value == y.value && x.curve.size() == 10;
    for (std::size_t i = 0; same && i < x.curve.size(); ++i) same = x.curve[i].mean_reward == y.curve[i].mean_reward;
    checks.push_back({"10-iteration training bit-exact", same});
  }
  double dt = seconds_since(t0);
  o.pass = dt <= 120.0;
  std::string line;
  int passed = 0;
  for (const auto& [name, ok] : checks) {
    o.pass = o.pass && ok;
    passed += ok ? 1 : 0;
    line += (line.empty() ? "" : "; ") + name + (ok ? "" : " FAILED");
  }
  o.summary = fmt("numerical suite %d/%zu checks, %.1f s", passed, checks.size(), dt);
  o.details.push_back(line);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance runs"};
  std::string config_path = BIPED_DESK_CONFIG;
  std::string out_dir = "acceptance_out";
  std::vector<std::string> only;
  bool strict = false;
  app.add_option("--config", config_path, "training profile")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "artifact directory");
  app.add_option("--only", only, "criteria to run, e.g. A1,A9")->delimiter(',');
  app.add_flag("--strict", strict, "exit 1 when any criterion fails");
  CLI11_PARSE(app, argc, argv);

  auto want = [&](const std::string& id) { return only.empty() || std::find(only.begin(), only.end(), id) != only.end(); };
  try {
    ExperimentConfig c = load_config(config_path);
    fs::path out = out_dir;
    fs::create_directories(out);
    std::printf("profile %s, seed %llu, %d iterations, %d samples per iteration\n", config_path.c_str(),
                static_cast<unsigned long long>(c.run.seed), c.run.iterations, c.ppo.samples_per_iter);
    std::vector<Outcome> results;
    auto record = [&](Outcome o) {
      report(o);
      results.push_back(std::move(o));
    };

    if (want("A1")) record(a1(c));
    if (want("A2")) record(a2(c));
    if (want("A3")) record(a3(c, out));
    if (want("A9")) record(a9());

    bool need_pop = want("A4") || want("A5") || want("A6") || want("A7") || want("A8");
    if (need_pop) {
      std::map<PolicyKind, std::vector<Trained>> pop;
      bool need_pure = want("A4") || want("A5") || want("A6");
      for (PolicyKind kind : {PolicyKind::HeuristicNN, PolicyKind::PureNN}) {
        if (kind == PolicyKind::PureNN && !need_pure) continue;
        for (std::uint64_t s = 1; s <= 5; ++s) {
          std::uint64_t seed = mix_seed(c.run.seed, s);
          pop[kind].push_back(train_one(c, kind, seed, out, fmt("%s_%llu", short_name(kind), static_cast<unsigned long long>(s))));
        }
      }
      if (want("A4")) record(a4(pop, c.run.iterations, 45.0 * 60.0));
      if (want("A5")) record(a5(pop, c.run.iterations));
      if (want("A6")) {
        TransferReport rep;
        record(a6(c, pop, out, rep));
      }
      if (want("A7")) record(a7(c, pop[PolicyKind::HeuristicNN]));
      if (want("A8")) record(a8(c, pop[PolicyKind::HeuristicNN], out));
    }

    std::sort(results.begin(), results.end(), [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
    int failed = 0;
    std::printf("\nsummary\n");
    for (const auto& r : results) {
      std::printf("%s %s\n", r.id.c_str(), r.pass ? "PASS" : "FAIL");
      failed += r.pass ? 0 : 1;
    }
    return strict && failed > 0 ? 1 : 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 2;
  }
}

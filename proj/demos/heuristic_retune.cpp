// A HeuristicNN policy whose network outputs zero is the expert. Retuning its
// velocity gain changes the closed loop while the network stays untouched.

#include <cstdio>

#include "biped/transfer.hpp"

int main() {
  using namespace biped;
  std::mt19937_64 rng(3);
  PolicyInit init;
  init.out_scale = 0.0;
  GaussianMlpPolicy policy = make_policy(PolicyKind::HeuristicNN, GainSet{}, rng, init);

  EnvSpec nominal;
  nominal.rough = false;
  EnvSpec surrogate = make_surrogate(nominal, PerturbationSpec{});

  for (double k : {0.2, 0.3}) {
    GaussianMlpPolicy p = retune_gain(policy, "k", k);
    EvalResult r = evaluate_policy(surrogate, p, 5, 11);
    std::printf("k = %.2f: %d/%d episodes without a fall, mean steps %.0f, network unchanged: %s\n", k,
                r.n_success, r.n_episodes, r.mean_steps, p.mean_net == policy.mean_net ? "yes" : "no");
  }
}

// Runs the expert controller for one episode on flat ground and on a few
// rough terrains and prints how far it got.

#include <cstdio>

#include "biped/env.hpp"

int main() {
  using namespace biped;
  GainSet gains;
  for (bool rough : {false, true}) {
    EnvSpec env;
    env.rough = rough;
    for (std::uint64_t seed = 0; seed < (rough ? 5u : 1u); ++seed) {
      Terrain terrain = episode_terrain(env, seed);
      RobotState start = initial_state(env.params, gains, terrain, env.init);
      EpisodeSummary s = run_episode(env, terrain, start, gains, seed, expert_controller(gains));
      std::printf("%-5s seed %llu: %5d steps  %-7s  %.2f m  reward %.1f\n", rough ? "rough" : "flat",
                  static_cast<unsigned long long>(seed), s.steps, s.fell ? "fell" : "walked", s.distance,
                  s.total_reward);
    }
  }
}

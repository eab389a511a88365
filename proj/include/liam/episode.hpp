#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "liam/world.hpp"

namespace liam::world {

/// One trial: instruction, n frames, n actions (expert transcript + stop),
/// n object labels and n accumulated semantic maps.
struct Episode {
  std::uint64_t episode_id = 0;
  std::uint64_t layout_seed = 0;
  std::uint64_t seed = 0;
  std::string split;
  std::string task_kind;
  std::vector<int> instruction;
  std::vector<std::vector<float>> frames;
  std::vector<int> actions;
  std::vector<int> objects;
  std::vector<std::vector<float>> maps;
  World initial;  // world at the first frame, for replay

  std::size_t length() const { return actions.size(); }
  bool operator==(const Episode&) const = default;
};

/// Goal sentence, the goal marker, then one phrase per subgoal.
std::vector<int> build_instruction(const World& world, const Task& task, const Plan& plan);

/// Runs the expert plan from `world` and records everything the model sees.
Episode emit_episode(const World& world, const Task& task, std::uint64_t seed);

struct Replay {
  std::vector<std::vector<float>> frames;
  std::vector<std::vector<float>> maps;
};
/// Re-simulates `actions` (stop excluded) from `initial`.
Replay replay(const World& initial, const std::vector<int>& actions);

struct GenerationSpec {
  std::uint64_t layout_begin = 0;  // layouts [begin, end)
  std::uint64_t layout_end = 1;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::string split = "train";
  WorldConfig world;
  std::size_t max_len = 24;
};

/// Episode i uses layout begin + i mod (end - begin) and its own seed stream,
/// so generation is order-independent and runs in parallel.
std::vector<Episode> generate_episodes(const GenerationSpec& spec);

}  // namespace liam::world

#pragma once

// Deterministic gridworld: layouts, agent dynamics, ego-centric observations,
// accumulated semantic maps, tasks and a shortest-path expert.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "liam/params.hpp"

namespace liam::world {

enum ActionId : int {
  kMoveAhead = 0,
  kRotateLeft,
  kRotateRight,
  kLookUp,
  kLookDown,
  kPickup,
  kPut,
  kOpen,
  kClose,
  kToggleOn,
  kToggleOff,
  kSlice,
};

bool is_interaction(int action);

struct WorldConfig {
  int extent = 8;       // W = H
  int view = 3;         // K x K window ahead of the agent
  int num_objects = 12;
  void validate() const;
  bool operator==(const WorldConfig&) const = default;
};

struct Pose {
  int x = 0;
  int y = 0;
  int heading = 0;  // 0 N (y - 1), 1 E (x + 1), 2 S, 3 W
  int pitch = 0;    // -1 down, 0 level, 1 up
  bool operator==(const Pose&) const = default;
};

struct WorldObject {
  int cls = 0;  // 1..84
  int x = 0;
  int y = 0;
  int elevation = 0;  // pitch needed to interact
  bool open = false;
  bool on = false;
  bool sliced = false;
  int contents = -1;     // index of the object put inside, or -1
  bool present = true;   // false once picked up or put away
  bool operator==(const WorldObject&) const = default;
};

struct World {
  WorldConfig config;
  std::uint64_t seed = 0;
  std::vector<WorldObject> objects;
  Pose agent;
  int held = -1;  // index into objects

  bool in_bounds(int x, int y) const;
  /// Index of the present object at (x, y), or -1.
  int object_at(int x, int y) const;
  /// Cell directly ahead of `pose`.
  std::pair<int, int> ahead(const Pose& pose) const;
  /// Present object in the cell ahead whose elevation matches the pitch, or -1.
  int interactable(const Pose& pose) const;
  bool operator==(const World&) const = default;
};

/// Canonical text form; equal worlds serialize identically.
std::string serialize(const World& world);

/// Same seed and config -> identical world.
World generate_world(std::uint64_t seed, const WorldConfig& config);

/// Whether the agent may take `action` now (motor moves into free cells only;
/// interactions need a matching object ahead at the right pitch).
bool can_apply(const World& world, int action);
/// Applies `action`; throws std::logic_error when it is not applicable.
void apply(World& world, int action);

// Observation layout: K*K cells (rows = distance 1..K ahead, columns = lateral
// offset left to right), each kCellFeatures wide, then pitch one-hot (3) and
// held-object one-hot (85, index 0 = nothing).
inline constexpr int kCellFeatures = 92;
std::size_t frame_feature_len(const WorldConfig& config);
std::vector<float> render_frame(const World& world, const Pose& pose);

// Map layout: channel-major C x H x W; channel 0 explored, 1 occupied,
// 2..8 the class id in binary.
inline constexpr int kMapChannels = 9;
std::size_t map_len(const WorldConfig& config);
/// Adds the cells visible from `pose` to `prev` (values only ever rise).
std::vector<float> accumulate_map(const std::vector<float>& prev, const World& world,
                                  const Pose& pose);
/// Class id recorded for (x, y), 0 when nothing was seen there.
int map_class_at(const std::vector<float>& map, const WorldConfig& config, int x, int y);

struct Subgoal {
  int action;  // interaction id
  int object;  // index into World::objects
};

struct Task {
  std::string kind;
  std::vector<Subgoal> subgoals;
  std::vector<int> goal_objects;  // objects named in the goal sentence
};

/// Random feasible task for the current world state, or nullopt.
std::optional<Task> sample_task(const World& world, Rng& rng);

class UnreachableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PlannedSubgoal {
  std::size_t first_action;  // index into the transcript
  std::size_t navigation_steps;
};

struct Plan {
  std::vector<int> actions;  // motor/interaction ids only; stop is appended later
  std::vector<PlannedSubgoal> segments;
};

/// Breadth-first shortest paths between interactions; throws UnreachableError.
Plan plan_expert(const World& world, const Task& task);

}  // namespace liam::world

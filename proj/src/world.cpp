#include "liam/world.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <sstream>

#include "liam/encoders.hpp"
#include "liam/vocab.hpp"

namespace liam::world {

namespace {
constexpr std::array<int, 4> kDx{0, 1, 0, -1};
constexpr std::array<int, 4> kDy{-1, 0, 1, 0};
constexpr std::array<int, 5> kMotor{kMoveAhead, kRotateLeft, kRotateRight, kLookUp, kLookDown};

Pose step_pose(const Pose& p, int action) {
  Pose q = p;
  switch (action) {
    case kMoveAhead:
      q.x += kDx[static_cast<std::size_t>(p.heading)];
      q.y += kDy[static_cast<std::size_t>(p.heading)];
      break;
    case kRotateLeft: q.heading = (p.heading + 3) % 4; break;
    case kRotateRight: q.heading = (p.heading + 1) % 4; break;
    case kLookUp: q.pitch = p.pitch + 1; break;
    case kLookDown: q.pitch = p.pitch - 1; break;
    default: break;
  }
  return q;
}
}  // namespace

bool is_interaction(int action) { return action >= kPickup && action <= kSlice; }

void WorldConfig::validate() const {
  if (extent < 2 || view < 1 || view % 2 == 0 || num_objects < 1 ||
      num_objects >= extent * extent || num_objects > kNumObjectClasses) {
    throw std::invalid_argument("invalid world config (extent " + std::to_string(extent) +
                                ", view " + std::to_string(view) + ", objects " +
                                std::to_string(num_objects) + ")");
  }
}

bool World::in_bounds(int x, int y) const {
  return x >= 0 && y >= 0 && x < config.extent && y < config.extent;
}

int World::object_at(int x, int y) const {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const auto& o = objects[i];
    if (o.present && o.x == x && o.y == y) return static_cast<int>(i);
  }
  return -1;
}

std::pair<int, int> World::ahead(const Pose& pose) const {
  return {pose.x + kDx[static_cast<std::size_t>(pose.heading)],
          pose.y + kDy[static_cast<std::size_t>(pose.heading)]};
}

int World::interactable(const Pose& pose) const {
  const auto [x, y] = ahead(pose);
  const int o = object_at(x, y);
  if (o < 0 || objects[static_cast<std::size_t>(o)].elevation != pose.pitch) return -1;
  return o;
}

std::string serialize(const World& w) {
  std::ostringstream os;
  os << "world seed=" << w.seed << " extent=" << w.config.extent << " view=" << w.config.view
     << " objects=" << w.config.num_objects << '\n';
  os << "agent " << w.agent.x << ' ' << w.agent.y << ' ' << w.agent.heading << ' ' << w.agent.pitch
     << " held=" << w.held << '\n';
  for (const auto& o : w.objects) {
    os << "object " << o.cls << ' ' << o.x << ' ' << o.y << ' ' << o.elevation << ' ' << o.open
       << o.on << o.sliced << ' ' << o.contents << ' ' << o.present << '\n';
  }
  return os.str();
}

World generate_world(std::uint64_t seed, const WorldConfig& config) {
  config.validate();
  Rng rng(mix_seed(seed, 0x776f726c64ULL));
  World w;
  w.config = config;
  w.seed = seed;
  std::vector<int> classes(kNumObjectClasses);
  for (int i = 0; i < kNumObjectClasses; ++i) classes[static_cast<std::size_t>(i)] = i + 1;
  std::vector<int> cells(static_cast<std::size_t>(config.extent * config.extent));
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] = static_cast<int>(i);
  // Partial Fisher-Yates on both pools.
  for (std::size_t i = 0; i < static_cast<std::size_t>(config.num_objects); ++i) {
    std::swap(classes[i], classes[i + rng.index(classes.size() - i)]);
  }
  for (std::size_t i = 0; i <= static_cast<std::size_t>(config.num_objects); ++i) {
    std::swap(cells[i], cells[i + rng.index(cells.size() - i)]);
  }
  for (int i = 0; i < config.num_objects; ++i) {
    WorldObject o;
    o.cls = classes[static_cast<std::size_t>(i)];
    o.x = cells[static_cast<std::size_t>(i)] % config.extent;
    o.y = cells[static_cast<std::size_t>(i)] / config.extent;
    o.elevation = static_cast<int>(rng.index(3)) - 1;
    const auto& info = object_class(o.cls);
    if (info.openable) o.open = rng.uniform() < 0.25;
    if (info.toggleable) o.on = rng.uniform() < 0.5;
    w.objects.push_back(o);
  }
  const int agent_cell = cells[static_cast<std::size_t>(config.num_objects)];
  w.agent = {agent_cell % config.extent, agent_cell / config.extent,
             static_cast<int>(rng.index(4)), 0};
  return w;
}

bool can_apply(const World& w, int action) {
  if (action < 0 || action > kSlice) return false;
  const Pose& p = w.agent;
  switch (action) {
    case kMoveAhead: {
      const auto [x, y] = w.ahead(p);
      return w.in_bounds(x, y) && w.object_at(x, y) < 0;
    }
    case kRotateLeft:
    case kRotateRight: return true;
    case kLookUp: return p.pitch < 1;
    case kLookDown: return p.pitch > -1;
    default: break;
  }
  const int idx = w.interactable(p);
  if (idx < 0) return false;
  const auto& o = w.objects[static_cast<std::size_t>(idx)];
  const auto& info = object_class(o.cls);
  switch (action) {
    case kPickup: return info.pickupable && w.held < 0;
    case kPut: return w.held >= 0 && info.receptacle && o.contents < 0 && (!info.openable || o.open);
    case kOpen: return info.openable && !o.open;
    case kClose: return info.openable && o.open;
    case kToggleOn: return info.toggleable && !o.on;
    case kToggleOff: return info.toggleable && o.on;
    case kSlice: return info.sliceable && !o.sliced;
    default: return false;
  }
}

void apply(World& w, int action) {
  if (!can_apply(w, action)) {
    throw std::logic_error("action " + std::string(action_name(action)) +
                           " not applicable in the current state");
  }
  if (!is_interaction(action)) {
    w.agent = step_pose(w.agent, action);
    return;
  }
  const int idx = w.interactable(w.agent);
  auto& o = w.objects[static_cast<std::size_t>(idx)];
  switch (action) {
    case kPickup:
      o.present = false;
      w.held = idx;
      break;
    case kPut:
      w.objects[static_cast<std::size_t>(w.held)].present = false;
      o.contents = w.held;
      w.held = -1;
      break;
    case kOpen: o.open = true; break;
    case kClose: o.open = false; break;
    case kToggleOn: o.on = true; break;
    case kToggleOff: o.on = false; break;
    case kSlice: o.sliced = true; break;
    default: break;
  }
}

std::size_t frame_feature_len(const WorldConfig& c) {
  return static_cast<std::size_t>(c.view * c.view * kCellFeatures) + 3 + kNumObjectLabels;
}

std::vector<float> render_frame(const World& w, const Pose& pose) {
  const int k = w.config.view;
  std::vector<float> obs(frame_feature_len(w.config), 0.0f);
  const int fx = kDx[static_cast<std::size_t>(pose.heading)];
  const int fy = kDy[static_cast<std::size_t>(pose.heading)];
  const int rx = kDx[static_cast<std::size_t>((pose.heading + 1) % 4)];
  const int ry = kDy[static_cast<std::size_t>((pose.heading + 1) % 4)];
  for (int dist = 1; dist <= k; ++dist) {
    for (int lat = -k / 2; lat <= k / 2; ++lat) {
      const int x = pose.x + dist * fx + lat * rx;
      const int y = pose.y + dist * fy + lat * ry;
      float* cell = obs.data() + ((dist - 1) * k + (lat + k / 2)) * kCellFeatures;
      if (!w.in_bounds(x, y)) {
        cell[84] = 1.0f;
        continue;
      }
      const int idx = w.object_at(x, y);
      if (idx < 0) continue;
      const auto& o = w.objects[static_cast<std::size_t>(idx)];
      cell[o.cls - 1] = 1.0f;
      cell[85 + o.elevation + 1] = 1.0f;
      cell[88] = o.open ? 1.0f : 0.0f;
      cell[89] = o.on ? 1.0f : 0.0f;
      cell[90] = o.sliced ? 1.0f : 0.0f;
      cell[91] = o.contents >= 0 ? 1.0f : 0.0f;
    }
  }
  float* tail = obs.data() + k * k * kCellFeatures;
  tail[pose.pitch + 1] = 1.0f;
  tail[3 + (w.held >= 0 ? w.objects[static_cast<std::size_t>(w.held)].cls : 0)] = 1.0f;
  return obs;
}

std::size_t map_len(const WorldConfig& c) {
  return static_cast<std::size_t>(kMapChannels * c.extent * c.extent);
}

std::vector<float> accumulate_map(const std::vector<float>& prev, const World& w,
                                  const Pose& pose) {
  const int e = w.config.extent;
  if (prev.size() != map_len(w.config)) {
    throw std::invalid_argument("accumulate_map: map of " + std::to_string(prev.size()) +
                                " values, expected " + std::to_string(map_len(w.config)));
  }
  std::vector<float> map = prev;
  const int k = w.config.view;
  const int fx = kDx[static_cast<std::size_t>(pose.heading)];
  const int fy = kDy[static_cast<std::size_t>(pose.heading)];
  const int rx = kDx[static_cast<std::size_t>((pose.heading + 1) % 4)];
  const int ry = kDy[static_cast<std::size_t>((pose.heading + 1) % 4)];
  auto at = [&](int ch, int x, int y) -> float& {
    return map[static_cast<std::size_t>((ch * e + y) * e + x)];
  };
  for (int dist = 1; dist <= k; ++dist) {
    for (int lat = -k / 2; lat <= k / 2; ++lat) {
      const int x = pose.x + dist * fx + lat * rx;
      const int y = pose.y + dist * fy + lat * ry;
      if (!w.in_bounds(x, y)) continue;
      at(0, x, y) = 1.0f;
      const int idx = w.object_at(x, y);
      if (idx < 0) continue;
      at(1, x, y) = 1.0f;
      const int cls = w.objects[static_cast<std::size_t>(idx)].cls;
      for (int bit = 0; bit < 7; ++bit)
        if (cls & (1 << bit)) at(2 + bit, x, y) = 1.0f;
    }
  }
  return map;
}

int map_class_at(const std::vector<float>& map, const WorldConfig& c, int x, int y) {
  const int e = c.extent;
  int cls = 0;
  for (int bit = 0; bit < 7; ++bit)
    if (map[static_cast<std::size_t>(((2 + bit) * e + y) * e + x)] > 0.5f) cls |= 1 << bit;
  return cls;
}

std::optional<Task> sample_task(const World& w, Rng& rng) {
  std::vector<int> pickup, receptacle, toggle_off_now, toggle_on_now, openable_closed, sliceable;
  for (std::size_t i = 0; i < w.objects.size(); ++i) {
    const auto& o = w.objects[i];
    if (!o.present) continue;
    const auto& info = object_class(o.cls);
    const int idx = static_cast<int>(i);
    if (info.pickupable) pickup.push_back(idx);
    if (info.receptacle && o.contents < 0) receptacle.push_back(idx);
    if (info.toggleable && !o.on) toggle_off_now.push_back(idx);
    if (info.toggleable && o.on) toggle_on_now.push_back(idx);
    if (info.openable && !o.open) openable_closed.push_back(idx);
    if (info.sliceable && info.pickupable && !o.sliced) sliceable.push_back(idx);
  }
  auto pick = [&rng](const std::vector<int>& v) { return v[rng.index(v.size())]; };
  auto pick_other = [&rng](const std::vector<int>& v, int not_this) -> int {
    std::vector<int> rest;
    for (int x : v)
      if (x != not_this) rest.push_back(x);
    return rest.empty() ? -1 : rest[rng.index(rest.size())];
  };

  std::vector<std::string> kinds;
  if (w.held < 0 && !pickup.empty()) kinds.emplace_back("pick_up");
  if (w.held < 0 && !pickup.empty() && !receptacle.empty() &&
      !(receptacle.size() == 1 && pickup.size() == 1 && receptacle[0] == pickup[0]))
    kinds.emplace_back("pick_and_place");
  if (w.held < 0 && !pickup.empty() && !toggle_off_now.empty() &&
      !(toggle_off_now.size() == 1 && pickup.size() == 1 && toggle_off_now[0] == pickup[0]))
    kinds.emplace_back("pick_and_toggle");
  if (!toggle_off_now.empty()) kinds.emplace_back("toggle_on");
  if (!toggle_on_now.empty()) kinds.emplace_back("toggle_off");
  if (!openable_closed.empty()) kinds.emplace_back("open_close");
  if (w.held < 0 && !sliceable.empty()) kinds.emplace_back("slice_and_pick");
  if (kinds.empty()) return std::nullopt;

  Task t;
  t.kind = kinds[rng.index(kinds.size())];
  if (t.kind == "pick_up") {
    const int a = pick(pickup);
    t.subgoals = {{kPickup, a}};
    t.goal_objects = {a};
  } else if (t.kind == "pick_and_place") {
    int a = pick(pickup);
    int b = pick_other(receptacle, a);
    if (b < 0) {
      b = receptacle[0];
      a = pick_other(pickup, b);
    }
    t.subgoals = {{kPickup, a}};
    const auto& rec = w.objects[static_cast<std::size_t>(b)];
    const bool must_open = object_class(rec.cls).openable && !rec.open;
    if (must_open) t.subgoals.push_back({kOpen, b});
    t.subgoals.push_back({kPut, b});
    if (must_open) t.subgoals.push_back({kClose, b});
    t.goal_objects = {a, b};
  } else if (t.kind == "pick_and_toggle") {
    int a = pick(pickup);
    int l = pick_other(toggle_off_now, a);
    if (l < 0) {
      l = toggle_off_now[0];
      a = pick_other(pickup, l);
    }
    t.subgoals = {{kPickup, a}, {kToggleOn, l}};
    t.goal_objects = {a, l};
  } else if (t.kind == "toggle_on") {
    const int l = pick(toggle_off_now);
    t.subgoals = {{kToggleOn, l}};
    t.goal_objects = {l};
  } else if (t.kind == "toggle_off") {
    const int l = pick(toggle_on_now);
    t.subgoals = {{kToggleOff, l}};
    t.goal_objects = {l};
  } else if (t.kind == "open_close") {
    const int x = pick(openable_closed);
    t.subgoals = {{kOpen, x}, {kClose, x}};
    t.goal_objects = {x};
  } else {
    const int x = pick(sliceable);
    t.subgoals = {{kSlice, x}, {kPickup, x}};
    t.goal_objects = {x};
  }
  return t;
}

namespace {

std::vector<int> navigate(const World& w, int target) {
  const int e = w.config.extent;
  const auto& obj = w.objects[static_cast<std::size_t>(target)];
  auto id = [e](const Pose& p) {
    return static_cast<std::size_t>(((p.y * e + p.x) * 4 + p.heading) * 3 + (p.pitch + 1));
  };
  auto is_goal = [&](const Pose& p) {
    const auto [ax, ay] = w.ahead(p);
    return ax == obj.x && ay == obj.y && p.pitch == obj.elevation;
  };
  const std::size_t states = static_cast<std::size_t>(e * e * 12);
  std::vector<int> parent_action(states, -1);
  std::vector<std::size_t> parent(states, states);
  std::vector<Pose> pose_of(states);
  std::vector<char> seen(states, 0);
  std::deque<Pose> queue{w.agent};
  seen[id(w.agent)] = 1;
  pose_of[id(w.agent)] = w.agent;
  while (!queue.empty()) {
    const Pose p = queue.front();
    queue.pop_front();
    if (is_goal(p)) {
      std::vector<int> path;
      for (std::size_t s = id(p); parent[s] != states; s = parent[s]) path.push_back(parent_action[s]);
      std::reverse(path.begin(), path.end());
      return path;
    }
    for (int a : kMotor) {
      if (a == kLookUp && p.pitch >= 1) continue;
      if (a == kLookDown && p.pitch <= -1) continue;
      const Pose q = step_pose(p, a);
      if (a == kMoveAhead && (!w.in_bounds(q.x, q.y) || w.object_at(q.x, q.y) >= 0)) continue;
      const auto s = id(q);
      if (seen[s]) continue;
      seen[s] = 1;
      parent[s] = id(p);
      parent_action[s] = a;
      pose_of[s] = q;
      queue.push_back(q);
    }
  }
  throw UnreachableError("no path to object " + std::to_string(target) + " (" +
                         std::string(object_class(obj.cls).name) + ")");
}

}  // namespace

Plan plan_expert(const World& world, const Task& task) {
  World sim = world;
  Plan plan;
  for (const auto& sg : task.subgoals) {
    if (sg.object < 0 || static_cast<std::size_t>(sg.object) >= sim.objects.size() ||
        !sim.objects[static_cast<std::size_t>(sg.object)].present) {
      throw UnreachableError("subgoal references an absent object");
    }
    const auto path = navigate(sim, sg.object);
    plan.segments.push_back({plan.actions.size(), path.size()});
    for (int a : path) {
      apply(sim, a);
      plan.actions.push_back(a);
    }
    if (!can_apply(sim, sg.action)) {
      throw UnreachableError("subgoal " + std::string(action_name(sg.action)) +
                             " not achievable at its target");
    }
    apply(sim, sg.action);
    plan.actions.push_back(sg.action);
  }
  return plan;
}

}  // namespace liam::world

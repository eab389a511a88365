#include "liam/episode.hpp"

#include <stdexcept>

#include "liam/encoders.hpp"
#include "liam/vocab.hpp"

namespace liam::world {

namespace {

std::string name_of(const World& w, int idx) {
  return std::string(object_class(w.objects[static_cast<std::size_t>(idx)].cls).name);
}

std::string goal_sentence(const World& w, const Task& t) {
  const auto a = name_of(w, t.goal_objects.at(0));
  if (t.kind == "pick_up") return "pick up the " + a + " .";
  if (t.kind == "pick_and_place") return "put the " + a + " in the " + name_of(w, t.goal_objects.at(1)) + " .";
  if (t.kind == "pick_and_toggle")
    return "pick up the " + a + " and turn on the " + name_of(w, t.goal_objects.at(1)) + " .";
  if (t.kind == "toggle_on") return "turn on the " + a + " .";
  if (t.kind == "toggle_off") return "turn off the " + a + " .";
  if (t.kind == "open_close") return "open the " + a + " and then close it .";
  if (t.kind == "slice_and_pick") return "slice the " + a + " and pick it up .";
  throw std::invalid_argument("unknown task kind '" + t.kind + "'");
}

std::string subgoal_phrase(int action, const std::string& obj) {
  switch (action) {
    case kPickup: return "pick up the " + obj + " .";
    case kPut: return "put it in the " + obj + " .";
    case kOpen: return "open the " + obj + " .";
    case kClose: return "close the " + obj + " .";
    case kToggleOn: return "turn on the " + obj + " .";
    case kToggleOff: return "turn off the " + obj + " .";
    case kSlice: return "slice the " + obj + " .";
    default: throw std::invalid_argument("not an interaction");
  }
}

}  // namespace

std::vector<int> build_instruction(const World& world, const Task& task, const Plan& plan) {
  const auto& vocab = Vocabulary::instance();
  std::string text = goal_sentence(world, task) + " <<goal>>";
  for (std::size_t i = 0; i < task.subgoals.size(); ++i) {
    const auto& sg = task.subgoals[i];
    const auto obj = name_of(world, sg.object);
    if (i < plan.segments.size() && plan.segments[i].navigation_steps > 0) {
      text += " walk to the " + obj + " .";
    }
    text += " " + subgoal_phrase(sg.action, obj);
  }
  return vocab.encode(text);
}

Replay replay(const World& initial, const std::vector<int>& actions) {
  World w = initial;
  Replay r;
  std::vector<float> map(map_len(w.config), 0.0f);
  map = accumulate_map(map, w, w.agent);
  r.frames.push_back(render_frame(w, w.agent));
  r.maps.push_back(map);
  for (int a : actions) {
    apply(w, a);
    map = accumulate_map(map, w, w.agent);
    r.frames.push_back(render_frame(w, w.agent));
    r.maps.push_back(map);
  }
  return r;
}

Episode emit_episode(const World& world, const Task& task, std::uint64_t seed) {
  const Plan plan = plan_expert(world, task);
  Episode ep;
  ep.layout_seed = world.seed;
  ep.seed = seed;
  ep.task_kind = task.kind;
  ep.initial = world;
  ep.instruction = build_instruction(world, task, plan);
  World w = world;
  for (int a : plan.actions) {
    ep.objects.push_back(is_interaction(a) ? w.objects[static_cast<std::size_t>(w.interactable(w.agent))].cls
                                           : kNoObject);
    apply(w, a);
  }
  ep.objects.push_back(kNoObject);
  auto r = replay(world, plan.actions);
  ep.frames = std::move(r.frames);
  ep.maps = std::move(r.maps);
  ep.actions = plan.actions;
  ep.actions.push_back(kStopAction);
  return ep;
}

std::vector<Episode> generate_episodes(const GenerationSpec& spec) {
  spec.world.validate();
  if (spec.layout_end <= spec.layout_begin) {
    throw std::invalid_argument("generate_episodes: empty layout range");
  }
  const std::uint64_t layouts = spec.layout_end - spec.layout_begin;
  std::vector<Episode> out(spec.count);
  std::vector<std::string> errors(spec.count);
  const auto count = static_cast<std::ptrdiff_t>(spec.count);
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ii = 0; ii < count; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const std::uint64_t layout = spec.layout_begin + i % layouts;
    const std::uint64_t ep_seed = mix_seed(spec.seed, i);
    Rng rng(ep_seed);
    const World base = generate_world(layout, spec.world);
    bool done = false;
    for (int attempt = 0; attempt < 200 && !done; ++attempt) {
      World w = base;
      // Fresh start pose per attempt.
      std::vector<std::pair<int, int>> free_cells;
      for (int y = 0; y < w.config.extent; ++y)
        for (int x = 0; x < w.config.extent; ++x)
          if (w.object_at(x, y) < 0) free_cells.emplace_back(x, y);
      const auto cell = free_cells[rng.index(free_cells.size())];
      w.agent = {cell.first, cell.second, static_cast<int>(rng.index(4)), 0};
      auto task = sample_task(w, rng);
      if (!task) continue;
      try {
        Episode ep = emit_episode(w, *task, ep_seed);
        if (ep.length() > spec.max_len) continue;
        ep.episode_id = i;
        ep.split = spec.split;
        out[i] = std::move(ep);
        done = true;
      } catch (const UnreachableError&) {
      }
    }
    if (!done) errors[i] = "could not generate episode " + std::to_string(i);
  }
  for (const auto& e : errors)
    if (!e.empty()) throw std::runtime_error(e);
  return out;
}

}  // namespace liam::world

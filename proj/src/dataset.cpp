#include "liam/dataset.hpp"

#include <fstream>

#include "json.hpp"

namespace liam::world {

using nlohmann::json;

namespace {

json sparse(const std::vector<float>& v) {
  json idx = json::array();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 1.0f) {
      idx.push_back(i);
    } else if (v[i] != 0.0f) {
      throw DatasetError("non-binary feature value " + std::to_string(v[i]) + " at index " +
                         std::to_string(i));
    }
  }
  return idx;
}

std::vector<float> dense(const json& idx, std::size_t len) {
  std::vector<float> v(len, 0.0f);
  for (const auto& j : idx) {
    const auto i = j.get<std::size_t>();
    if (i >= len) throw DatasetError("feature index " + std::to_string(i) + " out of range");
    v[i] = 1.0f;
  }
  return v;
}

json world_to_json(const World& w) {
  json objs = json::array();
  for (const auto& o : w.objects) {
    objs.push_back({o.cls, o.x, o.y, o.elevation, o.open, o.on, o.sliced, o.contents, o.present});
  }
  return {{"seed", w.seed},
          {"extent", w.config.extent},
          {"view", w.config.view},
          {"num_objects", w.config.num_objects},
          {"agent", {w.agent.x, w.agent.y, w.agent.heading, w.agent.pitch}},
          {"held", w.held},
          {"objects", objs}};
}

World world_from_json(const json& j) {
  World w;
  w.seed = j.at("seed").get<std::uint64_t>();
  w.config.extent = j.at("extent").get<int>();
  w.config.view = j.at("view").get<int>();
  w.config.num_objects = j.at("num_objects").get<int>();
  w.config.validate();
  const auto& a = j.at("agent");
  w.agent = {a.at(0).get<int>(), a.at(1).get<int>(), a.at(2).get<int>(), a.at(3).get<int>()};
  w.held = j.at("held").get<int>();
  for (const auto& o : j.at("objects")) {
    WorldObject wo;
    wo.cls = o.at(0).get<int>();
    wo.x = o.at(1).get<int>();
    wo.y = o.at(2).get<int>();
    wo.elevation = o.at(3).get<int>();
    wo.open = o.at(4).get<bool>();
    wo.on = o.at(5).get<bool>();
    wo.sliced = o.at(6).get<bool>();
    wo.contents = o.at(7).get<int>();
    wo.present = o.at(8).get<bool>();
    w.objects.push_back(wo);
  }
  return w;
}

}  // namespace

std::string episode_to_json(const Episode& ep) {
  json frames = json::array(), maps = json::array();
  for (const auto& f : ep.frames) frames.push_back(sparse(f));
  for (const auto& m : ep.maps) maps.push_back(sparse(m));
  json j = {{"schema", kDatasetSchema},
            {"episode_id", ep.episode_id},
            {"split", ep.split},
            {"layout_seed", ep.layout_seed},
            {"seed", ep.seed},
            {"task", ep.task_kind},
            {"instruction", ep.instruction},
            {"actions", ep.actions},
            {"objects", ep.objects},
            {"frame_len", ep.frames.empty() ? 0 : ep.frames[0].size()},
            {"map_len", ep.maps.empty() ? 0 : ep.maps[0].size()},
            {"frames", frames},
            {"maps", maps},
            {"world", world_to_json(ep.initial)}};
  return j.dump();
}

Episode episode_from_json(const std::string& line, const std::string& where) {
  try {
    const json j = json::parse(line);
    if (j.at("schema").get<int>() != kDatasetSchema) {
      throw DatasetError("unsupported schema version " + j.at("schema").dump());
    }
    Episode ep;
    ep.episode_id = j.at("episode_id").get<std::uint64_t>();
    ep.split = j.at("split").get<std::string>();
    ep.layout_seed = j.at("layout_seed").get<std::uint64_t>();
    ep.seed = j.at("seed").get<std::uint64_t>();
    ep.task_kind = j.at("task").get<std::string>();
    ep.instruction = j.at("instruction").get<std::vector<int>>();
    ep.actions = j.at("actions").get<std::vector<int>>();
    ep.objects = j.at("objects").get<std::vector<int>>();
    const auto frame_len = j.at("frame_len").get<std::size_t>();
    const auto map_len = j.at("map_len").get<std::size_t>();
    for (const auto& f : j.at("frames")) ep.frames.push_back(dense(f, frame_len));
    for (const auto& m : j.at("maps")) ep.maps.push_back(dense(m, map_len));
    ep.initial = world_from_json(j.at("world"));
    const auto n = ep.actions.size();
    if (n == 0 || ep.frames.size() != n || ep.objects.size() != n || ep.maps.size() != n) {
      throw DatasetError("frames/actions/objects/maps lengths disagree");
    }
    if (ep.instruction.empty()) throw DatasetError("empty instruction");
    return ep;
  } catch (const DatasetError& e) {
    throw DatasetError(where + ": " + e.what());
  } catch (const json::exception& e) {
    throw DatasetError(where + ": " + e.what());
  } catch (const std::exception& e) {
    throw DatasetError(where + ": " + e.what());
  }
}

void write_dataset(const std::vector<Episode>& episodes, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot open '" + path + "' for writing");
  for (const auto& ep : episodes) out << episode_to_json(ep) << '\n';
  if (!out) throw DatasetError("write to '" + path + "' failed");
}

std::vector<Episode> read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open '" + path + "'");
  std::vector<Episode> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    out.push_back(episode_from_json(line, path + ":" + std::to_string(lineno)));
  }
  return out;
}

}  // namespace liam::world

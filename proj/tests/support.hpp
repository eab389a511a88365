#pragma once

// Small deterministic datasets shared by the test programs.

#include <vector>

#include "liam/episode.hpp"

namespace liam::testing {

inline std::vector<world::Episode> make_episodes(std::size_t count, std::uint64_t seed,
                                                 std::uint64_t layout_begin = 0,
                                                 std::uint64_t layout_end = 16,
                                                 const char* split = "train") {
  world::GenerationSpec spec;
  spec.layout_begin = layout_begin;
  spec.layout_end = layout_end;
  spec.count = count;
  spec.seed = seed;
  spec.split = split;
  return world::generate_episodes(spec);
}

}  // namespace liam::testing

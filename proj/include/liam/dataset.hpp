#pragma once

// Line-delimited JSON episode files. Observations and maps are binary, so
// each is stored as the list of its nonzero indices.

#include <stdexcept>
#include <string>
#include <vector>

#include "liam/episode.hpp"

namespace liam::world {

inline constexpr int kDatasetSchema = 1;

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string episode_to_json(const Episode& ep);
/// `where` prefixes error messages (e.g. "file.jsonl:12").
Episode episode_from_json(const std::string& line, const std::string& where);

void write_dataset(const std::vector<Episode>& episodes, const std::string& path);
/// Throws DatasetError naming path:line for malformed records.
std::vector<Episode> read_dataset(const std::string& path);

}  // namespace liam::world

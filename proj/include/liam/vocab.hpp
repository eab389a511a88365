#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace liam::world {

inline constexpr int kNumObjectClasses = 84;

struct ObjectClassInfo {
  std::string_view name;   // instruction token
  bool pickupable;
  bool receptacle;
  bool openable;
  bool toggleable;
  bool sliceable;
};

/// Class ids run 1..84; 0 is NoObject.
const ObjectClassInfo& object_class(int cls);

std::string_view action_name(int id);

/// Fixed instruction vocabulary: specials, template words, then object names.
class Vocabulary {
 public:
  static const Vocabulary& instance();

  static constexpr int kPad = 0;
  static constexpr int kGoal = 1;
  static constexpr int kPeriod = 2;

  std::size_t size() const { return words_.size(); }
  /// Throws std::out_of_range for an unknown word.
  int id(std::string_view word) const;
  const std::string& word(int id) const;
  /// Space-separated words -> ids.
  std::vector<int> encode(std::string_view sentence) const;
  std::string decode(const std::vector<int>& ids) const;

 private:
  Vocabulary();
  std::vector<std::string> words_;
};

}  // namespace liam::world

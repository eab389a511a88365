#include "liam/vocab.hpp"

#include <array>
#include <stdexcept>

namespace liam::world {

namespace {

// name, pickup, receptacle, open, toggle, slice
constexpr std::array<ObjectClassInfo, kNumObjectClasses> kClasses{{
    {"alarmclock", true, false, false, false, false},
    {"apple", true, false, false, false, true},
    {"armchair", false, true, false, false, false},
    {"baseballbat", true, false, false, false, false},
    {"basketball", true, false, false, false, false},
    {"bathtub", false, true, false, false, false},
    {"bed", false, true, false, false, false},
    {"blinds", false, false, true, false, false},
    {"book", true, false, true, false, false},
    {"bowl", true, true, false, false, false},
    {"box", true, true, true, false, false},
    {"bread", true, false, false, false, true},
    {"butterknife", true, false, false, false, false},
    {"cabinet", false, true, true, false, false},
    {"candle", true, false, false, true, false},
    {"cart", false, true, false, false, false},
    {"cd", true, false, false, false, false},
    {"cellphone", true, false, false, true, false},
    {"chair", false, true, false, false, false},
    {"cloth", true, false, false, false, false},
    {"coffeemachine", false, true, false, true, false},
    {"coffeetable", false, true, false, false, false},
    {"countertop", false, true, false, false, false},
    {"creditcard", true, false, false, false, false},
    {"cup", true, true, false, false, false},
    {"desk", false, true, false, false, false},
    {"desklamp", false, false, false, true, false},
    {"diningtable", false, true, false, false, false},
    {"dishsponge", true, false, false, false, false},
    {"drawer", false, true, true, false, false},
    {"dresser", false, true, false, false, false},
    {"egg", true, false, false, false, true},
    {"faucet", false, false, false, true, false},
    {"floorlamp", false, false, false, true, false},
    {"fork", true, false, false, false, false},
    {"fridge", false, true, true, false, false},
    {"garbagecan", false, true, false, false, false},
    {"glassbottle", true, false, false, false, false},
    {"handtowel", true, false, false, false, false},
    {"houseplant", false, false, false, false, false},
    {"kettle", true, false, true, false, false},
    {"keychain", true, false, false, false, false},
    {"knife", true, false, false, false, false},
    {"ladle", true, false, false, false, false},
    {"laptop", true, false, true, true, false},
    {"laundryhamper", false, true, false, false, false},
    {"lettuce", true, false, false, false, true},
    {"lightswitch", false, false, false, true, false},
    {"microwave", false, true, true, true, false},
    {"mirror", false, false, false, false, false},
    {"mug", true, true, false, false, false},
    {"newspaper", true, false, false, false, false},
    {"ottoman", false, true, false, false, false},
    {"painting", false, false, false, false, false},
    {"pan", true, true, false, false, false},
    {"papertowelroll", true, false, false, false, false},
    {"pen", true, false, false, false, false},
    {"pencil", true, false, false, false, false},
    {"peppershaker", true, false, false, false, false},
    {"pillow", true, false, false, false, false},
    {"plate", true, true, false, false, false},
    {"plunger", true, false, false, false, false},
    {"pot", true, true, false, false, false},
    {"potato", true, false, false, false, true},
    {"remotecontrol", true, false, false, false, false},
    {"safe", false, true, true, false, false},
    {"saltshaker", true, false, false, false, false},
    {"shelf", false, true, false, false, false},
    {"showerdoor", false, false, true, false, false},
    {"sidetable", false, true, false, false, false},
    {"sink", false, true, false, false, false},
    {"soapbar", true, false, false, false, false},
    {"soapbottle", true, false, false, false, false},
    {"sofa", false, true, false, false, false},
    {"spatula", true, false, false, false, false},
    {"spoon", true, false, false, false, false},
    {"spraybottle", true, false, false, false, false},
    {"statue", true, false, false, false, false},
    {"stoveburner", false, true, false, true, false},
    {"television", false, false, false, true, false},
    {"tennisracket", true, false, false, false, false},
    {"tissuebox", true, false, false, false, false},
    {"toaster", false, true, false, true, false},
    {"tomato", true, false, false, false, true},
}};

constexpr std::array<std::string_view, 14> kActionNames{
    "MoveAhead", "RotateLeft", "RotateRight", "LookUp",      "LookDown",
    "PickupObject", "PutObject", "OpenObject", "CloseObject", "ToggleObjectOn",
    "ToggleObjectOff", "SliceObject", "<<stop>>", "<<pad>>"};

constexpr std::array<std::string_view, 16> kTemplateWords{
    "pick", "up", "the", "and", "put", "in", "turn", "on",
    "off",  "open", "close", "then", "it", "slice", "walk", "to"};

}  // namespace

const ObjectClassInfo& object_class(int cls) {
  if (cls < 1 || cls > kNumObjectClasses) {
    throw std::out_of_range("object class " + std::to_string(cls) + " not in 1..84");
  }
  return kClasses[static_cast<std::size_t>(cls - 1)];
}

std::string_view action_name(int id) {
  if (id < 0 || id >= static_cast<int>(kActionNames.size())) {
    throw std::out_of_range("action id " + std::to_string(id));
  }
  return kActionNames[static_cast<std::size_t>(id)];
}

Vocabulary::Vocabulary() {
  words_ = {"<<pad>>", "<<goal>>", "."};
  for (auto w : kTemplateWords) words_.emplace_back(w);
  for (const auto& c : kClasses) words_.emplace_back(c.name);
}

const Vocabulary& Vocabulary::instance() {
  static const Vocabulary v;
  return v;
}

int Vocabulary::id(std::string_view word) const {
  for (std::size_t i = 0; i < words_.size(); ++i)
    if (words_[i] == word) return static_cast<int>(i);
  throw std::out_of_range("word '" + std::string(word) + "' not in vocabulary");
}

const std::string& Vocabulary::word(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= words_.size()) {
    throw std::out_of_range("token id " + std::to_string(id));
  }
  return words_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(std::string_view sentence) const {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos < sentence.size()) {
    while (pos < sentence.size() && sentence[pos] == ' ') ++pos;
    std::size_t end = sentence.find(' ', pos);
    if (end == std::string_view::npos) end = sentence.size();
    if (end > pos) out.push_back(id(sentence.substr(pos, end - pos)));
    pos = end;
  }
  return out;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out.push_back(' ');
    out += word(ids[i]);
  }
  return out;
}

}  // namespace liam::world

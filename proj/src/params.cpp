#include "liam/params.hpp"

#include <cmath>
#include <stdexcept>

namespace liam {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("Rng::index: empty range");
  return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

Tensor& ParameterStore::add(const std::string& name, const std::string& group, Shape shape,
                            std::vector<float> init) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  index_[name] = params_.size();
  params_.push_back({name, group, Tensor::leaf(std::move(shape), std::move(init), true)});
  return params_.back().value;
}

Tensor& ParameterStore::add_uniform(const std::string& name, const std::string& group,
                                    Shape shape, std::size_t fan_in, Rng& rng) {
  const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
  std::vector<float> init(numel(shape));
  for (auto& v : init) v = rng.uniform(-bound, bound);
  return add(name, group, std::move(shape), std::move(init));
}

Tensor& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return params_[it->second].value;
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return params_[it->second].value;
}

const std::string& ParameterStore::group_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter '" + name + "'");
  return params_[it->second].group;
}

std::set<std::string> ParameterStore::groups() const {
  std::set<std::string> out;
  for (const auto& p : params_) out.insert(p.group);
  return out;
}

void ParameterStore::set_frozen(const std::set<std::string>& frozen_groups) {
  const auto known = groups();
  for (const auto& g : frozen_groups) {
    if (!known.count(g)) throw std::invalid_argument("unknown parameter group '" + g + "'");
  }
  frozen_ = frozen_groups;
  for (auto& p : params_) p.value.set_requires_grad(!frozen_.count(p.group));
}

bool ParameterStore::frozen(const std::string& name) const { return frozen_.count(group_of(name)) != 0; }

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void ParameterStore::clear_grads() {
  for (auto& p : params_) p.value.node()->grad.clear();
}

}  // namespace liam

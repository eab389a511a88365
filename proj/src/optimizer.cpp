#include "liam/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace liam {

Optimizer::Optimizer(std::string kind, double lr, double beta1, double beta2, double eps)
    : kind_(std::move(kind)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
  if (kind_ != "sgd" && kind_ != "adam") {
    throw std::invalid_argument("unknown optimizer '" + kind_ + "'");
  }
}

void Optimizer::step(ParameterStore& store) {
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (auto& p : store.all()) {
    if (store.frozen(p.name) || !p.value.requires_grad() || !p.value.has_grad()) continue;
    auto w = p.value.mutable_data();
    auto g = p.value.grad();
    if (kind_ == "sgd") {
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= static_cast<float>(lr_ * g[i]);
      continue;
    }
    auto& m = m_[p.name];
    auto& v = v_[p.name];
    if (m.empty()) {
      m.assign(w.size(), 0.0f);
      v.assign(w.size(), 0.0f);
    }
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double gi = g[i];
      m[i] = static_cast<float>(beta1_ * m[i] + (1.0 - beta1_) * gi);
      v[i] = static_cast<float>(beta2_ * v[i] + (1.0 - beta2_) * gi * gi);
      const double mh = m[i] / bc1;
      const double vh = v[i] / bc2;
      w[i] -= static_cast<float>(lr_ * mh / (std::sqrt(vh) + eps_));
    }
  }
}

std::vector<std::pair<std::string, std::vector<float>>> Optimizer::export_state() const {
  std::vector<std::pair<std::string, std::vector<float>>> out;
  for (const auto& [name, m] : m_) out.emplace_back("adam.m/" + name, m);
  for (const auto& [name, v] : v_) out.emplace_back("adam.v/" + name, v);
  return out;
}

void Optimizer::import_state(std::uint64_t steps_taken,
                             const std::vector<std::pair<std::string, std::vector<float>>>& state) {
  t_ = steps_taken;
  m_.clear();
  v_.clear();
  for (const auto& [name, data] : state) {
    if (name.rfind("adam.m/", 0) == 0) {
      m_[name.substr(7)] = data;
    } else if (name.rfind("adam.v/", 0) == 0) {
      v_[name.substr(7)] = data;
    } else {
      throw std::invalid_argument("unexpected optimizer state tensor '" + name + "'");
    }
  }
}

}  // namespace liam

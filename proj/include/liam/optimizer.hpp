#pragma once

#include <map>
#include <string>
#include <vector>

#include "liam/params.hpp"

namespace liam {

/// Momentum-free gradient descent by default; "adam" keeps first/second moments.
/// Parameters that are frozen or received no gradient are left untouched.
class Optimizer {
 public:
  Optimizer(std::string kind, double lr, double beta1 = 0.9, double beta2 = 0.999,
            double eps = 1e-8);

  void step(ParameterStore& store);

  const std::string& kind() const { return kind_; }
  std::uint64_t steps_taken() const { return t_; }

  /// Moment buffers as named tensors ("adam.m/<param>", "adam.v/<param>") for checkpoints.
  std::vector<std::pair<std::string, std::vector<float>>> export_state() const;
  void import_state(std::uint64_t steps_taken,
                    const std::vector<std::pair<std::string, std::vector<float>>>& state);

 private:
  std::string kind_;
  double lr_, beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::map<std::string, std::vector<float>> m_, v_;
};

}  // namespace liam

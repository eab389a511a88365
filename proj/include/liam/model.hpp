#pragma once

// The full model: encoders, fusion transformer, heads and the learnable
// temperatures, all registered in one ParameterStore.

#include <memory>
#include <optional>
#include <span>

#include "liam/config.hpp"
#include "liam/encoders.hpp"
#include "liam/episode.hpp"
#include "liam/fusion.hpp"
#include "liam/params.hpp"

namespace liam {

/// The per-modality token features that enter apply_encodings.
struct FusionInputs {
  Tensor language;            // [m, d]
  Tensor frames;              // [n, d]
  Tensor actions;             // [n, d]
  std::optional<Tensor> maps;  // [n, d] when maps are enabled
};

class LiamModel {
 public:
  /// Parameters are drawn from a stream derived from config.seed.
  explicit LiamModel(const TrainConfig& config);
  LiamModel(const LiamModel&) = delete;
  LiamModel& operator=(const LiamModel&) = delete;

  const TrainConfig& config() const { return config_; }
  ParameterStore& store() { return store_; }
  const ParameterStore& store() const { return store_; }
  const Encoders& encoders() const { return *encoders_; }
  const fusion::FusionModel& fusion() const { return *fusion_; }

  Tensor tau_ia() const { return store_.get("tau.ia"); }
  Tensor tau_ti() const { return store_.get("tau.ti"); }

  /// Observations of frames [begin, end) as a constant [k, F] matrix.
  static Tensor frame_matrix(const world::Episode& ep, std::size_t begin, std::size_t end);

  /// Token features scaled to the width of the positional table. `action_inputs`
  /// replaces the episode's own transcript (rollout feeds back predictions).
  FusionInputs fusion_inputs(const world::Episode& ep, std::span<const int> action_inputs,
                             bool map_enabled) const;

  fusion::HeadOutputs forward(const world::Episode& ep, std::span<const int> action_inputs,
                              bool map_enabled) const;
  /// Teacher forcing: the ground-truth transcript is the action input.
  fusion::HeadOutputs forward(const world::Episode& ep, bool map_enabled) const;

 private:
  TrainConfig config_;
  ParameterStore store_;
  std::unique_ptr<Encoders> encoders_;
  std::unique_ptr<fusion::FusionModel> fusion_;
};

EncoderConfig encoder_config(const TrainConfig& config);

}  // namespace liam

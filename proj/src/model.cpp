#include "liam/model.hpp"

#include <cmath>

#include "liam/ops.hpp"
#include "liam/vocab.hpp"

namespace liam {

EncoderConfig encoder_config(const TrainConfig& config) {
  EncoderConfig ec;
  ec.d = config.d;
  ec.vocab_size = world::Vocabulary::instance().size();
  ec.frame_feature_len = world::frame_feature_len(config.world);
  ec.frame_hidden = config.frame_hidden;
  ec.map_channels = world::kMapChannels;
  ec.map_extent = static_cast<std::size_t>(config.world.extent);
  return ec;
}

LiamModel::LiamModel(const TrainConfig& config) : config_(config) {
  config_.validate();
  Rng rng(mix_seed(config_.seed, 0x1a5e11u));
  encoders_ = std::make_unique<Encoders>(encoder_config(config_), store_, rng);
  fusion_ = std::make_unique<fusion::FusionModel>(
      fusion::FusionConfig{config_.d, config_.heads, config_.layers}, store_, rng);
  const auto tau = static_cast<float>(config_.tau_init);
  store_.add("tau.ia", "temperature", {1}, {tau});
  store_.add("tau.ti", "temperature", {1}, {tau});
  store_.set_frozen(config_.freeze);
}

Tensor LiamModel::frame_matrix(const world::Episode& ep, std::size_t begin, std::size_t end) {
  if (begin >= end || end > ep.frames.size()) {
    throw std::out_of_range("frame range [" + std::to_string(begin) + ", " + std::to_string(end) +
                            ") outside episode of " + std::to_string(ep.frames.size()) +
                            " frames");
  }
  const auto f = ep.frames[begin].size();
  std::vector<float> data;
  data.reserve((end - begin) * f);
  for (auto t = begin; t < end; ++t) data.insert(data.end(), ep.frames[t].begin(), ep.frames[t].end());
  return Tensor::constant({end - begin, f}, std::move(data));
}

FusionInputs LiamModel::fusion_inputs(const world::Episode& ep, std::span<const int> action_inputs,
                                      bool map_enabled) const {
  const auto n = ep.length();
  if (action_inputs.size() != n) {
    throw ShapeError("action inputs of length " + std::to_string(action_inputs.size()) +
                     " for an episode of " + std::to_string(n) + " steps");
  }
  // Unit rows times sqrt(d) match the norm of the positional rows.
  const float gain = std::sqrt(static_cast<float>(config_.d));
  auto scaled = [gain](const Tensor& x) { return ops::scale(ops::l2_normalize(x), gain); };

  FusionInputs in;
  in.language = scaled(encoders_->encode_text(ep.instruction).per_token);
  in.frames = ops::scale(encoders_->encode_frames(frame_matrix(ep, 0, n)), gain);
  in.actions = ops::scale(encoders_->embed_actions(action_inputs), gain);
  if (map_enabled) {
    const auto len = ep.maps.front().size();
    std::vector<float> data;
    data.reserve(n * len);
    for (const auto& m : ep.maps) data.insert(data.end(), m.begin(), m.end());
    in.maps = scaled(encoders_->encode_maps(Tensor::constant({n, len}, std::move(data))));
  }
  return in;
}

fusion::HeadOutputs LiamModel::forward(const world::Episode& ep,
                                       std::span<const int> action_inputs,
                                       bool map_enabled) const {
  const auto in = fusion_inputs(ep, action_inputs, map_enabled);
  const auto m = in.language.rows();
  const auto n = ep.length();
  const auto mask = fusion::build_causal_mask(m, n, map_enabled);
  auto encoded = fusion_->apply_encodings(in.language, in.frames, in.actions, in.maps);
  auto fused = fusion_->fuse(encoded, mask);
  return fusion_->predict_heads(fusion::slice_visual(fused, m, n));
}

fusion::HeadOutputs LiamModel::forward(const world::Episode& ep, bool map_enabled) const {
  return forward(ep, ep.actions, map_enabled);
}

}  // namespace liam

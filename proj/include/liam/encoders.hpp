#pragma once

// Trainable stand-ins for the text and image backbones, the action embedding
// table, the semantic-map projection, and the frame-pair fusion f(., .).
// Every modality ends in the shared width d.

#include <span>
#include <vector>

#include "liam/params.hpp"
#include "liam/tensor.hpp"

namespace liam {

inline constexpr int kNumActions = 14;       // 12 motor/interaction + stop + pad
inline constexpr int kNumMotorActions = 12;
inline constexpr int kStopAction = 12;
inline constexpr int kPadAction = 13;
inline constexpr int kNumObjectLabels = 85;  // 84 classes + NoObject (id 0)
inline constexpr int kNoObject = 0;

struct EncoderConfig {
  std::size_t d = 64;
  std::size_t vocab_size = 0;
  std::size_t frame_feature_len = 0;
  std::size_t frame_hidden = 128;
  std::size_t map_channels = 0;
  std::size_t map_extent = 0;
  int num_actions = kNumActions;
  int num_objects = kNumObjectLabels;

  std::size_t map_len() const { return map_channels * map_extent * map_extent; }
  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

struct TextEncoding {
  Tensor per_token;     // [m, d]
  Tensor sequence_rep;  // [d], unit norm
};

class Encoders {
 public:
  /// Registers all encoder parameters in `store` (groups: text, frame, action, map, pair_fusion).
  Encoders(const EncoderConfig& config, ParameterStore& store, Rng& rng);

  const EncoderConfig& config() const { return config_; }

  TextEncoding encode_text(std::span<const int> tokens) const;

  /// One observation -> unit d-vector.
  Tensor encode_frame(std::span<const float> obs) const;
  /// Observations as rows of [n, frame_feature_len] -> [n, d], unit rows.
  Tensor encode_frames(const Tensor& obs) const;

  /// Row `id` of the table, L2-normalized.
  Tensor embed_action(int id) const;
  /// Normalized rows for every id -> [k, d].
  Tensor embed_actions(std::span<const int> ids) const;

  /// flatten -> affine -> GELU.
  Tensor encode_map(std::span<const float> grid) const;
  Tensor encode_maps(const Tensor& grids) const;  // [n, map_len] -> [n, d]

  /// f(e_t, e_t1): width-2 convolution over the two-step sequence, global
  /// average pooling over time, L2 normalization.
  Tensor fuse_frame_pair(const Tensor& e_t, const Tensor& e_t1) const;
  /// Row-wise f over [N, d] x [N, d] -> [N, d].
  Tensor fuse_frame_pairs(const Tensor& e_t, const Tensor& e_t1) const;

 private:
  Tensor frame_mlp(const Tensor& obs) const;

  EncoderConfig config_;
  ParameterStore* store_;
};

}  // namespace liam

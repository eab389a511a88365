#pragma once

// Multimodal fusion transformer: modal-type + sinusoidal encodings, the causal
// mask over [L; I; A; M], masked multi-head attention layers, and the heads.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "liam/params.hpp"
#include "liam/tensor.hpp"

namespace liam::fusion {

enum class Modality : int { language = 0, frame = 1, action = 2, map = 3 };

struct FusionConfig {
  std::size_t d = 64;
  std::size_t heads = 4;
  std::size_t layers = 2;
};

/// Token layout [L (m) ; I (n) ; A (n) ; M (n)], M omitted when maps are disabled.
struct Layout {
  std::size_t m = 0;
  std::size_t n = 0;
  bool with_map = true;

  std::size_t size() const { return m + (with_map ? 3 : 2) * n; }
  Modality modality(std::size_t index) const;
  /// Position within the language block, or time step within a temporal block.
  std::size_t step(std::size_t index) const;
  std::size_t offset(Modality mod) const;
};

/// Row-major boolean matrix; allowed(i, j) means token i may attend to token j.
struct CausalMask {
  Layout layout;
  std::vector<std::uint8_t> allowed_flat;

  std::size_t size() const { return layout.size(); }
  bool allowed(std::size_t i, std::size_t j) const { return allowed_flat[i * size() + j] != 0; }
  /// One text row per token: '1' allowed, '.' blocked.
  std::string to_text() const;
};

/// Throws std::invalid_argument when m or n is 0.
CausalMask build_causal_mask(std::size_t m, std::size_t n, bool with_map = true);

/// Standard sinusoidal table: PE(p, 2i) = sin(p / 10000^(2i/d)), PE(p, 2i+1) = cos(...).
std::vector<float> sinusoidal_encoding(std::size_t positions, std::size_t d);

struct HeadOutputs {
  Tensor action_logits;  // [n, 14]
  Tensor object_logits;  // [n, 85]
  Tensor goal_progress;  // [n, 1], in (0, 1)
};

class FusionModel {
 public:
  /// Registers modal-type table (group modal_type), layer weights (fusion), heads (heads).
  FusionModel(const FusionConfig& config, ParameterStore& store, Rng& rng);

  const FusionConfig& config() const { return config_; }

  /// Adds type + position encodings to each block and concatenates in layout order.
  /// `maps` may be undefined when the layout has no map block.
  Tensor apply_encodings(const Tensor& language, const Tensor& frames, const Tensor& actions,
                         const std::optional<Tensor>& maps) const;

  /// `layers` applications of X <- LN(MA(X)) + X under `mask`.
  Tensor fuse(const Tensor& encoded, const CausalMask& mask) const;

  /// Masked multi-head attention (exposed for oracle tests).
  Tensor attention(const Tensor& x, const CausalMask& mask, std::size_t layer) const;

  HeadOutputs predict_heads(const Tensor& visual) const;

 private:
  FusionConfig config_;
  ParameterStore* store_;
};

/// Rows [m, m + n) of the fused sequence: the frame tokens.
Tensor slice_visual(const Tensor& fused, std::size_t m, std::size_t n);

}  // namespace liam::fusion

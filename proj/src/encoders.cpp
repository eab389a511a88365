#include "liam/encoders.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "liam/ops.hpp"

namespace liam {

void EncoderConfig::validate() const {
  if (num_actions != kNumActions) {
    throw std::invalid_argument("num_actions must be 14 (12 classes + stop + pad)");
  }
  if (num_objects != kNumObjectLabels) {
    throw std::invalid_argument("num_objects must be 85 (84 classes + NoObject)");
  }
  if (d == 0 || vocab_size == 0 || frame_feature_len == 0 || frame_hidden == 0 ||
      map_channels == 0 || map_extent == 0) {
    throw std::invalid_argument("encoder dimensions must be positive");
  }
}

Encoders::Encoders(const EncoderConfig& config, ParameterStore& store, Rng& rng)
    : config_(config), store_(&store) {
  config_.validate();
  const auto d = config_.d;
  const auto h = config_.frame_hidden;
  const auto f = config_.frame_feature_len;
  // Token vectors start at unit scale so the mean over a sentence is not swamped by the bias.
  store.add_uniform("text.embedding", "text", {config_.vocab_size, d}, 1, rng);
  store.add_uniform("text.proj.w", "text", {d, d}, d, rng);
  store.add_uniform("text.proj.b", "text", {d}, d, rng);
  store.add_uniform("frame.l1.w", "frame", {f, h}, 16, rng);
  store.add_uniform("frame.l1.b", "frame", {h}, 16, rng);
  store.add_uniform("frame.l2.w", "frame", {h, d}, h, rng);
  store.add_uniform("frame.l2.b", "frame", {d}, h, rng);
  store.add_uniform("action.table", "action", {static_cast<std::size_t>(kNumActions), d}, 1, rng);
  store.add_uniform("map.w", "map", {config_.map_len(), d}, 32, rng);
  store.add_uniform("map.b", "map", {d}, 32, rng);
  store.add_uniform("pair.conv.w", "pair_fusion", {2, d, d}, 2 * d, rng);
  store.add_uniform("pair.conv.b", "pair_fusion", {d}, 2 * d, rng);
}

TextEncoding Encoders::encode_text(std::span<const int> tokens) const {
  if (tokens.empty()) throw std::invalid_argument("encode_text: empty token sequence");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] < 0 || static_cast<std::size_t>(tokens[i]) >= config_.vocab_size) {
      throw std::out_of_range("encode_text: token id " + std::to_string(tokens[i]) +
                              " at position " + std::to_string(i) + " is out of vocabulary");
    }
  }
  auto emb = ops::embedding(store_->get("text.embedding"), tokens);
  auto per_token =
      ops::add_row(ops::matmul(emb, store_->get("text.proj.w")), store_->get("text.proj.b"));
  auto rep = ops::l2_normalize(ops::mean(per_token, 0));
  return {per_token, rep};
}

Tensor Encoders::frame_mlp(const Tensor& obs) const {
  auto h = ops::gelu(
      ops::add_row(ops::matmul(obs, store_->get("frame.l1.w")), store_->get("frame.l1.b")));
  auto out = ops::add_row(ops::matmul(h, store_->get("frame.l2.w")), store_->get("frame.l2.b"));
  return ops::l2_normalize(out);
}

Tensor Encoders::encode_frame(std::span<const float> obs) const {
  if (obs.size() != config_.frame_feature_len) {
    throw ShapeError("encode_frame: observation of length " + std::to_string(obs.size()) +
                     ", expected " + std::to_string(config_.frame_feature_len));
  }
  auto x = Tensor::constant({1, obs.size()}, {obs.begin(), obs.end()});
  return ops::reshape(frame_mlp(x), {config_.d});
}

Tensor Encoders::encode_frames(const Tensor& obs) const {
  if (obs.rank() != 2 || obs.dim(1) != config_.frame_feature_len) {
    throw ShapeError("encode_frames: got " + shape_str(obs.shape()) + ", expected [n, " +
                     std::to_string(config_.frame_feature_len) + "]");
  }
  return frame_mlp(obs);
}

Tensor Encoders::embed_action(int id) const {
  const int ids[] = {id};
  return ops::reshape(embed_actions(ids), {config_.d});
}

Tensor Encoders::embed_actions(std::span<const int> ids) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= kNumActions) {
      throw std::out_of_range("embed_action: id " + std::to_string(ids[i]) + " at position " +
                              std::to_string(i) + " not in [0, 14)");
    }
  }
  return ops::l2_normalize(ops::embedding(store_->get("action.table"), ids));
}

Tensor Encoders::encode_map(std::span<const float> grid) const {
  if (grid.size() != config_.map_len()) {
    throw ShapeError("encode_map: grid of " + std::to_string(grid.size()) + " values, expected " +
                     shape_str({config_.map_channels, config_.map_extent, config_.map_extent}));
  }
  auto x = Tensor::constant({1, grid.size()}, {grid.begin(), grid.end()});
  return ops::reshape(encode_maps(x), {config_.d});
}

Tensor Encoders::encode_maps(const Tensor& grids) const {
  if (grids.rank() != 2 || grids.dim(1) != config_.map_len()) {
    throw ShapeError("encode_maps: got " + shape_str(grids.shape()) + ", expected [n, " +
                     std::to_string(config_.map_len()) + "]");
  }
  return ops::gelu(ops::add_row(ops::matmul(grids, store_->get("map.w")), store_->get("map.b")));
}

Tensor Encoders::fuse_frame_pair(const Tensor& e_t, const Tensor& e_t1) const {
  const Shape want{config_.d};
  if (e_t.shape() != want || e_t1.shape() != want) {
    throw ShapeError("fuse_frame_pair: inputs " + shape_str(e_t.shape()) + " and " +
                     shape_str(e_t1.shape()) + ", expected " + shape_str(want));
  }
  auto seq = ops::concat_rows<float>(
      {ops::reshape(e_t, {1, config_.d}), ops::reshape(e_t1, {1, config_.d})});
  auto conv = ops::conv1d(seq, store_->get("pair.conv.w"), store_->get("pair.conv.b"));
  return ops::l2_normalize(ops::global_average_pool(conv));
}

Tensor Encoders::fuse_frame_pairs(const Tensor& e_t, const Tensor& e_t1) const {
  if (e_t.rank() != 2 || e_t.shape() != e_t1.shape() || e_t.dim(1) != config_.d) {
    throw ShapeError("fuse_frame_pairs: inputs " + shape_str(e_t.shape()) + " and " +
                     shape_str(e_t1.shape()));
  }
  // A width-2 kernel over a length-2 sequence is one affine map of [e_t, e_t1].
  const auto d = config_.d;
  auto w = ops::reshape(store_->get("pair.conv.w"), {2 * d, d});
  auto stacked = ops::concat_cols<float>({e_t, e_t1});
  return ops::l2_normalize(ops::add_row(ops::matmul(stacked, w), store_->get("pair.conv.b")));
}

}  // namespace liam

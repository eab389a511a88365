#include "liam/fusion.hpp"

#include <cmath>
#include <stdexcept>

#include "liam/encoders.hpp"
#include "liam/ops.hpp"

namespace liam::fusion {

Modality Layout::modality(std::size_t index) const {
  if (index >= size()) throw std::out_of_range("token index outside layout");
  if (index < m) return Modality::language;
  return static_cast<Modality>(1 + (index - m) / n);
}

std::size_t Layout::step(std::size_t index) const {
  if (index < m) return index;
  return (index - m) % n;
}

std::size_t Layout::offset(Modality mod) const {
  if (mod == Modality::language) return 0;
  if (mod == Modality::map && !with_map) throw std::logic_error("layout has no map block");
  return m + (static_cast<std::size_t>(mod) - 1) * n;
}

CausalMask build_causal_mask(std::size_t m, std::size_t n, bool with_map) {
  if (m == 0 || n == 0) throw std::invalid_argument("build_causal_mask: m and n must be >= 1");
  CausalMask mask{{m, n, with_map}, {}};
  const auto& lay = mask.layout;
  const std::size_t s = lay.size();
  mask.allowed_flat.assign(s * s, 0);
  for (std::size_t i = 0; i < s; ++i) {
    const auto mi = lay.modality(i);
    for (std::size_t j = 0; j < s; ++j) {
      const auto mj = lay.modality(j);
      bool ok;
      if (mi == Modality::language) {
        ok = mj == Modality::language;
      } else if (mj == Modality::language) {
        ok = true;
      } else if (mj == Modality::action) {
        // The action at step t is the label predicted at t: strictly earlier only.
        ok = lay.step(j) < lay.step(i);
      } else {
        ok = lay.step(j) <= lay.step(i);
      }
      mask.allowed_flat[i * s + j] = ok ? 1 : 0;
    }
  }
  return mask;
}

std::string CausalMask::to_text() const {
  std::string out;
  const std::size_t s = size();
  out.reserve(s * (s + 1));
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) out.push_back(allowed(i, j) ? '1' : '.');
    out.push_back('\n');
  }
  return out;
}

std::vector<float> sinusoidal_encoding(std::size_t positions, std::size_t d) {
  std::vector<float> pe(positions * d);
  for (std::size_t p = 0; p < positions; ++p) {
    for (std::size_t i = 0; i < d; ++i) {
      const double expo = static_cast<double>(2 * (i / 2)) / static_cast<double>(d);
      const double angle = static_cast<double>(p) / std::pow(10000.0, expo);
      pe[p * d + i] = static_cast<float>(i % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  }
  return pe;
}

FusionModel::FusionModel(const FusionConfig& config, ParameterStore& store, Rng& rng)
    : config_(config), store_(&store) {
  const auto d = config_.d;
  if (config_.heads == 0 || d % config_.heads != 0) {
    throw std::invalid_argument("fusion: d must be divisible by the head count");
  }
  store.add_uniform("fusion.type", "modal_type", {4, d}, 1, rng);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = "fusion.l" + std::to_string(l) + ".";
    for (const char* w : {"wq", "wk", "wv", "wo"}) store.add_uniform(p + w, "fusion", {d, d}, d, rng);
    store.add(p + "ln.gamma", "fusion", {d}, std::vector<float>(d, 1.0f));
    store.add(p + "ln.beta", "fusion", {d}, std::vector<float>(d, 0.0f));
  }
  store.add_uniform("head.action.w", "heads", {d, static_cast<std::size_t>(kNumActions)}, d, rng);
  store.add_uniform("head.action.b", "heads", {static_cast<std::size_t>(kNumActions)}, d, rng);
  store.add_uniform("head.object.w", "heads", {d, static_cast<std::size_t>(kNumObjectLabels)}, d,
                    rng);
  store.add_uniform("head.object.b", "heads", {static_cast<std::size_t>(kNumObjectLabels)}, d, rng);
  store.add_uniform("head.gp.w", "heads", {d, 1}, d, rng);
  store.add_uniform("head.gp.b", "heads", {1}, d, rng);
}

Tensor FusionModel::apply_encodings(const Tensor& language, const Tensor& frames,
                                    const Tensor& actions, const std::optional<Tensor>& maps) const {
  const auto d = config_.d;
  auto check = [d](const Tensor& t, const char* what) {
    if (t.rank() != 2 || t.dim(1) != d) {
      throw ShapeError(std::string("apply_encodings: ") + what + " block " + shape_str(t.shape()) +
                       " is not [*, " + std::to_string(d) + "]");
    }
  };
  check(language, "language");
  check(frames, "frame");
  check(actions, "action");
  const std::size_t n = frames.dim(0);
  if (actions.dim(0) != n || (maps && maps->dim(0) != n)) {
    throw ShapeError("apply_encodings: frame/action/map lengths differ (" +
                     shape_str(frames.shape()) + ", " + shape_str(actions.shape()) +
                     (maps ? ", " + shape_str(maps->shape()) : std::string()) + ")");
  }
  if (maps) check(*maps, "map");

  const auto& types = store_->get("fusion.type");
  auto encode = [&](const Tensor& block, Modality mod) {
    const std::size_t len = block.dim(0);
    auto pos = Tensor::constant({len, d}, sinusoidal_encoding(len, d));
    auto type = ops::reshape(ops::slice_rows(types, static_cast<std::size_t>(mod),
                                             static_cast<std::size_t>(mod) + 1),
                             {d});
    return ops::add_row(ops::add(block, pos), type);
  };
  std::vector<Tensor> parts{encode(language, Modality::language), encode(frames, Modality::frame),
                            encode(actions, Modality::action)};
  if (maps) parts.push_back(encode(*maps, Modality::map));
  return ops::concat_rows(parts);
}

Tensor FusionModel::attention(const Tensor& x, const CausalMask& mask, std::size_t layer) const {
  const auto d = config_.d;
  const auto h = config_.heads;
  const auto dh = d / h;
  const std::string p = "fusion.l" + std::to_string(layer) + ".";
  auto q = ops::matmul(x, store_->get(p + "wq"));
  auto k = ops::matmul(x, store_->get(p + "wk"));
  auto v = ops::matmul(x, store_->get(p + "wv"));
  const float inv_sqrt = 1.0f / std::sqrt(static_cast<float>(dh));
  std::vector<Tensor> outs;
  outs.reserve(h);
  for (std::size_t head = 0; head < h; ++head) {
    const auto b = head * dh, e = b + dh;
    auto scores = ops::scale(ops::matmul(ops::slice_cols(q, b, e), ops::transpose(ops::slice_cols(k, b, e))),
                             inv_sqrt);
    auto weights = ops::masked_softmax(scores, std::span<const std::uint8_t>(mask.allowed_flat));
    outs.push_back(ops::matmul(weights, ops::slice_cols(v, b, e)));
  }
  auto merged = h == 1 ? outs.front() : ops::concat_cols(outs);
  return ops::matmul(merged, store_->get(p + "wo"));
}

Tensor FusionModel::fuse(const Tensor& encoded, const CausalMask& mask) const {
  if (encoded.rank() != 2 || encoded.dim(0) != mask.size() || encoded.dim(1) != config_.d) {
    throw ShapeError("fuse: sequence " + shape_str(encoded.shape()) + " vs mask of " +
                     std::to_string(mask.size()) + " tokens");
  }
  Tensor x = encoded;
  for (std::size_t l = 0; l < config_.layers; ++l) {
    const std::string p = "fusion.l" + std::to_string(l) + ".";
    auto normed = ops::layer_norm(attention(x, mask, l), store_->get(p + "ln.gamma"),
                                  store_->get(p + "ln.beta"));
    x = ops::add(normed, x);
  }
  return x;
}

HeadOutputs FusionModel::predict_heads(const Tensor& visual) const {
  if (visual.rank() != 2 || visual.dim(1) != config_.d) {
    throw ShapeError("predict_heads: visual rows " + shape_str(visual.shape()));
  }
  auto affine = [&](const char* w, const char* b) {
    return ops::add_row(ops::matmul(visual, store_->get(w)), store_->get(b));
  };
  return {affine("head.action.w", "head.action.b"), affine("head.object.w", "head.object.b"),
          ops::sigmoid(affine("head.gp.w", "head.gp.b"))};
}

Tensor slice_visual(const Tensor& fused, std::size_t m, std::size_t n) {
  if (fused.rank() != 2 || m + n > fused.dim(0) || n == 0) {
    throw ShapeError("slice_visual: m=" + std::to_string(m) + " n=" + std::to_string(n) +
                     " for " + shape_str(fused.shape()));
  }
  return ops::slice_rows(fused, m, m + n);
}

}  // namespace liam::fusion

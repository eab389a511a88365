#include <cmath>
#include <cstring>
#include <optional>

#include "doctest.h"
#include "liam/encoders.hpp"
#include "liam/fusion.hpp"
#include "liam/ops.hpp"

using namespace liam;
using namespace liam::fusion;

namespace {

Tensor random_block(std::size_t r, std::size_t c, Rng& rng) {
  std::vector<float> v(r * c);
  for (auto& x : v) x = rng.uniform(-1.0f, 1.0f);
  return Tensor::constant({r, c}, std::move(v));
}

struct Inputs {
  Tensor language, frames, actions, maps;
};

Inputs random_inputs(std::size_t m, std::size_t n, std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  return {random_block(m, d, rng), random_block(n, d, rng), random_block(n, d, rng),
          random_block(n, d, rng)};
}

Tensor run(const FusionModel& model, const Inputs& in, bool with_map = true) {
  const auto m = in.language.dim(0), n = in.frames.dim(0);
  auto enc = model.apply_encodings(in.language, in.frames, in.actions,
                                   with_map ? std::optional<Tensor>(in.maps) : std::nullopt);
  return model.fuse(enc, build_causal_mask(m, n, with_map));
}

bool rows_identical(const Tensor& a, const Tensor& b, std::size_t row) {
  const auto c = a.cols();
  return std::memcmp(a.data().data() + row * c, b.data().data() + row * c, c * sizeof(float)) == 0;
}

Tensor perturb_row(const Tensor& t, std::size_t row, float delta) {
  std::vector<float> v(t.data().begin(), t.data().end());
  for (std::size_t j = 0; j < t.cols(); ++j) v[row * t.cols() + j] += delta * static_cast<float>(j % 3 + 1);
  return Tensor::constant(t.shape(), std::move(v));
}

// Direct masked multi-head attention in double precision.
std::vector<double> attention_oracle(const Tensor& x, const ParameterStore& store, const CausalMask& mask,
                                     std::size_t heads) {
  const auto s = x.rows(), d = x.cols(), dh = d / heads;
  auto proj = [&](const char* name) {
    const auto& w = store.get(std::string("fusion.l0.") + name);
    std::vector<double> out(s * d, 0.0);
    for (std::size_t i = 0; i < s; ++i)
      for (std::size_t j = 0; j < d; ++j)
        for (std::size_t k = 0; k < d; ++k) out[i * d + j] += double(x.at(i, k)) * w.at(k * d + j);
    return out;
  };
  const auto q = proj("wq"), k = proj("wk"), v = proj("wv");
  std::vector<double> merged(s * d, 0.0);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < s; ++i) {
      std::vector<double> w(s, 0.0);
      double mx = -1e300;
      for (std::size_t j = 0; j < s; ++j) {
        if (!mask.allowed(i, j)) continue;
        double dot = 0;
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) dot += q[i * d + c] * k[j * d + c];
        w[j] = dot / std::sqrt(double(dh));
        mx = std::max(mx, w[j]);
      }
      double z = 0;
      for (std::size_t j = 0; j < s; ++j) {
        w[j] = mask.allowed(i, j) ? std::exp(w[j] - mx) : 0.0;
        z += w[j];
      }
      for (std::size_t j = 0; j < s; ++j)
        for (std::size_t c = h * dh; c < (h + 1) * dh; ++c) merged[i * d + c] += w[j] / z * v[j * d + c];
    }
  }
  const auto& wo = store.get("fusion.l0.wo");
  std::vector<double> out(s * d, 0.0);
  for (std::size_t i = 0; i < s; ++i)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) out[i * d + j] += merged[i * d + k] * wo.at(k * d + j);
  return out;
}

void set_identity(ParameterStore& store, const std::string& name, std::size_t d) {
  auto data = store.get(name).mutable_data();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) data[i * d + j] = i == j ? 1.0f : 0.0f;
}

}  // namespace

TEST_CASE("causal mask examples for m=2, n=2") {
  const auto mask = build_causal_mask(2, 2);
  CHECK(mask.size() == 8);
  auto allowed_set = [&](std::size_t row) {
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < 8; ++j)
      if (mask.allowed(row, j)) cols.push_back(j);
    return cols;
  };
  CHECK(allowed_set(3) == std::vector<std::size_t>{0, 1, 2, 3, 4, 6, 7});
  CHECK(allowed_set(0) == std::vector<std::size_t>{0, 1});
  CHECK(allowed_set(6) == std::vector<std::size_t>{0, 1, 2, 6});
  CHECK(allowed_set(4) == std::vector<std::size_t>{0, 1, 2, 6});
  CHECK_THROWS_AS(build_causal_mask(0, 2), std::invalid_argument);
  CHECK_THROWS_AS(build_causal_mask(2, 0), std::invalid_argument);
  CHECK(mask.to_text().substr(0, 9) == "11......\n");
}

TEST_CASE("causal mask rules hold for every (m, n) up to 6") {
  for (std::size_t m = 1; m <= 6; ++m) {
    for (std::size_t n = 1; n <= 6; ++n) {
      for (bool with_map : {true, false}) {
        const auto mask = build_causal_mask(m, n, with_map);
        const auto& lay = mask.layout;
        CHECK(mask.size() == m + (with_map ? 3 : 2) * n);
        for (std::size_t i = 0; i < mask.size(); ++i) {
          bool any = false;
          for (std::size_t j = 0; j < mask.size(); ++j) {
            any = any || mask.allowed(i, j);
            const bool lang_i = i < m, lang_j = j < m;
            bool expect;
            if (lang_i) {
              expect = lang_j;
            } else if (lang_j) {
              expect = true;
            } else {
              const std::size_t ti = (i - m) % n, tj = (j - m) % n;
              const bool action_col = (j - m) / n == 1;
              expect = action_col ? tj < ti : tj <= ti;
            }
            CHECK(mask.allowed(i, j) == expect);
          }
          CHECK(any);
        }
        (void)lay;
      }
    }
  }
}

TEST_CASE("sinusoidal encoding") {
  const auto pe = sinusoidal_encoding(3, 8);
  for (std::size_t i = 0; i < 8; ++i) CHECK(pe[i] == (i % 2 == 0 ? 0.0f : 1.0f));
  CHECK(pe[8 + 0] == doctest::Approx(std::sin(1.0)));
  CHECK(pe[8 + 3] == doctest::Approx(std::cos(1.0 / std::pow(10000.0, 2.0 / 8))));
}

TEST_CASE("apply_encodings: length, zero model gives positional table, shape errors") {
  ParameterStore store;
  Rng rng(1);
  FusionModel model({8, 2, 1}, store, rng);
  for (auto& x : store.get("fusion.type").mutable_data()) x = 0.0f;
  const auto zl = Tensor::zeros({2, 8}), zn = Tensor::zeros({3, 8});
  const auto enc = model.apply_encodings(zl, zn, zn, zn);
  CHECK(enc.shape() == Shape{11, 8});
  const auto pe2 = sinusoidal_encoding(2, 8), pe3 = sinusoidal_encoding(3, 8);
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(enc.at(1, j) == pe2[8 + j]);
    CHECK(enc.at(2 + 2, j) == pe3[16 + j]);
    CHECK(enc.at(2 + 3 + 1, j) == pe3[8 + j]);
    CHECK(enc.at(2 + 6 + 0, j) == pe3[j]);
  }
  const auto vis = slice_visual(enc, 2, 3);
  CHECK(vis.shape() == Shape{3, 8});
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t j = 0; j < 8; ++j) CHECK(vis.at(r, j) == enc.at(2 + r, j));
  CHECK(slice_visual(enc, 2, 1).shape() == Shape{1, 8});
  CHECK_THROWS_AS(model.apply_encodings(zl, zn, Tensor::zeros({2, 8}), zn), ShapeError);
  CHECK_THROWS_AS(model.apply_encodings(zl, zn, zn, Tensor::zeros({3, 7})), ShapeError);
  CHECK(model.apply_encodings(zl, zn, zn, std::nullopt).dim(0) == 8);
}

TEST_CASE("type vectors are added per modality") {
  ParameterStore store;
  Rng rng(2);
  FusionModel model({4, 1, 1}, store, rng);
  const auto zl = Tensor::zeros({1, 4}), zn = Tensor::zeros({1, 4});
  const auto enc = model.apply_encodings(zl, zn, zn, zn);
  const auto& type = store.get("fusion.type");
  const auto pe = sinusoidal_encoding(1, 4);
  for (std::size_t mod = 0; mod < 4; ++mod)
    for (std::size_t j = 0; j < 4; ++j)
      CHECK(enc.at(mod, j) == doctest::Approx(pe[j] + type.at(mod * 4 + j)));
}

TEST_CASE("attention matches a direct oracle") {
  SUBCASE("single head, identity projections, all-true mask: uniform averaging") {
    ParameterStore store;
    Rng rng(3);
    FusionModel model({4, 1, 1}, store, rng);
    for (const char* w : {"wq", "wk", "wv", "wo"}) set_identity(store, std::string("fusion.l0.") + w, 4);
    for (auto& x : store.get("fusion.l0.wk").mutable_data()) x = 0.0f;  // equal scores
    CausalMask mask{{1, 1, true}, std::vector<std::uint8_t>(16, 1)};
    Rng data_rng(5);
    const auto x = random_block(4, 4, data_rng);
    const auto out = model.attention(x, mask, 0);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) {
        double avg = 0;
        for (std::size_t r = 0; r < 4; ++r) avg += x.at(r, j) / 4.0;
        CHECK(out.at(i, j) == doctest::Approx(avg).epsilon(1e-6));
      }
  }
  SUBCASE("random weights, causal mask, several heads") {
    for (std::size_t heads : {1u, 2u, 4u}) {
      ParameterStore store;
      Rng rng(10 + heads);
      FusionModel model({8, heads, 1}, store, rng);
      const auto mask = build_causal_mask(2, 3);
      Rng data_rng(20 + heads);
      const auto x = random_block(mask.size(), 8, data_rng);
      const auto out = model.attention(x, mask, 0);
      const auto ref = attention_oracle(x, store, mask, heads);
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(out.at(i) == doctest::Approx(ref[i]).epsilon(1e-5));
    }
  }
}

TEST_CASE("blocked columns get exactly zero attention weight") {
  const auto mask = build_causal_mask(2, 3);
  Rng rng(4);
  const auto scores = random_block(mask.size(), mask.size(), rng);
  const auto w = ops::masked_softmax(scores, std::span<const std::uint8_t>(mask.allowed_flat));
  for (std::size_t i = 0; i < mask.size(); ++i)
    for (std::size_t j = 0; j < mask.size(); ++j)
      if (!mask.allowed(i, j)) CHECK(w.at(i, j) == 0.0f);
}

TEST_CASE("fuse: zero layers is identity, recurrence order") {
  ParameterStore store;
  Rng rng(6);
  FusionModel none({8, 2, 0}, store, rng);
  const auto in = random_inputs(2, 3, 8, 1);
  const auto enc = none.apply_encodings(in.language, in.frames, in.actions, in.maps);
  const auto out = none.fuse(enc, build_causal_mask(2, 3));
  CHECK(std::memcmp(out.data().data(), enc.data().data(), enc.size() * sizeof(float)) == 0);
  CHECK_THROWS_AS(none.fuse(enc, build_causal_mask(2, 2)), ShapeError);

  ParameterStore s1;
  Rng r1(7);
  FusionModel one({8, 2, 1}, s1, r1);
  const auto mask = build_causal_mask(2, 3);
  const auto enc1 = one.apply_encodings(in.language, in.frames, in.actions, in.maps);
  const auto expect =
      ops::add(ops::layer_norm(one.attention(enc1, mask, 0), s1.get("fusion.l0.ln.gamma"), s1.get("fusion.l0.ln.beta")), enc1);
  const auto got = one.fuse(enc1, mask);
  CHECK(std::memcmp(got.data().data(), expect.data().data(), got.size() * sizeof(float)) == 0);
}

TEST_CASE("heads: biases at zero input, shapes, goal progress range, row permutation") {
  ParameterStore store;
  Rng rng(8);
  FusionModel model({8, 2, 2}, store, rng);
  const auto zero = model.predict_heads(Tensor::zeros({5, 8}));
  CHECK(zero.action_logits.shape() == Shape{5, 14});
  CHECK(zero.object_logits.shape() == Shape{5, 85});
  CHECK(zero.goal_progress.shape() == Shape{5, 1});
  for (std::size_t t = 0; t < 5; ++t) {
    for (std::size_t c = 0; c < 14; ++c) CHECK(zero.action_logits.at(t, c) == store.get("head.action.b").at(c));
    for (std::size_t c = 0; c < 85; ++c) CHECK(zero.object_logits.at(t, c) == store.get("head.object.b").at(c));
  }
  Rng data_rng(9);
  const auto big = ops::scale(random_block(6, 8, data_rng), 50.0f);
  const auto out = model.predict_heads(big);
  for (std::size_t t = 0; t < 6; ++t) {
    CHECK(out.goal_progress.at(t) >= 0.0f);
    CHECK(out.goal_progress.at(t) <= 1.0f);
  }
  const auto small = model.predict_heads(random_block(6, 8, data_rng));
  for (std::size_t t = 0; t < 6; ++t) {
    CHECK(small.goal_progress.at(t) > 0.0f);
    CHECK(small.goal_progress.at(t) < 1.0f);
  }

  const auto x = random_block(4, 8, data_rng);
  const std::size_t perm[] = {3, 0, 2, 1};
  std::vector<float> px;
  for (auto p : perm)
    for (std::size_t j = 0; j < 8; ++j) px.push_back(x.at(p, j));
  const auto a = model.predict_heads(x);
  const auto b = model.predict_heads(Tensor::constant({4, 8}, px));
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t c = 0; c < 14; ++c) CHECK(b.action_logits.at(r, c) == a.action_logits.at(perm[r], c));
}

TEST_CASE("no future leakage: action row t is bit-identical under later perturbations") {
  ParameterStore store;
  Rng rng(11);
  FusionModel model({16, 4, 2}, store, rng);
  const std::size_t m = 3, n = 5;
  for (bool with_map : {true, false}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto in = random_inputs(m, n, 16, 100 + seed);
      const auto base = model.predict_heads(slice_visual(run(model, in, with_map), m, n)).action_logits;
      for (std::size_t t = 0; t < n; ++t) {
        for (std::size_t s = 0; s < n; ++s) {
          Inputs p = in;
          if (s > t) p.frames = perturb_row(in.frames, s, 3.0f);
          if (s > t && with_map) p.maps = perturb_row(in.maps, s, -2.0f);
          if (s >= t) p.actions = perturb_row(in.actions, s, 5.0f);
          const auto got = model.predict_heads(slice_visual(run(model, p, with_map), m, n)).action_logits;
          CHECK(rows_identical(base, got, t));
        }
      }
      // Sanity: earlier inputs do reach later rows.
      Inputs p = in;
      p.actions = perturb_row(in.actions, 0, 5.0f);
      const auto got = model.predict_heads(slice_visual(run(model, p, with_map), m, n)).action_logits;
      CHECK_FALSE(rows_identical(base, got, n - 1));
      CHECK(rows_identical(base, got, 0));
    }
  }
}

TEST_CASE("language rows are isolated from temporal tokens") {
  ParameterStore store;
  Rng rng(12);
  FusionModel model({16, 4, 2}, store, rng);
  const auto in = random_inputs(4, 3, 16, 77);
  const auto base = run(model, in);
  Inputs p = in;
  p.frames = perturb_row(in.frames, 0, 4.0f);
  p.actions = perturb_row(in.actions, 1, 4.0f);
  p.maps = perturb_row(in.maps, 2, 4.0f);
  const auto got = run(model, p);
  for (std::size_t r = 0; r < 4; ++r) CHECK(rows_identical(base, got, r));
  CHECK_FALSE(rows_identical(base, got, 4));
}

TEST_CASE("fusion parameter groups") {
  ParameterStore store;
  Rng rng(13);
  FusionModel model({8, 2, 2}, store, rng);
  const auto groups = store.groups();
  for (const char* g : {"modal_type", "fusion", "heads"}) CHECK(groups.count(g) == 1);
  CHECK(store.get("fusion.type").shape() == Shape{4, 8});
  CHECK_THROWS_AS(FusionModel({8, 3, 1}, store, rng), std::invalid_argument);
}

#include <cmath>
#include <cstring>

#include "doctest.h"
#include "liam/encoders.hpp"
#include "liam/ops.hpp"

using namespace liam;

namespace {

EncoderConfig small_config() {
  EncoderConfig c;
  c.d = 8;
  c.vocab_size = 20;
  c.frame_feature_len = 12;
  c.frame_hidden = 16;
  c.map_channels = 2;
  c.map_extent = 3;
  return c;
}

struct Fixture {
  ParameterStore store;
  Rng rng{7};
  Encoders enc{small_config(), store, rng};
};

double norm(const Tensor& t) {
  double s = 0;
  for (float v : t.data()) s += double(v) * v;
  return std::sqrt(s);
}

bool same(const Tensor& a, const Tensor& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

std::vector<float> random_obs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = rng.uniform() < 0.3 ? 1.0f : 0.0f;
  return v;
}

}  // namespace

TEST_CASE("config invariants: 14 actions and 85 object labels") {
  auto c = small_config();
  CHECK_NOTHROW(c.validate());
  c.num_actions = 13;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = small_config();
  c.num_objects = 84;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  Fixture f;
  CHECK(f.store.get("action.table").dim(0) == 14);
}

TEST_CASE("encode_text: repeated token, errors, permutation invariance, determinism") {
  Fixture f;
  const int rep[] = {5, 5, 5};
  const int one[] = {5};
  const auto r3 = f.enc.encode_text(rep).sequence_rep, r1 = f.enc.encode_text(one).sequence_rep;
  for (std::size_t i = 0; i < 8; ++i) CHECK(r3.at(i) == doctest::Approx(r1.at(i)).epsilon(1e-6));
  CHECK_THROWS_AS(f.enc.encode_text(std::span<const int>()), std::invalid_argument);
  const int bad[] = {1, 2, 20};
  try {
    f.enc.encode_text(bad);
    FAIL("expected out_of_range");
  } catch (const std::out_of_range& e) {
    CHECK(std::string(e.what()).find("position 2") != std::string::npos);
  }
  const int a[] = {1, 2, 3, 4};
  const int b[] = {4, 1, 3, 2};
  const auto ra = f.enc.encode_text(a), rb = f.enc.encode_text(b);
  for (std::size_t i = 0; i < 8; ++i)
    CHECK(ra.sequence_rep.at(i) == doctest::Approx(rb.sequence_rep.at(i)).epsilon(1e-6));
  CHECK(ra.per_token.rows() == 4);
  CHECK(norm(ra.sequence_rep) == doctest::Approx(1.0).epsilon(1e-6));

  Fixture g;
  CHECK(same(g.enc.encode_text(a).sequence_rep, ra.sequence_rep));
}

TEST_CASE("encode_frame: zero input, purity, sensitivity, length check") {
  Fixture f;
  const std::vector<float> zero(12, 0.0f);
  const auto z = f.enc.encode_frame(zero);
  CHECK(norm(z) == doctest::Approx(1.0).epsilon(1e-6));
  const auto obs = random_obs(12, 3);
  CHECK(same(f.enc.encode_frame(obs), f.enc.encode_frame(obs)));
  auto flipped = obs;
  flipped[4] = 1.0f - flipped[4];
  CHECK_FALSE(same(f.enc.encode_frame(obs), f.enc.encode_frame(flipped)));
  CHECK_THROWS_AS(f.enc.encode_frame(std::vector<float>(11)), ShapeError);
}

TEST_CASE("embed_action: rows, distinctness, bounds") {
  Fixture f;
  CHECK(same(f.enc.embed_action(0), f.enc.embed_action(0)));
  for (int i = 0; i < 14; ++i) {
    CHECK(norm(f.enc.embed_action(i)) == doctest::Approx(1.0).epsilon(1e-6));
    for (int j = i + 1; j < 14; ++j) CHECK_FALSE(same(f.enc.embed_action(i), f.enc.embed_action(j)));
  }
  CHECK_THROWS_AS(f.enc.embed_action(14), std::out_of_range);
  CHECK_THROWS_AS(f.enc.embed_action(-1), std::out_of_range);
}

TEST_CASE("encode_map: zero grid is GELU(bias); not scale invariant") {
  Fixture f;
  const std::vector<float> zero(18, 0.0f);
  const auto out = f.enc.encode_map(zero);
  const auto& b = f.store.get("map.b");
  for (std::size_t i = 0; i < 8; ++i) {
    const double x = b.at(i);
    CHECK(out.at(i) == doctest::Approx(0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0)))).epsilon(1e-6));
  }
  Rng rng(4);
  std::vector<float> grid(18), twice(18);
  for (std::size_t i = 0; i < 18; ++i) {
    grid[i] = rng.uniform(-1.0f, 1.0f);
    twice[i] = 2.0f * grid[i];
  }
  const auto g1 = f.enc.encode_map(grid), g2 = f.enc.encode_map(twice);
  double diff = 0;
  for (std::size_t i = 0; i < 8; ++i) diff += std::abs(2.0 * g1.at(i) - g2.at(i));
  CHECK(diff > 1e-3);
  CHECK_THROWS_AS(f.enc.encode_map(std::vector<float>(17)), ShapeError);
}

TEST_CASE("fuse_frame_pair: unit norm, sensitivity, order awareness, batched agreement") {
  Fixture f;
  const auto u = f.enc.encode_frame(random_obs(12, 10));
  const auto v = f.enc.encode_frame(random_obs(12, 11));
  const auto uu = f.enc.fuse_frame_pair(u, u);
  const auto uv = f.enc.fuse_frame_pair(u, v);
  const auto vu = f.enc.fuse_frame_pair(v, u);
  CHECK(same(uu, f.enc.fuse_frame_pair(u, u)));
  CHECK_FALSE(same(uu, uv));
  CHECK_FALSE(same(uv, vu));
  CHECK(std::abs(norm(uv) - 1.0) < 1e-6);
  CHECK_THROWS_AS(f.enc.fuse_frame_pair(u, Tensor::zeros({7})), ShapeError);

  auto rows_u = ops::concat_rows<float>({ops::reshape(u, {1, 8}), ops::reshape(v, {1, 8})});
  auto rows_v = ops::concat_rows<float>({ops::reshape(v, {1, 8}), ops::reshape(u, {1, 8})});
  const auto batched = f.enc.fuse_frame_pairs(rows_u, rows_v);
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(batched.at(0, i) == doctest::Approx(uv.at(i)).epsilon(1e-5));
    CHECK(batched.at(1, i) == doctest::Approx(vu.at(i)).epsilon(1e-5));
  }
}

TEST_CASE("encoder groups are registered for freezing") {
  Fixture f;
  const auto groups = f.store.groups();
  for (const char* g : {"text", "frame", "action", "map", "pair_fusion"}) CHECK(groups.count(g) == 1);
}

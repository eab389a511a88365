#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "liam/contrastive.hpp"
#include "liam/ops.hpp"
#include "liam/params.hpp"

using namespace liam;
using namespace liam::contrastive;

namespace {

Tensor64 random_rows(std::size_t r, std::size_t c, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<double> v(r * c);
  for (auto& x : v) x = scale * (2.0 * rng.uniform() - 1.0);
  return Tensor64::constant({r, c}, std::move(v));
}

// Independent evaluation of the image-action loss straight from its definition.
double oracle_image_action(const std::vector<double>& s, std::size_t n, std::size_t u,
                           const std::vector<int>& col_of_row) {
  double row_term = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double mx = -1e300, z = 0;
    for (std::size_t j = 0; j < u; ++j) mx = std::max(mx, s[i * u + j]);
    for (std::size_t j = 0; j < u; ++j) z += std::exp(s[i * u + j] - mx);
    const double logp = s[i * u + col_of_row[i]] - mx - std::log(z);
    row_term += -logp / n;  // KL(one-hot || p) = -log p
  }
  double col_term = 0;
  for (std::size_t j = 0; j < u; ++j) {
    double mx = -1e300, z = 0;
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, s[i * u + j]);
    for (std::size_t i = 0; i < n; ++i) z += std::exp(s[i * u + j] - mx);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) k += col_of_row[i] == static_cast<int>(j);
    for (std::size_t i = 0; i < n; ++i) {
      if (col_of_row[i] != static_cast<int>(j)) continue;
      const double q = 1.0 / k;
      const double logp = s[i * u + j] - mx - std::log(z);
      col_term += q * (std::log(q) - logp) / u;
    }
  }
  return 0.5 * (row_term + col_term);
}

}  // namespace

TEST_CASE("affinity targets: spec examples") {
  const int ids[] = {2, 5, 2, 7};
  const auto q = build_affinity_targets(ids);
  CHECK(q.unique_actions == std::vector<int>{2, 5, 7});
  CHECK(q.dense() == std::vector<double>{1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 0, 1});

  const int same_ids[] = {4, 4, 4};
  const auto q1 = build_affinity_targets(same_ids);
  CHECK(q1.cols() == 1);
  CHECK(q1.dense() == std::vector<double>{1, 1, 1});

  const int distinct[] = {3, 0, 9};
  const auto qi = build_affinity_targets(distinct);
  CHECK(qi.dense() == std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1});

  CHECK_THROWS_AS(build_affinity_targets(std::span<const int>()), std::invalid_argument);
  const int bad[] = {1, 14};
  CHECK_THROWS_AS(build_affinity_targets(bad), std::invalid_argument);
}

TEST_CASE("affinity rows are one-hot and U is bounded") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(seed);
    std::vector<int> ids(2 + rng.index(40));
    for (auto& i : ids) i = static_cast<int>(rng.index(12));
    const auto q = build_affinity_targets(ids);
    CHECK(q.cols() >= 1);
    CHECK(q.cols() <= std::min<std::size_t>(ids.size(), 12));
    const auto d = q.dense();
    for (std::size_t r = 0; r < q.rows(); ++r) {
      double s = 0;
      for (std::size_t c = 0; c < q.cols(); ++c) s += d[r * q.cols() + c];
      CHECK(s == 1.0);
      CHECK(q.unique_actions[q.column_of_row[r]] == ids[r]);
    }
  }
}

TEST_CASE("similarity logits examples") {
  auto v = Tensor64::constant({1, 2}, {0.6, 0.8});
  auto w = Tensor64::constant({1, 2}, {-0.8, 0.6});
  CHECK(similarity_logits(v, v, Tensor64::scalar(1.0)).item() == doctest::Approx(1.0));
  CHECK(similarity_logits(v, w, Tensor64::scalar(1.0)).item() == doctest::Approx(0.0));
  CHECK(similarity_logits(v, v, Tensor64::scalar(0.07)).item() == doctest::Approx(1.0 / 0.07));
  CHECK(1.0 / 0.07 == doctest::Approx(14.29).epsilon(1e-3));
}

TEST_CASE("image-action loss matches an independent evaluation") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::vector<int> ids(2 + rng.index(10));
    for (auto& i : ids) i = static_cast<int>(rng.index(6));
    const auto q = build_affinity_targets(ids);
    auto logits = random_rows(q.rows(), q.cols(), seed + 1000, 3.0);
    const double got = loss_image_action(logits, q).item();
    const std::vector<double> s(logits.data().begin(), logits.data().end());
    CHECK(got == doctest::Approx(oracle_image_action(s, q.rows(), q.cols(), q.column_of_row)).epsilon(1e-12));
  }
}

TEST_CASE("image-action loss: limits and the uniform value") {
  const int ids[] = {0, 1, 2, 3};
  const auto q = build_affinity_targets(ids);
  double prev = 1e9;
  for (double scale : {1.0, 5.0, 20.0, 80.0}) {
    std::vector<double> eye(16, 0.0);
    for (int i = 0; i < 4; ++i) eye[i * 5] = scale;
    const double l = loss_image_action(Tensor64::constant({4, 4}, eye), q).item();
    CHECK(l < prev);
    prev = l;
  }
  CHECK(prev < 1e-6);

  // Uniform P over U = 3 columns with one-hot rows: per-row KL is ln 3. Three
  // distinct actions make the column direction uniform over 3 rows as well.
  const int three[] = {1, 2, 3};
  const auto q3 = build_affinity_targets(three);
  const double l = loss_image_action(Tensor64::constant({3, 3}, std::vector<double>(9, 0.4)), q3).item();
  CHECK(l == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("KL with one-hot targets equals cross-entropy within 1e-9") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto logits = random_rows(5, 7, seed, 4.0);
    std::vector<double> onehot(35, 0.0);
    for (std::size_t r = 0; r < 5; ++r) onehot[r * 7 + (r * 3 + seed) % 7] = 1.0;
    const auto t = Tensor64::constant({5, 7}, onehot);
    const auto w = ops::mean_weights<double>(5);
    const double kl = ops::kl_divergence(logits, t, std::span<const double>(w)).item();
    const double ce = ops::cross_entropy(logits, t, std::span<const double>(w)).item();
    CHECK(std::abs(kl - ce) < 1e-9);
  }
}

TEST_CASE("text-image loss: limits, uniform value, permutation symmetry, batch size") {
  auto a = ops::l2_normalize(random_rows(2, 6, 1));
  auto b = ops::l2_normalize(random_rows(2, 6, 2));
  auto strong = loss_text_image(a, a, Tensor64::scalar(0.01)).item();
  CHECK(strong < 1e-3);

  auto same = Tensor64::constant({3, 2}, {1, 0, 1, 0, 1, 0});
  CHECK(loss_text_image(same, same, Tensor64::scalar(1.0)).item() ==
        doctest::Approx(std::log(3.0)).epsilon(1e-12));

  auto t = ops::l2_normalize(random_rows(4, 5, 3));
  auto s = ops::l2_normalize(random_rows(4, 5, 4));
  const double base = loss_text_image(t, s, Tensor64::scalar(0.3)).item();
  const std::size_t perm[] = {2, 0, 3, 1};
  std::vector<double> tp, sp;
  for (auto p : perm) {
    for (std::size_t j = 0; j < 5; ++j) {
      tp.push_back(t.at(p, j));
      sp.push_back(s.at(p, j));
    }
  }
  const double permuted =
      loss_text_image(Tensor64::constant({4, 5}, tp), Tensor64::constant({4, 5}, sp), Tensor64::scalar(0.3)).item();
  CHECK(permuted == doctest::Approx(base).epsilon(1e-12));

  auto one = ops::l2_normalize(random_rows(1, 5, 5));
  CHECK_THROWS_AS(loss_text_image(one, one, Tensor64::scalar(1.0)), std::invalid_argument);
  (void)b;
}

TEST_CASE("triple loss weighting") {
  CHECK(loss_triple(1.0, 2.0, 0.8) == doctest::Approx(1.8));
  CHECK(loss_triple(1.0, 2.0, 0.0) == 1.0);
  CHECK(loss_triple(1.0, 2.0, 1.0) == 2.0);
  CHECK_THROWS_AS(loss_triple(1.0, 2.0, 1.1), std::invalid_argument);
  CHECK_THROWS_AS(loss_triple(1.0, 2.0, -0.1), std::invalid_argument);
  CHECK(loss_triple(Tensor64::scalar(1.0), Tensor64::scalar(2.0), 0.8).item() == doctest::Approx(1.8));
}

TEST_CASE("temperature clamp") {
  CHECK(clamp_temperature(150) == 100);
  CHECK(clamp_temperature(0.001) == 0.01);
  CHECK(clamp_temperature(0.07) == 0.07);
  CHECK(kTauInit == 0.07);
  const float lo = clamp_stored_temperature(1e-6f), hi = clamp_stored_temperature(1e6f);
  CHECK(static_cast<double>(lo) >= kTauMin);
  CHECK(static_cast<double>(lo) - kTauMin < 1e-9);
  CHECK(static_cast<double>(hi) <= kTauMax);
  CHECK(hi == 100.0f);
  CHECK(clamp_stored_temperature(0.07f) == 0.07f);
}

TEST_CASE("matching accuracy: ties, identity, chance level") {
  const float eye[] = {5, 0, 0, 0, 5, 0, 0, 0, 5};
  const int targets[] = {0, 1, 2};
  CHECK(matching_accuracy(eye, 3, 3, targets) == 1.0);
  const float tie[] = {1, 1, 0};
  CHECK(argmax(tie) == 0);

  Rng rng(99);
  std::size_t hits = 0, rows = 0;
  for (int b = 0; b < 500; ++b) {
    std::vector<float> logits(14 * 14);
    for (auto& x : logits) x = rng.uniform(-1.0f, 1.0f);
    std::vector<int> t(14);
    for (int i = 0; i < 14; ++i) t[i] = i;
    hits += static_cast<std::size_t>(matching_accuracy(logits, 14, 14, t) * 14 + 0.5);
    rows += 14;
  }
  const double acc = double(hits) / rows, p = 1.0 / 14;
  CHECK(std::abs(acc - p) < 3 * std::sqrt(p * (1 - p) / rows));
}

TEST_CASE("probability normalization and sharpening properties") {
  for (double tau : {0.01, 0.07, 1.0, 100.0}) {
    auto rows = ops::l2_normalize(random_rows(5, 4, 7));
    auto cols = ops::l2_normalize(random_rows(3, 4, 8));
    auto s = similarity_logits(rows, cols, Tensor64::scalar(tau));
    auto p_i2a = ops::softmax(s);
    auto p_a2i = ops::softmax(ops::transpose(s));
    for (std::size_t r = 0; r < 5; ++r) {
      double sum = 0;
      for (std::size_t c = 0; c < 3; ++c) sum += p_i2a.at(r, c);
      CHECK(std::abs(sum - 1) < 1e-6);
    }
    for (std::size_t c = 0; c < 3; ++c) {
      double sum = 0;
      for (std::size_t r = 0; r < 5; ++r) sum += p_a2i.at(c, r);
      CHECK(std::abs(sum - 1) < 1e-6);
    }
  }
  auto row = Tensor64::constant({1, 4}, {0.9, 0.1, -0.3, 0.4});
  auto at = [&](double tau) { return ops::softmax(ops::scale(row, 1.0 / tau)).at(0); };
  CHECK(at(0.035) > at(0.07));
}

TEST_CASE("losses are invariant to the scale of embeddings before normalization") {
  const int ids[] = {0, 3, 0, 5};
  const auto q = build_affinity_targets(ids);
  auto r = random_rows(4, 6, 20), c = random_rows(3, 6, 21);
  auto tau = Tensor64::scalar(0.2);
  const double base = loss_image_action(similarity_logits(ops::l2_normalize(r), ops::l2_normalize(c), tau), q).item();
  const double scaled = loss_image_action(
      similarity_logits(ops::l2_normalize(ops::scale(r, 7.5)), ops::l2_normalize(ops::scale(c, 0.2)), tau), q).item();
  CHECK(scaled == doctest::Approx(base).epsilon(1e-12));
  const double ti = loss_text_image(ops::l2_normalize(r), ops::l2_normalize(ops::scale(r, 3.0)), tau).item();
  const double ti2 = loss_text_image(ops::l2_normalize(ops::scale(r, 0.5)), ops::l2_normalize(r), tau).item();
  CHECK(ti == doctest::Approx(ti2).epsilon(1e-12));
}

#include "liam/evaluate.hpp"

#include <algorithm>
#include <stdexcept>

#include "liam/contrastive.hpp"
#include "liam/metrics.hpp"
#include "liam/ops.hpp"

namespace liam {

std::vector<PairRef> collect_pairs(const std::vector<world::Episode>& episodes,
                                   std::size_t seq_cap) {
  std::vector<PairRef> out;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    const auto& ep = episodes[e];
    const auto len = std::min(ep.length(), seq_cap);
    for (std::size_t t = 0; t + 1 < len; ++t) {
      const int a = ep.actions[t];
      if (a >= 0 && a < kNumMotorActions) out.push_back({e, t, a});
    }
  }
  return out;
}

Tensor pair_representations(const LiamModel& model, const std::vector<world::Episode>& episodes,
                            std::span<const PairRef> refs) {
  if (refs.empty()) throw std::invalid_argument("pair_representations: empty batch");
  const auto n = refs.size();
  const auto f = episodes[refs[0].episode].frames[0].size();
  // Rows 0..n-1 hold frame t, rows n..2n-1 frame t + 1, so one encoder pass serves both.
  std::vector<float> data(2 * n * f);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ep = episodes.at(refs[i].episode);
    const auto& a = ep.frames.at(refs[i].t);
    const auto& b = ep.frames.at(refs[i].t + 1);
    std::copy(a.begin(), a.end(), data.begin() + static_cast<std::ptrdiff_t>(i * f));
    std::copy(b.begin(), b.end(), data.begin() + static_cast<std::ptrdiff_t>((n + i) * f));
  }
  auto emb = model.encoders().encode_frames(Tensor::constant({2 * n, f}, std::move(data)));
  return model.encoders().fuse_frame_pairs(ops::slice_rows(emb, 0, n),
                                           ops::slice_rows(emb, n, 2 * n));
}

Tensor sequence_representation(const LiamModel& model, const world::Episode& ep,
                               std::size_t seq_cap) {
  const auto len = std::min(ep.length(), seq_cap);
  auto emb = model.encoders().encode_frames(LiamModel::frame_matrix(ep, 0, len));
  return ops::l2_normalize(ops::mean(emb, 0));
}

namespace {

Tensor stack(const std::vector<Tensor>& rows) {
  std::vector<Tensor> parts;
  parts.reserve(rows.size());
  for (const auto& r : rows) parts.push_back(ops::reshape(r, {1, r.size()}));
  return ops::concat_rows(parts);
}

}  // namespace

MatchingResult evaluate_i2a(const LiamModel& model, const std::vector<world::Episode>& episodes,
                            std::size_t num_pairs, std::uint64_t seed) {
  const auto pairs = collect_pairs(episodes);
  std::vector<std::vector<std::size_t>> by_class(kNumMotorActions);
  for (std::size_t i = 0; i < pairs.size(); ++i) by_class[pairs[i].action].push_back(i);
  std::vector<int> classes;
  for (int c = 0; c < kNumMotorActions; ++c)
    if (!by_class[c].empty()) classes.push_back(c);
  if (classes.size() < 2) {
    throw std::invalid_argument("evaluate_i2a: held-out pool has fewer than 2 action classes");
  }
  const auto u = classes.size();
  const auto batches = (num_pairs + u - 1) / u;
  std::vector<std::size_t> hits(batches, 0);
  const auto action_table = [&] {
    ad::NoGradGuard ng;
    return model.encoders().embed_actions(classes);
  }();

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t bi = 0; bi < static_cast<std::ptrdiff_t>(batches); ++bi) {
    ad::NoGradGuard ng;
    const auto b = static_cast<std::size_t>(bi);
    Rng rng(mix_seed(seed, b));
    std::vector<PairRef> refs;
    for (int c : classes) refs.push_back(pairs[by_class[c][rng.index(by_class[c].size())]]);
    auto reps = pair_representations(model, episodes, refs);
    auto logits = contrastive::similarity_logits(reps, action_table, model.tau_ia());
    std::vector<int> target(u);
    for (std::size_t j = 0; j < u; ++j) target[j] = static_cast<int>(j);
    const double acc = contrastive::matching_accuracy(logits.data(), u, u, target);
    hits[b] = static_cast<std::size_t>(acc * static_cast<double>(u) + 0.5);
  }
  std::size_t total = 0;
  for (auto h : hits) total += h;
  MatchingResult r;
  r.rows = batches * u;
  r.columns_per_batch = u;
  r.accuracy = static_cast<double>(total) / static_cast<double>(r.rows);
  return r;
}

MatchingResult evaluate_t2i(const LiamModel& model, const std::vector<world::Episode>& episodes,
                            std::size_t num_rows, std::size_t batch, std::size_t seq_cap,
                            std::uint64_t seed) {
  if (batch < 2 || episodes.size() < batch) {
    throw std::invalid_argument("evaluate_t2i: need at least " + std::to_string(std::max<std::size_t>(batch, 2)) +
                                " episodes, have " + std::to_string(episodes.size()));
  }
  const auto batches = (num_rows + batch - 1) / batch;
  // Representations do not depend on the batch, so compute each episode once.
  std::vector<Tensor> text(episodes.size()), seq(episodes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ei = 0; ei < static_cast<std::ptrdiff_t>(episodes.size()); ++ei) {
    ad::NoGradGuard ng;
    const auto e = static_cast<std::size_t>(ei);
    text[e] = model.encoders().encode_text(episodes[e].instruction).sequence_rep;
    seq[e] = sequence_representation(model, episodes[e], seq_cap);
  }
  ad::NoGradGuard ng;
  std::size_t hits = 0;
  std::vector<int> target(batch);
  for (std::size_t j = 0; j < batch; ++j) target[j] = static_cast<int>(j);
  for (std::size_t b = 0; b < batches; ++b) {
    Rng rng(mix_seed(seed, b));
    std::vector<std::size_t> pick;
    while (pick.size() < batch) {
      const auto e = rng.index(episodes.size());
      if (std::find(pick.begin(), pick.end(), e) == pick.end()) pick.push_back(e);
    }
    std::vector<Tensor> t, s;
    for (auto e : pick) {
      t.push_back(text[e]);
      s.push_back(seq[e]);
    }
    auto logits = contrastive::similarity_logits(stack(t), stack(s), model.tau_ti());
    const double acc = contrastive::matching_accuracy(logits.data(), batch, batch, target);
    hits += static_cast<std::size_t>(acc * static_cast<double>(batch) + 0.5);
  }
  MatchingResult r;
  r.rows = batches * batch;
  r.columns_per_batch = batch;
  r.accuracy = static_cast<double>(hits) / static_cast<double>(r.rows);
  return r;
}

EvalMode parse_eval_mode(const std::string& name) {
  if (name == "teacher-forced" || name == "teacher_forced") return EvalMode::teacher_forced;
  if (name == "rollout") return EvalMode::rollout;
  throw std::invalid_argument("unknown evaluation mode '" + name + "'");
}

namespace {

std::vector<int> row_argmax(const Tensor& logits) {
  std::vector<int> out(logits.rows());
  const auto c = logits.cols();
  for (std::size_t r = 0; r < out.size(); ++r) {
    out[r] = static_cast<int>(contrastive::argmax(logits.data().subspan(r * c, c)));
  }
  return out;
}

}  // namespace

std::vector<int> predict_teacher_forced(const LiamModel& model, const world::Episode& ep,
                                        bool map_enabled) {
  ad::NoGradGuard ng;
  return row_argmax(model.forward(ep, map_enabled).action_logits);
}

std::vector<int> predict_rollout(const LiamModel& model, const world::Episode& ep,
                                 bool map_enabled) {
  ad::NoGradGuard ng;
  const auto n = ep.length();
  // Slots at and after t are invisible to step t, so their contents do not matter.
  std::vector<int> inputs(n, kPadAction);
  std::vector<int> preds(n, kPadAction);
  for (std::size_t t = 0; t < n; ++t) {
    const auto out = model.forward(ep, inputs, map_enabled);
    const auto c = out.action_logits.cols();
    const int a = static_cast<int>(contrastive::argmax(out.action_logits.data().subspan(t * c, c)));
    preds[t] = a;
    inputs[t] = a;
    if (a == kStopAction) break;
  }
  return preds;
}

SequenceMetrics evaluate_sequences(const LiamModel& model,
                                   const std::vector<world::Episode>& episodes, EvalMode mode,
                                   bool map_enabled) {
  if (episodes.empty()) throw std::invalid_argument("evaluate: empty dataset");
  std::vector<std::vector<int>> preds(episodes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t ei = 0; ei < static_cast<std::ptrdiff_t>(episodes.size()); ++ei) {
    const auto e = static_cast<std::size_t>(ei);
    preds[e] = mode == EvalMode::teacher_forced ? predict_teacher_forced(model, episodes[e], map_enabled)
                                                : predict_rollout(model, episodes[e], map_enabled);
  }
  std::vector<int> all_pred, all_target;
  for (std::size_t e = 0; e < episodes.size(); ++e) {
    all_pred.insert(all_pred.end(), preds[e].begin(), preds[e].end());
    all_target.insert(all_target.end(), episodes[e].actions.begin(), episodes[e].actions.end());
  }
  SequenceMetrics m;
  m.positions = all_target.size();
  m.accuracy = metrics::accuracy(all_pred, all_target);
  m.macro_f1 = metrics::macro_f1(all_pred, all_target);
  return m;
}

}  // namespace liam

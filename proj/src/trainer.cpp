#include "liam/trainer.hpp"

#include <algorithm>
#include <stdexcept>

#include "liam/contrastive.hpp"
#include "liam/losses.hpp"
#include "liam/ops.hpp"

namespace liam {

Checkpoint make_checkpoint(const LiamModel& model, const Optimizer* optimizer, std::size_t step) {
  Checkpoint c;
  c.stage = model.config().stage;
  c.config_hash = model.config().architecture_hash();
  c.step = step;
  for (const auto& p : model.store().all()) {
    c.tensors.push_back({p.name, p.value.shape(), {p.value.data().begin(), p.value.data().end()}});
  }
  if (optimizer) {
    c.optimizer = optimizer->kind();
    c.optimizer_steps = optimizer->steps_taken();
    for (auto& [name, data] : optimizer->export_state()) {
      c.tensors.push_back({name, {data.size()}, std::move(data)});
    }
  }
  return c;
}

void load_parameters(LiamModel& model, const Checkpoint& ckpt) {
  if (ckpt.config_hash != model.config().architecture_hash()) {
    throw CheckpointError("checkpoint config hash " + std::to_string(ckpt.config_hash) +
                          " does not match the configured architecture (" +
                          std::to_string(model.config().architecture_hash()) + ")");
  }
  for (auto& p : model.store().all()) {
    const auto* t = ckpt.find(p.name);
    if (!t) throw CheckpointError("checkpoint has no tensor '" + p.name + "'");
    if (t->shape != p.value.shape()) {
      throw CheckpointError("tensor '" + p.name + "' has shape " + shape_str(t->shape) +
                            ", model expects " + shape_str(p.value.shape()));
    }
    std::copy(t->data.begin(), t->data.end(), p.value.mutable_data().begin());
  }
}

namespace {

Tensor stack(const std::vector<Tensor>& rows) {
  std::vector<Tensor> parts;
  parts.reserve(rows.size());
  for (const auto& r : rows) parts.push_back(ops::reshape(r, {1, r.size()}));
  return ops::concat_rows(parts);
}

std::vector<std::size_t> distinct_indices(Rng& rng, std::size_t k, std::size_t n) {
  std::vector<std::size_t> out;
  while (out.size() < k) {
    const auto i = rng.index(n);
    if (std::find(out.begin(), out.end(), i) == out.end()) out.push_back(i);
  }
  return out;
}

// Sum of per-episode losses divided by the batch size.
Tensor batch_mean(const std::vector<Tensor>& losses) {
  Tensor total = losses.front();
  for (std::size_t i = 1; i < losses.size(); ++i) total = ops::add(total, losses[i]);
  return ops::scale(total, 1.0f / static_cast<float>(losses.size()));
}

}  // namespace

Trainer::Trainer(LiamModel& model, const std::vector<world::Episode>& train)
    : model_(model),
      train_(train),
      optimizer_(model.config().optimizer, model.config().lr, model.config().adam_beta1,
                 model.config().adam_beta2, model.config().adam_eps) {
  if (train_.empty()) throw std::invalid_argument("training set is empty");
  const auto& cfg = model_.config();
  if (cfg.stage == "pair") {
    pairs_ = collect_pairs(train_);
    if (pairs_.size() < 2) throw std::invalid_argument("training set yields fewer than 2 pairs");
  }
  if (cfg.stage == "triple" && train_.size() < cfg.resolved_batch()) {
    throw std::invalid_argument("triple stage needs at least " +
                                std::to_string(cfg.resolved_batch()) + " episodes");
  }
}

StepLosses Trainer::pair_step(Rng& rng) {
  const auto n = std::min(model_.config().resolved_batch(), pairs_.size());
  std::vector<PairRef> refs;
  for (auto i : distinct_indices(rng, n, pairs_.size())) refs.push_back(pairs_[i]);
  std::vector<int> ids;
  for (const auto& r : refs) ids.push_back(r.action);
  const auto targets = contrastive::build_affinity_targets(ids);
  auto reps = pair_representations(model_, train_, refs);
  auto acts = model_.encoders().embed_actions(targets.unique_actions);
  auto loss = contrastive::loss_image_action(
      contrastive::similarity_logits(reps, acts, model_.tau_ia()), targets);
  model_.store().clear_grads();
  ad::backward(loss);
  StepLosses s;
  s.loss = s.loss_ia = loss.item();
  return s;
}

StepLosses Trainer::triple_step(Rng& rng) {
  const auto& cfg = model_.config();
  const auto b = cfg.resolved_batch();
  const auto picks = distinct_indices(rng, b, train_.size());
  std::vector<Tensor> text, seq, pair_reps;
  std::vector<int> ids;
  for (auto e : picks) {
    const auto& ep = train_[e];
    const auto len = std::min(ep.length(), cfg.seq_cap);
    auto emb = model_.encoders().encode_frames(LiamModel::frame_matrix(ep, 0, len));
    text.push_back(model_.encoders().encode_text(ep.instruction).sequence_rep);
    seq.push_back(ops::l2_normalize(ops::mean(emb, 0)));
    // Transitions inside the truncated window; the stop action sits at n - 1 and
    // so never starts a pair.
    if (const auto last = len - 1; last >= 1) {
      pair_reps.push_back(model_.encoders().fuse_frame_pairs(ops::slice_rows(emb, 0, last),
                                                             ops::slice_rows(emb, 1, len)));
      ids.insert(ids.end(), ep.actions.begin(), ep.actions.begin() + static_cast<std::ptrdiff_t>(last));
    }
  }
  auto l_ti = contrastive::loss_text_image(stack(text), stack(seq), model_.tau_ti());
  const auto targets = contrastive::build_affinity_targets(ids);
  auto acts = model_.encoders().embed_actions(targets.unique_actions);
  auto l_ia = contrastive::loss_image_action(
      contrastive::similarity_logits(ops::concat_rows(pair_reps), acts, model_.tau_ia()), targets);
  auto loss = contrastive::loss_triple(l_ti, l_ia, cfg.triple_alpha);
  model_.store().clear_grads();
  ad::backward(loss);
  StepLosses s;
  s.loss = loss.item();
  s.loss_ia = l_ia.item();
  s.loss_ti = l_ti.item();
  return s;
}

StepLosses Trainer::e2e_step(Rng& rng) {
  const auto& cfg = model_.config();
  const auto b = std::min(cfg.resolved_batch(), train_.size());
  std::vector<Tensor> totals, la, lo, lg;
  for (auto e : distinct_indices(rng, b, train_.size())) {
    const auto& ep = train_[e];
    const auto out = model_.forward(ep, cfg.map_enabled);
    const std::vector<std::uint8_t> no_pad(ep.length(), 0);
    const auto gp = losses::goal_progress_targets(ep.length());
    auto l_a = losses::action_loss(out.action_logits, ep.actions, no_pad);
    auto l_o = losses::object_loss(out.object_logits, ep.objects, no_pad);
    auto l_g = losses::goal_progress_loss(out.goal_progress, gp, no_pad);
    totals.push_back(losses::total_loss(l_a, l_o, l_g, cfg.aux_object_weight, cfg.aux_gp_weight));
    la.push_back(l_a);
    lo.push_back(l_o);
    lg.push_back(l_g);
  }
  auto loss = batch_mean(totals);
  model_.store().clear_grads();
  ad::backward(loss);
  auto mean_item = [](const std::vector<Tensor>& v) {
    double s = 0.0;
    for (const auto& t : v) s += t.item();
    return s / static_cast<double>(v.size());
  };
  StepLosses s;
  s.loss = loss.item();
  s.loss_action = mean_item(la);
  s.loss_object = mean_item(lo);
  s.loss_gp = mean_item(lg);
  return s;
}

StepLosses Trainer::compute_step(std::size_t step) {
  Rng rng(mix_seed(model_.config().seed ^ 0x7261696eull, step));
  const auto& stage = model_.config().stage;
  if (stage == "pair") return pair_step(rng);
  if (stage == "triple") return triple_step(rng);
  return e2e_step(rng);
}

void Trainer::clamp_temperatures() {
  for (const char* name : {"tau.ia", "tau.ti"}) {
    auto& t = model_.store().get(name);
    t.mutable_data()[0] = contrastive::clamp_stored_temperature(t.data()[0]);
  }
}

metrics::MetricsRow Trainer::evaluate(const std::vector<world::Episode>& episodes,
                                      const std::string& split, std::size_t step) const {
  const auto& cfg = model_.config();
  metrics::MetricsRow row;
  row.step = step;
  row.split = split;
  row.tau_ia = model_.tau_ia().item();
  row.tau_ti = model_.tau_ti().item();
  const auto eval_seed = mix_seed(cfg.seed, 0xe7a1u);
  if (cfg.stage == "pair" || cfg.stage == "triple") {
    row.acc_i2a = evaluate_i2a(model_, episodes, cfg.eval_pairs, eval_seed).accuracy;
    if (cfg.stage == "triple") {
      row.acc_t2i =
          evaluate_t2i(model_, episodes, cfg.eval_pairs, cfg.resolved_batch(), cfg.seq_cap, eval_seed)
              .accuracy;
    }
  } else {
    const auto m = evaluate_sequences(model_, episodes, EvalMode::teacher_forced, cfg.map_enabled);
    row.accuracy = m.accuracy;
    row.macro_f1 = m.macro_f1;
  }
  return row;
}

Checkpoint Trainer::run(const TrainOptions& options) {
  const auto& cfg = model_.config();
  std::size_t start = 0;
  if (options.resume) {
    const auto& ck = *options.resume;
    if (ck.stage != cfg.stage) {
      throw CheckpointError("cannot resume a '" + ck.stage + "' checkpoint as stage '" +
                            cfg.stage + "'");
    }
    load_parameters(model_, ck);
    std::vector<std::pair<std::string, std::vector<float>>> state;
    for (const auto& t : ck.tensors)
      if (t.name.rfind("adam.", 0) == 0) state.emplace_back(t.name, t.data);
    if (!ck.optimizer.empty() && ck.optimizer != optimizer_.kind()) {
      throw CheckpointError("checkpoint was trained with optimizer '" + ck.optimizer +
                            "', config asks for '" + optimizer_.kind() + "'");
    }
    optimizer_.import_state(ck.optimizer_steps, state);
    start = ck.step;
  }

  auto emit = [&](const metrics::MetricsRow& row) {
    if (options.csv) options.csv->write(row);
    if (options.on_row) options.on_row(row);
  };
  auto maybe_eval = [&](std::size_t step) {
    if (!options.valid || cfg.eval_every == 0) return;
    if (step % cfg.eval_every != 0 && step != cfg.steps) return;
    emit(evaluate(*options.valid, "valid", step));
  };

  if (start == 0) maybe_eval(0);
  for (std::size_t step = start + 1; step <= cfg.steps; ++step) {
    const auto l = compute_step(step);
    optimizer_.step(model_.store());
    clamp_temperatures();

    metrics::MetricsRow row;
    row.step = step;
    row.split = "train";
    row.loss = l.loss;
    if (cfg.stage == "e2e") {
      row.loss_action = l.loss_action;
      row.loss_object = l.loss_object;
      row.loss_gp = l.loss_gp;
    } else {
      row.loss_ia = l.loss_ia;
      if (cfg.stage == "triple") row.loss_ti = l.loss_ti;
    }
    row.tau_ia = model_.tau_ia().item();
    row.tau_ti = model_.tau_ti().item();
    emit(row);
    maybe_eval(step);
  }
  return make_checkpoint(model_, &optimizer_, std::max(start, cfg.steps));
}

}  // namespace liam

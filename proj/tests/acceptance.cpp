// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// when any criterion fails. Tolerances are fixed constants below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "liam/ablation.hpp"
#include "liam/checkpoint.hpp"
#include "liam/contrastive.hpp"
#include "liam/evaluate.hpp"
#include "liam/grad_suite.hpp"
#include "liam/losses.hpp"
#include "liam/metrics.hpp"
#include "liam/ops.hpp"
#include "liam/trainer.hpp"

using namespace liam;
using clock_type = std::chrono::steady_clock;

namespace {

constexpr double kGradSuiteSeconds = 60.0;
constexpr double kChanceSigmas = 3.0;
constexpr double kLiftI2A = 5.0;
constexpr double kLiftT2I = 2.0;
constexpr double kStageSeconds = 300.0;
constexpr double kOverfitAccuracy = 0.99;
constexpr double kKlCeTolerance = 1e-9;
constexpr double kUniformTolerance = 1e-6;

constexpr std::size_t kEvalPairs = 2000;
constexpr std::size_t kPairSteps = 3000;
constexpr std::size_t kTripleSteps = 4000;
constexpr std::size_t kOverfitSteps = 200;
constexpr std::size_t kAblationSteps = 400;

int failures = 0;

void report(int id, bool pass, const std::string& what, const std::string& detail) {
  std::printf("criterion %2d [%s] %s: %s\n", id, pass ? "PASS" : "FAIL", what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

double seconds_since(clock_type::time_point start) {
  return std::chrono::duration<double>(clock_type::now() - start).count();
}

std::vector<world::Episode> episodes(std::uint64_t begin, std::uint64_t end, std::size_t count,
                                     std::uint64_t seed, const char* split) {
  world::GenerationSpec spec;
  spec.layout_begin = begin;
  spec.layout_end = end;
  spec.count = count;
  spec.seed = seed;
  spec.split = split;
  return world::generate_episodes(spec);
}

struct Data {
  std::vector<world::Episode> train, seen, unseen;
};

// Watches every metrics row for the temperature contract.
struct TauLog {
  std::size_t rows = 0;
  bool in_range = true;
  double lo = 1e300, hi = -1e300;
  void operator()(const metrics::MetricsRow& r) {
    for (const auto& t : {r.tau_ia, r.tau_ti}) {
      if (!t) continue;
      ++rows;
      lo = std::min(lo, *t);
      hi = std::max(hi, *t);
      in_range = in_range && *t >= contrastive::kTauMin && *t <= contrastive::kTauMax;
    }
  }
};

std::uint64_t eval_seed(const TrainConfig& cfg) { return mix_seed(cfg.seed, 0xe7a1u); }

void criterion_gradients() {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 10; ++s) seeds.push_back(s);
  const auto start = clock_type::now();
  const auto results = run_gradient_suite(seeds);
  const double secs = seconds_since(start);
  double worst32 = 0, worst64 = 0;
  std::string failed;
  for (const auto& r : results) {
    worst32 = std::max(worst32, r.max_rel_error_32);
    worst64 = std::max(worst64, r.max_rel_error_64);
    if (!r.pass() && failed.empty()) failed = " first failure " + r.name;
  }
  const bool pass = failed.empty() && secs < kGradSuiteSeconds &&
                    results.size() == gradient_case_names().size() * seeds.size();
  report(1, pass, "gradient suite",
         fmt("%zu cases x 10 seeds, max rel err f32 %.2e (< %.0e) f64 %.2e (< %.0e), %.2f s (< %.0f s)%s",
             gradient_case_names().size(), worst32, kGradTolerance32, worst64, kGradTolerance64, secs,
             kGradSuiteSeconds, failed.c_str()));
}

void criterion_chance(const Data& data) {
  TrainConfig cfg;
  cfg.stage = "triple";
  LiamModel model(cfg);
  const auto i2a = evaluate_i2a(model, data.seen, kEvalPairs, eval_seed(cfg));
  const double p1 = 1.0 / double(i2a.columns_per_batch);
  const double s1 = std::sqrt(p1 * (1 - p1) / double(i2a.rows));
  const auto t2i = evaluate_t2i(model, data.seen, kEvalPairs, 3, cfg.seq_cap, eval_seed(cfg));
  const double p2 = 1.0 / 3.0;
  const double s2 = std::sqrt(p2 * (1 - p2) / double(t2i.rows));
  const double z1 = (i2a.accuracy - p1) / s1, z2 = (t2i.accuracy - p2) / s2;
  const bool pass = std::abs(z1) <= kChanceSigmas && std::abs(z2) <= kChanceSigmas;
  report(2, pass, "chance level at init",
         fmt("I2A %.4f vs 1/U=%.4f (U=%zu, n=%zu, z=%+.2f); T2I %.4f vs 1/3 (n=%zu, z=%+.2f); |z| <= %.0f",
             i2a.accuracy, p1, i2a.columns_per_batch, i2a.rows, z1, t2i.accuracy, t2i.rows, z2, kChanceSigmas));
}

struct StageRun {
  Checkpoint checkpoint;
  double seconds = 0;
  double i2a = 0, i2a_chance = 0, t2i = 0;
};

StageRun pretrain(const std::string& stage, std::size_t steps, const Data& data, TauLog& taus) {
  TrainConfig cfg;
  cfg.stage = stage;
  cfg.steps = steps;
  cfg.eval_every = steps / 4;
  cfg.eval_pairs = 500;
  LiamModel model(cfg);
  Trainer trainer(model, data.train);
  TrainOptions opts;
  opts.valid = &data.seen;
  opts.on_row = std::ref(taus);
  StageRun out;
  const auto start = clock_type::now();
  out.checkpoint = trainer.run(opts);
  out.seconds = seconds_since(start);
  const auto i2a = evaluate_i2a(model, data.seen, kEvalPairs, eval_seed(cfg));
  out.i2a = i2a.accuracy;
  out.i2a_chance = 1.0 / double(i2a.columns_per_batch);
  if (stage == "triple") out.t2i = evaluate_t2i(model, data.seen, kEvalPairs, 3, cfg.seq_cap, eval_seed(cfg)).accuracy;
  return out;
}

Checkpoint criterion_lift(const Data& data, TauLog& taus) {
  const auto pairs = collect_pairs(data.train, TrainConfig{}.seq_cap).size();
  const auto pair = pretrain("pair", kPairSteps, data, taus);
  const auto triple = pretrain("triple", kTripleSteps, data, taus);
  const bool pair_ok = pair.i2a >= kLiftI2A * pair.i2a_chance && pair.seconds <= kStageSeconds;
  const bool triple_ok = triple.i2a >= kLiftI2A * triple.i2a_chance && triple.t2i >= kLiftT2I / 3.0 &&
                         triple.seconds <= kStageSeconds;
  report(3, pair_ok && triple_ok && pairs >= 2000, "pretraining lift",
         fmt("%zu train pairs; pair: I2A %.4f (>= %.4f) in %.1f s; triple: I2A %.4f (>= %.4f), T2I %.4f (>= %.4f) "
             "in %.1f s; limit %.0f s per stage",
             pairs, pair.i2a, kLiftI2A * pair.i2a_chance, pair.seconds, triple.i2a, kLiftI2A * triple.i2a_chance,
             triple.t2i, kLiftT2I / 3.0, triple.seconds, kStageSeconds));
  return triple.checkpoint;
}

world::Episode flip_bits(const world::Episode& ep, bool frame, std::size_t step, Rng& rng) {
  world::Episode out = ep;
  auto& v = frame ? out.frames[step] : out.maps[step];
  for (int k = 0; k < 5; ++k) {
    auto& x = v[rng.index(v.size())];
    x = 1.0f - x;
  }
  return out;
}

void criterion_leakage(const Data& data, const Checkpoint& init) {
  TrainConfig cfg;
  cfg.stage = "e2e";
  LiamModel model(cfg);
  load_parameters(model, init);
  Rng rng(0x1eacu);
  std::size_t checks = 0, identical = 0, reached_later = 0, later_checks = 0;
  for (std::size_t e = 0; e < 50; ++e) {
    const auto& ep = data.seen[e];
    const std::size_t n = ep.length();
    const auto base = model.forward(ep, true).action_logits;
    for (int site = 0; site < 10; ++site) {
      const std::size_t t = rng.index(n);
      // Kinds: 0 action at s >= t, 1 frame at s > t, 2 map at s > t.
      int kind = static_cast<int>(rng.index(3));
      if (t + 1 >= n) kind = 0;
      const std::size_t s = kind == 0 ? t + rng.index(n - t) : t + 1 + rng.index(n - t - 1);
      world::Episode probe = ep;
      std::vector<int> actions = ep.actions;
      if (kind == 0) {
        actions[s] = (actions[s] + 1 + static_cast<int>(rng.index(12))) % kNumActions;
      } else {
        probe = flip_bits(ep, kind == 1, s, rng);
      }
      const auto got = model.forward(probe, actions, true).action_logits;
      const auto row = [&](const Tensor& x, std::size_t r) { return x.data().subspan(r * 14, 14); };
      ++checks;
      identical += std::memcmp(row(base, t).data(), row(got, t).data(), 14 * sizeof(float)) == 0;
      // Non-vacuity: a later row that can see the perturbation should move.
      const std::size_t later = kind == 0 ? s + 1 : s;
      if (later < n) {
        ++later_checks;
        reached_later += std::memcmp(row(base, later).data(), row(got, later).data(), 14 * sizeof(float)) != 0;
      }
    }
  }
  report(4, identical == checks, "no leakage",
         fmt("%zu/%zu perturbations left row t bit-identical (50 episodes x 10 sites); %zu/%zu changed a row "
             "that may see them",
             identical, checks, reached_later, later_checks));
}

void criterion_overfit(const Data& data, TauLog& taus) {
  const std::vector<world::Episode> eight(data.train.begin(), data.train.begin() + 8);
  TrainConfig cfg;
  cfg.stage = "e2e";
  cfg.optimizer = "adam";
  cfg.lr = 3e-3;
  cfg.steps = kOverfitSteps;
  cfg.eval_every = kOverfitSteps;
  LiamModel model(cfg);
  Trainer trainer(model, eight);
  TrainOptions opts;
  opts.valid = &eight;
  opts.on_row = std::ref(taus);
  const auto start = clock_type::now();
  trainer.run(opts);
  const double secs = seconds_since(start);
  const auto m = evaluate_sequences(model, eight, EvalMode::teacher_forced, true);
  report(5, m.accuracy >= kOverfitAccuracy && secs <= kStageSeconds, "overfit 8 episodes",
         fmt("teacher-forced accuracy %.4f (>= %.2f) over %zu positions after %zu adam steps, %.1f s (<= %.0f s)",
             m.accuracy, kOverfitAccuracy, m.positions, kOverfitSteps, secs, kStageSeconds));
}

void criterion_ablation(const Data& data, const Checkpoint& init) {
  TrainConfig cfg;
  cfg.stage = "e2e";
  cfg.optimizer = "adam";
  cfg.lr = 1e-3;
  cfg.steps = kAblationSteps;
  cfg.eval_every = kAblationSteps;
  const auto start = clock_type::now();
  const auto cells = run_map_ablation(cfg, data.train, data.seen, data.unseen, &init, nullptr);
  const double secs = seconds_since(start);
  bool populated = cells.size() == 4;
  std::string detail;
  for (const auto& c : cells) {
    populated = populated && c.metrics.positions > 0 && std::isfinite(c.metrics.accuracy) &&
                std::isfinite(c.metrics.macro_f1) && c.metrics.accuracy >= 0 && c.metrics.accuracy <= 1;
    detail += fmt("%s/%s acc %.4f f1 %.4f; ", c.map_enabled ? "+map" : "-map", c.split.c_str(),
                  c.metrics.accuracy, c.metrics.macro_f1);
  }
  bool all_cells = false;
  if (cells.size() == 4) {
    all_cells = cells[0].map_enabled && cells[0].split == "seen" && cells[1].map_enabled &&
                cells[1].split == "unseen" && !cells[2].map_enabled && cells[2].split == "seen" &&
                !cells[3].map_enabled && cells[3].split == "unseen";
  }
  report(6, populated && all_cells, "map ablation grid", detail + fmt("%.1f s", secs));
}

void criterion_identities() {
  double worst_kl_ce = 0;
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = 1 + rng.index(8), c = 2 + rng.index(20);
    std::vector<double> logits(r * c), onehot(r * c, 0.0);
    for (auto& x : logits) x = 20.0 * rng.uniform() - 10.0;
    for (std::size_t i = 0; i < r; ++i) onehot[i * c + rng.index(c)] = 1.0;
    const auto l = Tensor64::constant({r, c}, logits), t = Tensor64::constant({r, c}, onehot);
    const auto w = ops::mean_weights<double>(r);
    const double kl = ops::kl_divergence(l, t, std::span<const double>(w)).item();
    const double ce = ops::cross_entropy(l, t, std::span<const double>(w)).item();
    worst_kl_ce = std::max(worst_kl_ce, std::abs(kl - ce));
  }
  const std::vector<int> targets{0, 3, 7, 12, 11};
  const std::vector<std::uint8_t> pad(5, 0);
  const double uniform32 =
      losses::action_loss(Tensor::constant({5, 14}, std::vector<float>(70, 0.25f)), std::span<const int>(targets), pad)
          .item();
  const double uniform64 =
      losses::action_loss(Tensor64::constant({5, 14}, std::vector<double>(70, -1.5)), std::span<const int>(targets), pad)
          .item();
  const double err = std::max(std::abs(uniform32 - std::log(14.0)), std::abs(uniform64 - std::log(14.0)));
  const bool gp = losses::goal_progress_targets(4) == std::vector<double>{0.25, 0.5, 0.75, 1.0};
  report(7, worst_kl_ce < kKlCeTolerance && err < kUniformTolerance && gp, "loss identities",
         fmt("|KL - CE| max %.2e (< %.0e, 100 trials); uniform action loss err %.2e (< %.0e); gp targets n=4 %s",
             worst_kl_ce, kKlCeTolerance, err, kUniformTolerance, gp ? "exact" : "WRONG"));
}

void criterion_metrics() {
  Rng rng(4242);
  std::size_t exact = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.index(40);
    std::vector<int> p(n), t(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<int>(rng.index(13));
      p[i] = rng.uniform() < 0.6 ? t[i] : static_cast<int>(rng.index(13));
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += p[i] == t[i];
    const double acc = double(hits) / double(n);
    double f1_sum = 0;
    int present = 0;
    for (int c = 0; c < 13; ++c) {
      std::size_t tp = 0, fp = 0, fn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        tp += p[i] == c && t[i] == c;
        fp += p[i] == c && t[i] != c;
        fn += p[i] != c && t[i] == c;
      }
      if (tp + fp + fn == 0) continue;
      ++present;
      f1_sum += 2.0 * double(tp) / double(2 * tp + fp + fn);
    }
    const double f1 = f1_sum / present;
    exact += metrics::accuracy(p, t) == acc && metrics::macro_f1(p, t) == f1;
  }
  report(8, exact == 1000, "metric oracle", fmt("%zu/1000 random pairs match accuracy and macro-F1 exactly", exact));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_determinism(const Data& data, const Checkpoint& init, TauLog& taus) {
  const auto dir = std::filesystem::temp_directory_path() / "liam_acceptance";
  std::filesystem::create_directories(dir);
  const std::vector<world::Episode> train(data.train.begin(), data.train.begin() + 200);
  const std::vector<world::Episode> valid(data.seen.begin(), data.seen.begin() + 50);

  std::string csv_text[2];
  Checkpoint trained;
  for (int rep = 0; rep < 2; ++rep) {
    TrainConfig cfg;
    cfg.stage = "triple";
    cfg.steps = 60;
    cfg.eval_every = 20;
    cfg.eval_pairs = 300;
    LiamModel model(cfg);
    Trainer trainer(model, train);
    const auto path = dir / "metrics.csv";
    {
      metrics::CsvWriter csv(path.string(), false);
      TrainOptions opts;
      opts.csv = &csv;
      opts.valid = &valid;
      opts.on_row = std::ref(taus);
      trained = trainer.run(opts);
    }
    csv_text[rep] = slurp(path);
  }
  const bool csv_same = !csv_text[0].empty() && csv_text[0] == csv_text[1];

  const auto ck_path = dir / "checkpoint.liam";
  save_checkpoint(trained, ck_path.string());
  const bool round_trip = load_checkpoint(ck_path.string()) == trained;

  TrainConfig cfg;
  cfg.stage = "e2e";
  cfg.steps = 20;
  cfg.freeze = {"text", "frame", "action", "map", "pair_fusion", "temperature"};
  LiamModel model(cfg);
  load_parameters(model, init);
  const auto before = make_checkpoint(model, nullptr, 0);
  Trainer trainer(model, train);
  const auto after = trainer.run({});
  std::size_t frozen = 0, frozen_same = 0, free_moved = 0;
  for (const auto& p : model.store().all()) {
    const bool same = before.find(p.name)->data == after.find(p.name)->data;
    if (cfg.freeze.count(p.group)) {
      ++frozen;
      frozen_same += same;
    } else {
      free_moved += !same;
    }
  }
  std::filesystem::remove_all(dir);
  report(9, csv_same && round_trip && frozen == frozen_same && frozen > 0 && free_moved > 0,
         "determinism and persistence",
         fmt("metrics csv identical across runs: %s (%zu bytes); checkpoint round trip bit-exact: %s; "
             "frozen tensors unchanged %zu/%zu (%zu trainable tensors moved)",
             csv_same ? "yes" : "no", csv_text[0].size(), round_trip ? "yes" : "no", frozen_same, frozen,
             free_moved));
}

void criterion_temperature(const TauLog& taus) {
  TrainConfig cfg;
  LiamModel model(cfg);
  const float init = static_cast<float>(contrastive::kTauInit);
  const bool init_ok = model.tau_ia().item() == init && model.tau_ti().item() == init;
  report(10, taus.in_range && taus.rows > 0 && init_ok, "temperature contract",
         fmt("%zu logged tau values in [%.4f, %.4f] (bounds [%.2f, %.0f]); init tau_ia %.4f tau_ti %.4f", taus.rows,
             taus.lo, taus.hi, contrastive::kTauMin, contrastive::kTauMax, double(model.tau_ia().item()),
             double(model.tau_ti().item())));
}

}  // namespace

int main() {
  try {
    const auto start = clock_type::now();
    Data data;
    data.train = episodes(0, 64, 2000, 100, "train");
    data.seen = episodes(0, 64, 400, 200, "valid_seen");
    data.unseen = episodes(1000, 1064, 400, 300, "valid_unseen");
    std::printf("datasets: train %zu, seen %zu, unseen %zu episodes\n", data.train.size(), data.seen.size(),
                data.unseen.size());

    TauLog taus;
    criterion_gradients();
    criterion_chance(data);
    const auto triple = criterion_lift(data, taus);
    criterion_leakage(data, triple);
    criterion_overfit(data, taus);
    criterion_ablation(data, triple);
    criterion_identities();
    criterion_metrics();
    criterion_determinism(data, triple, taus);
    criterion_temperature(taus);
    std::printf("acceptance: %d of 10 criteria failed (%.1f s)\n", failures, seconds_since(start));
  } catch (const std::exception& e) {
    std::printf("acceptance aborted: %s\n", e.what());
    return 2;
  }
  return failures == 0 ? 0 : 1;
}

// Command-line front end: dataset generation, the three training stages,
// evaluation, and the audit helpers (mask dump, gradient suite).

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "liam/ablation.hpp"
#include "liam/checkpoint.hpp"
#include "liam/config.hpp"
#include "liam/dataset.hpp"
#include "liam/evaluate.hpp"
#include "liam/fusion.hpp"
#include "liam/grad_suite.hpp"
#include "liam/trainer.hpp"
#include "liam/vocab.hpp"

namespace fs = std::filesystem;
using namespace liam;

namespace {

std::string data_dir() {
  const char* env = std::getenv("LIAM_DATA_DIR");
  return env && *env ? env : "data";
}

std::string in_data_dir(const std::string& file) { return (fs::path(data_dir()) / file).string(); }

struct ConfigArgs {
  std::string path;
  std::vector<std::string> sets;

  void attach(CLI::App* app) {
    app->add_option("--config", path, "key = value config file");
    app->add_option("--set", sets, "override one key (repeatable), e.g. --set lr=0.01");
  }

  TrainConfig resolve(const std::string& stage_override = "") const {
    TrainConfig cfg = path.empty() ? TrainConfig{} : load_config(path);
    if (!stage_override.empty()) cfg.stage = stage_override;
    for (const auto& s : sets) {
      const auto [k, v] = split_assignment(s);
      cfg.set(k, v);
    }
    cfg.validate();
    return cfg;
  }
};

void write_resolved_config(const TrainConfig& cfg, const fs::path& run_dir) {
  fs::create_directories(run_dir);
  std::ofstream out(run_dir / "config.resolved");
  out << cfg.dump();
  if (!out) throw std::runtime_error("cannot write " + (run_dir / "config.resolved").string());
}

std::vector<world::Episode> load(const std::string& path, const char* what) {
  auto eps = world::read_dataset(path);
  if (eps.empty()) throw std::runtime_error(std::string(what) + " dataset '" + path + "' is empty");
  return eps;
}

void print_row(const metrics::MetricsRow& r) {
  if (r.split == "train") return;
  std::printf("step %6zu  %-6s", r.step, r.split.c_str());
  if (r.acc_i2a) std::printf("  i2a %.4f", *r.acc_i2a);
  if (r.acc_t2i) std::printf("  t2i %.4f", *r.acc_t2i);
  if (r.accuracy) std::printf("  acc %.4f", *r.accuracy);
  if (r.macro_f1) std::printf("  f1 %.4f", *r.macro_f1);
  if (r.tau_ia) std::printf("  tau_ia %.4f", *r.tau_ia);
  if (r.tau_ti) std::printf("  tau_ti %.4f", *r.tau_ti);
  std::printf("\n");
  std::fflush(stdout);
}

struct TrainArgs {
  ConfigArgs config;
  std::string train_path, valid_path, init, resume, out, run_dir;
  std::string stage;
};

int run_training(const TrainArgs& a, const std::string& default_stage) {
  auto cfg = a.config.resolve(a.stage.empty() ? default_stage : a.stage);
  if (default_stage == "e2e" && cfg.stage != "e2e") {
    throw ConfigError("train runs the e2e stage; use pretrain for '" + cfg.stage + "'");
  }
  if (default_stage != "e2e" && cfg.stage == "e2e") {
    throw ConfigError("pretrain runs the pair or triple stage");
  }
  const fs::path run_dir = a.run_dir.empty() ? fs::path("runs") / cfg.stage : fs::path(a.run_dir);
  write_resolved_config(cfg, run_dir);
  const auto train = load(a.train_path.empty() ? in_data_dir("train.jsonl") : a.train_path, "training");
  std::vector<world::Episode> valid;
  const auto valid_path = a.valid_path.empty() ? in_data_dir("valid_seen.jsonl") : a.valid_path;
  if (fs::exists(valid_path)) valid = load(valid_path, "validation");

  LiamModel model(cfg);
  Checkpoint resume;
  if (!a.init.empty()) load_parameters(model, load_checkpoint(a.init));
  if (!a.resume.empty()) resume = load_checkpoint(a.resume);

  metrics::CsvWriter csv((run_dir / "metrics.csv").string(), !a.resume.empty());
  Trainer trainer(model, train);
  TrainOptions opts;
  opts.valid = valid.empty() ? nullptr : &valid;
  opts.csv = &csv;
  opts.resume = a.resume.empty() ? nullptr : &resume;
  opts.on_row = print_row;
  const auto t0 = std::chrono::steady_clock::now();
  const auto ckpt = trainer.run(opts);
  const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const auto out = a.out.empty() ? (run_dir / "checkpoint.liam").string() : a.out;
  save_checkpoint(ckpt, out);
  std::printf("%s stage: %zu steps in %.1f s, checkpoint %s\n", cfg.stage.c_str(), cfg.steps, secs,
              out.c_str());
  return 0;
}

void attach_training(CLI::App* app, TrainArgs& a, bool with_stage) {
  a.config.attach(app);
  if (with_stage) app->add_option("--stage", a.stage, "pair or triple")->check(CLI::IsMember({"pair", "triple"}));
  app->add_option("--train", a.train_path, "training episodes (default $LIAM_DATA_DIR/train.jsonl)");
  app->add_option("--valid", a.valid_path,
                  "held-out episodes for periodic evaluation (default $LIAM_DATA_DIR/valid_seen.jsonl)");
  app->add_option("--init", a.init, "start from the parameters of this checkpoint");
  app->add_option("--resume", a.resume, "continue a run of the same stage from this checkpoint");
  app->add_option("--out", a.out, "checkpoint path (default <run-dir>/checkpoint.liam)");
  app->add_option("--run-dir", a.run_dir, "directory for metrics.csv and config.resolved");
}

struct EvalArgs {
  ConfigArgs config;
  std::string checkpoint, run_dir;
  std::vector<std::string> data;
  std::string mode = "teacher-forced";
  std::size_t show = 0;
};

int run_eval(const EvalArgs& a, const std::string& mode_name) {
  auto cfg = a.config.resolve();
  const auto mode = parse_eval_mode(mode_name);
  const fs::path run_dir = a.run_dir.empty() ? fs::path("runs") / ("eval-" + mode_name) : fs::path(a.run_dir);
  write_resolved_config(cfg, run_dir);
  const auto ckpt = load_checkpoint(a.checkpoint);
  LiamModel model(cfg);
  load_parameters(model, ckpt);

  std::vector<std::pair<std::string, std::string>> splits;
  if (a.data.empty()) {
    splits = {{"seen", in_data_dir("valid_seen.jsonl")}, {"unseen", in_data_dir("valid_unseen.jsonl")}};
  } else {
    for (const auto& d : a.data) {
      const auto eq = d.find('=');
      if (eq == std::string::npos) {
        splits.emplace_back(fs::path(d).stem().string(), d);
      } else {
        splits.emplace_back(d.substr(0, eq), d.substr(eq + 1));
      }
    }
  }
  metrics::CsvWriter csv((run_dir / "metrics.csv").string(), false);
  std::printf("mode %s, map %s\n", mode_name.c_str(), cfg.map_enabled ? "on" : "off");
  for (const auto& [name, path] : splits) {
    const auto eps = load(path, name.c_str());
    const auto m = evaluate_sequences(model, eps, mode, cfg.map_enabled);
    metrics::MetricsRow row;
    row.step = ckpt.step;
    row.split = name;
    row.accuracy = m.accuracy;
    row.macro_f1 = m.macro_f1;
    row.tau_ia = model.tau_ia().item();
    row.tau_ti = model.tau_ti().item();
    csv.write(row);
    std::printf("%-10s episodes %5zu  positions %6zu  accuracy %.4f  macro_f1 %.4f\n", name.c_str(),
                eps.size(), m.positions, m.accuracy, m.macro_f1);
    for (std::size_t i = 0; i < std::min(a.show, eps.size()); ++i) {
      const auto pred = mode == EvalMode::rollout ? predict_rollout(model, eps[i], cfg.map_enabled)
                                                  : predict_teacher_forced(model, eps[i], cfg.map_enabled);
      std::printf("  [%s] %s\n", name.c_str(), world::Vocabulary::instance().decode(eps[i].instruction).c_str());
      std::printf("    expert:");
      for (int act : eps[i].actions) std::printf(" %s", std::string(world::action_name(act)).c_str());
      std::printf("\n    model: ");
      for (int act : pred) std::printf(" %s", std::string(world::action_name(act)).c_str());
      std::printf("\n");
    }
  }
  return 0;
}

void attach_eval(CLI::App* app, EvalArgs& a) {
  a.config.attach(app);
  app->add_option("--checkpoint", a.checkpoint, "trained checkpoint")->required();
  app->add_option("--data", a.data,
                  "split=path (repeatable; default seen/unseen from $LIAM_DATA_DIR)");
  app->add_option("--show", a.show, "print predicted transcripts for the first N episodes");
  app->add_option("--run-dir", a.run_dir, "directory for metrics.csv and config.resolved");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal action-transcript model on a synthetic gridworld"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate an episode dataset");
  ConfigArgs gen_cfg;
  gen_cfg.attach(gen);
  std::string gen_split = "train", gen_out;
  std::uint64_t layout_begin = 0, layout_end = 64, gen_seed = 0;
  std::size_t gen_count = 2000, max_len = 24;
  gen->add_option("--split", gen_split, "split name stored in each record");
  gen->add_option("--layout-begin", layout_begin, "first room layout seed");
  gen->add_option("--layout-end", layout_end, "one past the last layout seed");
  gen->add_option("--count", gen_count, "number of episodes");
  gen->add_option("--seed", gen_seed, "episode sampling seed");
  gen->add_option("--max-len", max_len, "reject episodes longer than this");
  gen->add_option("--out", gen_out, "output path (default $LIAM_DATA_DIR/<split>.jsonl)");

  // pretrain / train
  TrainArgs pre_args, train_args;
  auto* pretrain = app.add_subcommand("pretrain", "contrastive pretraining (pair or triple stage)");
  attach_training(pretrain, pre_args, true);
  auto* train = app.add_subcommand("train", "end-to-end training of the fusion model");
  attach_training(train, train_args, false);

  // eval / rollout
  EvalArgs eval_args, roll_args;
  auto* eval = app.add_subcommand("eval", "teacher-forced (or --mode rollout) accuracy and macro-F1");
  attach_eval(eval, eval_args);
  eval->add_option("--mode", eval_args.mode, "teacher-forced or rollout")
      ->check(CLI::IsMember({"teacher-forced", "rollout"}));
  auto* rollout = app.add_subcommand("rollout", "open-loop decoding with predicted actions fed back");
  attach_eval(rollout, roll_args);

  // ablate
  ConfigArgs abl_cfg;
  std::string abl_train, abl_seen, abl_unseen, abl_init, abl_dir;
  auto* ablate = app.add_subcommand("ablate", "train with and without maps, evaluate on seen/unseen");
  abl_cfg.attach(ablate);
  ablate->add_option("--train", abl_train, "training episodes");
  ablate->add_option("--seen", abl_seen, "seen-layout evaluation episodes");
  ablate->add_option("--unseen", abl_unseen, "unseen-layout evaluation episodes");
  ablate->add_option("--init", abl_init, "pretrained checkpoint for both runs");
  ablate->add_option("--run-dir", abl_dir, "directory for metrics.csv and config.resolved");

  // inspect-mask
  std::size_t mask_m = 2, mask_n = 2;
  bool mask_no_map = false;
  auto* inspect = app.add_subcommand("inspect-mask", "print the causal attention mask");
  inspect->add_option("--m", mask_m, "language tokens");
  inspect->add_option("--n", mask_n, "time steps");
  inspect->add_flag("--no-map", mask_no_map, "layout without map tokens");

  // grad-check
  std::size_t gc_seeds = 10;
  bool gc_verbose = false;
  auto* gradc = app.add_subcommand("grad-check", "finite-difference check of every primitive and loss");
  gradc->add_option("--seeds", gc_seeds, "number of random seeds");
  gradc->add_flag("--verbose", gc_verbose, "one line per case and seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) {
      auto cfg = gen_cfg.resolve();
      world::GenerationSpec spec;
      spec.layout_begin = layout_begin;
      spec.layout_end = layout_end;
      spec.count = gen_count;
      spec.seed = gen_seed;
      spec.split = gen_split;
      spec.world = cfg.world;
      spec.max_len = max_len;
      const auto out = gen_out.empty() ? in_data_dir(gen_split + ".jsonl") : gen_out;
      if (const auto parent = fs::path(out).parent_path(); !parent.empty()) fs::create_directories(parent);
      const auto eps = world::generate_episodes(spec);
      world::write_dataset(eps, out);
      std::size_t steps = 0;
      for (const auto& e : eps) steps += e.length();
      std::printf("wrote %zu episodes (%zu steps, layouts [%llu, %llu)) to %s\n", eps.size(), steps,
                  static_cast<unsigned long long>(layout_begin),
                  static_cast<unsigned long long>(layout_end), out.c_str());
      return 0;
    }
    if (*pretrain) return run_training(pre_args, "pair");
    if (*train) return run_training(train_args, "e2e");
    if (*eval) return run_eval(eval_args, eval_args.mode);
    if (*rollout) return run_eval(roll_args, "rollout");
    if (*ablate) {
      auto cfg = abl_cfg.resolve("e2e");
      const fs::path run_dir = abl_dir.empty() ? fs::path("runs") / "ablate" : fs::path(abl_dir);
      write_resolved_config(cfg, run_dir);
      const auto tr = load(abl_train.empty() ? in_data_dir("train.jsonl") : abl_train, "training");
      const auto seen = load(abl_seen.empty() ? in_data_dir("valid_seen.jsonl") : abl_seen, "seen");
      const auto unseen =
          load(abl_unseen.empty() ? in_data_dir("valid_unseen.jsonl") : abl_unseen, "unseen");
      Checkpoint init;
      if (!abl_init.empty()) init = load_checkpoint(abl_init);
      metrics::CsvWriter csv((run_dir / "metrics.csv").string(), false);
      const auto cells =
          run_map_ablation(cfg, tr, seen, unseen, abl_init.empty() ? nullptr : &init, &csv);
      std::printf("%s", format_ablation(cells).c_str());
      return 0;
    }
    if (*inspect) {
      const auto mask = fusion::build_causal_mask(mask_m, mask_n, !mask_no_map);
      const auto& l = mask.layout;
      std::printf("layout: L [0, %zu) I [%zu, %zu) A [%zu, %zu)", l.m, l.m, l.m + l.n, l.m + l.n,
                  l.m + 2 * l.n);
      if (l.with_map) std::printf(" M [%zu, %zu)", l.m + 2 * l.n, l.m + 3 * l.n);
      std::printf("; row i lists the columns token i may attend to\n%s", mask.to_text().c_str());
      return 0;
    }
    if (*gradc) {
      std::vector<std::uint64_t> seeds(gc_seeds);
      for (std::size_t i = 0; i < gc_seeds; ++i) seeds[i] = i + 1;
      const auto t0 = std::chrono::steady_clock::now();
      const auto results = run_gradient_suite(seeds);
      const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::map<std::string, std::pair<double, double>> worst;
      bool ok = true;
      for (const auto& r : results) {
        auto& w = worst[r.name];
        w.first = std::max(w.first, r.max_rel_error_32);
        w.second = std::max(w.second, r.max_rel_error_64);
        ok = ok && r.pass();
        if (gc_verbose) {
          std::printf("%-22s seed %3llu  f32 %.3e  f64 %.3e%s\n", r.name.c_str(),
                      static_cast<unsigned long long>(r.seed), r.max_rel_error_32,
                      r.max_rel_error_64, r.pass() ? "" : "  FAIL");
        }
      }
      double w32 = 0, w64 = 0;
      for (const auto& name : gradient_case_names()) {
        const auto [e32, e64] = worst[name];
        w32 = std::max(w32, e32);
        w64 = std::max(w64, e64);
        if (!gc_verbose) std::printf("%-22s f32 %.3e  f64 %.3e\n", name.c_str(), e32, e64);
      }
      std::printf("max relative error: f32 %.3e (tol %.0e)  f64 %.3e (tol %.0e)  over %zu seeds in %.2f s: %s\n",
                  w32, kGradTolerance32, w64, kGradTolerance64, gc_seeds, secs, ok ? "PASS" : "FAIL");
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "liam: error: %s\n", e.what());
    return 1;
  }
  return 0;
}

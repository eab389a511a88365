#include "liam/ablation.hpp"

#include <cstdio>

#include "liam/trainer.hpp"

namespace liam {

std::vector<AblationCell> run_map_ablation(const TrainConfig& config,
                                           const std::vector<world::Episode>& train,
                                           const std::vector<world::Episode>& seen,
                                           const std::vector<world::Episode>& unseen,
                                           const Checkpoint* init, metrics::CsvWriter* csv) {
  std::vector<AblationCell> cells;
  for (bool with_map : {true, false}) {
    TrainConfig cfg = config;
    cfg.stage = "e2e";
    cfg.map_enabled = with_map;
    const std::string tag = with_map ? "map" : "nomap";
    LiamModel model(cfg);
    if (init) load_parameters(model, *init);
    Trainer trainer(model, train);
    TrainOptions opts;
    opts.on_row = [&](const metrics::MetricsRow& r) {
      if (!csv) return;
      auto row = r;
      row.split = r.split + "/" + tag;
      csv->write(row);
    };
    trainer.run(opts);
    for (const auto* split : {&seen, &unseen}) {
      AblationCell cell;
      cell.map_enabled = with_map;
      cell.split = split == &seen ? "seen" : "unseen";
      cell.metrics = evaluate_sequences(model, *split, EvalMode::teacher_forced, with_map);
      if (csv) {
        metrics::MetricsRow row;
        row.step = cfg.steps;
        row.split = cell.split + "/" + tag;
        row.accuracy = cell.metrics.accuracy;
        row.macro_f1 = cell.metrics.macro_f1;
        csv->write(row);
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

std::string format_ablation(const std::vector<AblationCell>& cells) {
  std::string out = "model        split    accuracy  macro_f1\n";
  char line[96];
  for (const auto& c : cells) {
    std::snprintf(line, sizeof line, "%-12s %-8s %8.4f  %8.4f\n", c.map_enabled ? "+map" : "-map",
                  c.split.c_str(), c.metrics.accuracy, c.metrics.macro_f1);
    out += line;
  }
  return out;
}

}  // namespace liam

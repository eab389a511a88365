#pragma once

#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace liam::metrics {

/// Fraction of non-pad positions (pad_mask == 0) where prediction equals target.
/// Throws std::invalid_argument on length mismatch or when every position is pad.
double accuracy(std::span<const int> predictions, std::span<const int> targets,
                std::span<const std::uint8_t> pad_mask = {});

/// Macro-averaged F1 over the classes [0, num_classes) that occur among the
/// non-pad targets or predictions. Predictions outside that range count only
/// as misses for the true class.
double macro_f1(std::span<const int> predictions, std::span<const int> targets,
                std::span<const std::uint8_t> pad_mask = {}, int num_classes = 13);

/// One CSV row. Empty optionals print as empty fields.
struct MetricsRow {
  std::size_t step = 0;
  std::string split;
  std::optional<double> loss, loss_ia, loss_ti, loss_action, loss_object, loss_gp;
  std::optional<double> acc_i2a, acc_t2i, accuracy, macro_f1;
  std::optional<double> tau_ia, tau_ti;
};

/// Appends rows to a metrics CSV; writes the header when the file is new or truncated.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, bool append);
  void write(const MetricsRow& row);
  static std::string header();
  static std::string format(const MetricsRow& row);

 private:
  std::ofstream out_;
};

}  // namespace liam::metrics

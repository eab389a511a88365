#include "liam/metrics.hpp"

#include <charconv>
#include <filesystem>
#include <stdexcept>

namespace liam::metrics {

namespace {

void check_lengths(std::span<const int> p, std::span<const int> t, std::span<const std::uint8_t> pad) {
  if (p.size() != t.size() || (!pad.empty() && pad.size() != t.size())) {
    throw std::invalid_argument("metric inputs disagree in length: " + std::to_string(p.size()) +
                                " predictions, " + std::to_string(t.size()) + " targets, " +
                                std::to_string(pad.size()) + " mask entries");
  }
}

bool is_pad(std::span<const std::uint8_t> pad, std::size_t i) { return !pad.empty() && pad[i]; }

std::string field(const std::optional<double>& v) {
  if (!v) return "";
  // Shortest round-trip form, so equal values always print identically.
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, *v);
  return std::string(buf, p);
}

}  // namespace

double accuracy(std::span<const int> predictions, std::span<const int> targets,
                std::span<const std::uint8_t> pad_mask) {
  check_lengths(predictions, targets, pad_mask);
  std::size_t hit = 0, total = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (is_pad(pad_mask, i)) continue;
    ++total;
    hit += predictions[i] == targets[i];
  }
  if (total == 0) throw std::invalid_argument("accuracy: every position is padded");
  return static_cast<double>(hit) / static_cast<double>(total);
}

double macro_f1(std::span<const int> predictions, std::span<const int> targets,
                std::span<const std::uint8_t> pad_mask, int num_classes) {
  check_lengths(predictions, targets, pad_mask);
  std::vector<std::size_t> tp(num_classes), fp(num_classes), fn(num_classes);
  std::vector<bool> seen(num_classes, false);
  bool any = false;
  auto in_range = [num_classes](int c) { return c >= 0 && c < num_classes; };
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (is_pad(pad_mask, i)) continue;
    any = true;
    const int p = predictions[i], t = targets[i];
    if (in_range(t)) seen[t] = true;
    if (in_range(p)) seen[p] = true;
    if (p == t) {
      if (in_range(t)) ++tp[t];
      continue;
    }
    if (in_range(p)) ++fp[p];
    if (in_range(t)) ++fn[t];
  }
  if (!any) throw std::invalid_argument("macro_f1: every position is padded");
  double sum = 0.0;
  int classes = 0;
  for (int c = 0; c < num_classes; ++c) {
    if (!seen[c]) continue;
    ++classes;
    const double denom = 2.0 * tp[c] + fp[c] + fn[c];
    sum += denom > 0 ? 2.0 * tp[c] / denom : 0.0;
  }
  return classes ? sum / classes : 0.0;
}

CsvWriter::CsvWriter(const std::string& path, bool append) {
  const bool fresh = !append || !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  out_.open(path, append ? std::ios::app : std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot open metrics file '" + path + "'");
  if (fresh) out_ << header() << '\n' << std::flush;
}

std::string CsvWriter::header() {
  return "step,split,loss,loss_ia,loss_ti,loss_action,loss_object,loss_gp,acc_i2a,acc_t2i,"
         "accuracy,macro_f1,tau_ia,tau_ti";
}

std::string CsvWriter::format(const MetricsRow& r) {
  std::string s = std::to_string(r.step) + "," + r.split;
  for (const auto* v : {&r.loss, &r.loss_ia, &r.loss_ti, &r.loss_action, &r.loss_object,
                        &r.loss_gp, &r.acc_i2a, &r.acc_t2i, &r.accuracy, &r.macro_f1, &r.tau_ia,
                        &r.tau_ti}) {
    s += "," + field(*v);
  }
  return s;
}

void CsvWriter::write(const MetricsRow& row) {
  out_ << format(row) << '\n' << std::flush;
}

}  // namespace liam::metrics

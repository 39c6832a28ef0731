#include "m3fend/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace m3fend::metrics {

namespace {
void check_input(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.empty()) throw std::invalid_argument("metrics: empty input");
  if (scores.size() != labels.size())
    throw std::invalid_argument("metrics: size mismatch");
}
}  // namespace

std::string MetricsReport::to_json() const {
  json j;
  j["overall"] = {{"acc", acc}, {"macro_f1", macro_f1}, {"auc", auc}, {"spauc", spauc}};
  json pd, pa;
  for (const auto& [d, f1] : per_domain_f1) pd[std::to_string(d)] = f1;
  for (const auto& [d, a] : per_domain_acc) pa[std::to_string(d)] = a;
  j["per_domain_f1"] = pd;
  j["per_domain_acc"] = pa;
  j["count"] = count;
  j["threshold"] = threshold;
  j["schema"] = "m3fend-report-v1";
  return j.dump(2);
}

double accuracy(const std::vector<double>& scores, const std::vector<int>& labels,
                double threshold) {
  check_input(scores, labels);
  int correct = 0;
  for (size_t i = 0; i < scores.size(); ++i)
    correct += (scores[i] >= threshold ? 1 : 0) == labels[i];
  return static_cast<double>(correct) / scores.size();
}

double macro_f1(const std::vector<double>& scores, const std::vector<int>& labels,
                double threshold) {
  check_input(scores, labels);
  double f1_sum = 0;
  for (int cls : {0, 1}) {
    long tp = 0, fp = 0, fn = 0;
    for (size_t i = 0; i < scores.size(); ++i) {
      int pred = scores[i] >= threshold ? 1 : 0;
      if (pred == cls && labels[i] == cls) ++tp;
      if (pred == cls && labels[i] != cls) ++fp;
      if (pred != cls && labels[i] == cls) ++fn;
    }
    double denom = 2.0 * tp + fp + fn;
    f1_sum += denom > 0 ? 2.0 * tp / denom : 0.0;
  }
  return f1_sum / 2.0;
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  check_input(scores, labels);
  long pos = std::count(labels.begin(), labels.end(), 1);
  long neg = static_cast<long>(labels.size()) - pos;
  if (pos == 0 || neg == 0)
    throw std::invalid_argument("auc: needs both classes present");

  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  // average ranks across ties
  std::vector<double> rank(scores.size());
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    double avg = (static_cast<double>(i) + j) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) rank[order[k]] = avg;
    i = j + 1;
  }
  double rank_sum = 0;
  for (size_t k = 0; k < labels.size(); ++k)
    if (labels[k] == 1) rank_sum += rank[k];
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (static_cast<double>(pos) * neg);
}

double spauc(const std::vector<double>& scores, const std::vector<int>& labels,
             double fpr_cap) {
  check_input(scores, labels);
  if (fpr_cap <= 0 || fpr_cap > 1)
    throw std::invalid_argument("spauc: fpr cap must be in (0,1]");
  long pos = std::count(labels.begin(), labels.end(), 1);
  long neg = static_cast<long>(labels.size()) - pos;
  if (pos == 0 || neg == 0)
    throw std::invalid_argument("spauc: needs both classes present");

  // Empirical ROC: sweep thresholds over distinct scores descending. Tied
  // scores advance TPR and FPR together, giving the diagonal tie segments
  // that match the average-rank AUC.
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  std::vector<std::pair<double, double>> roc;  // (FPR, TPR)
  roc.emplace_back(0.0, 0.0);
  long tp = 0, fp = 0;
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    for (size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1)
        ++tp;
      else
        ++fp;
    }
    roc.emplace_back(static_cast<double>(fp) / neg, static_cast<double>(tp) / pos);
    i = j + 1;
  }

  double pauc = 0;
  for (size_t k = 1; k < roc.size(); ++k) {
    auto [x0, y0] = roc[k - 1];
    auto [x1, y1] = roc[k];
    if (x0 >= fpr_cap) break;
    double xe = std::min(x1, fpr_cap);
    double ye = y1;
    if (x1 > x0 && x1 > fpr_cap)  // interpolate at the cap
      ye = y0 + (y1 - y0) * (fpr_cap - x0) / (x1 - x0);
    pauc += (xe - x0) * (y0 + ye) / 2.0;
  }
  double t = fpr_cap;
  double min_area = t * t / 2.0;
  return 0.5 * (1.0 + (pauc - min_area) / (t - min_area));
}

MetricsReport build_report(const std::vector<double>& scores,
                           const std::vector<int>& labels,
                           const std::vector<int>& domains) {
  check_input(scores, labels);
  MetricsReport r;
  r.count = static_cast<int>(scores.size());
  r.acc = accuracy(scores, labels);
  r.macro_f1 = macro_f1(scores, labels);
  r.auc = auc(scores, labels);
  r.spauc = spauc(scores, labels, 0.1);
  std::map<int, std::pair<std::vector<double>, std::vector<int>>> by_domain;
  for (size_t i = 0; i < scores.size(); ++i) {
    by_domain[domains[i]].first.push_back(scores[i]);
    by_domain[domains[i]].second.push_back(labels[i]);
  }
  for (const auto& [d, sl] : by_domain) {
    r.per_domain_f1[d] = macro_f1(sl.first, sl.second);
    r.per_domain_acc[d] = accuracy(sl.first, sl.second);
  }
  return r;
}

std::string emit_plot_data(const std::vector<std::vector<double>>& abs_a,
                           const std::vector<std::vector<double>>& w_by_domain,
                           const std::vector<std::string>& channel_labels) {
  json j;
  j["interactor_abs_a"] = abs_a;
  j["adapter_w_by_domain"] = w_by_domain;
  j["labels"] = {{"channels", channel_labels}};
  return j.dump(2);
}

}  // namespace m3fend::metrics

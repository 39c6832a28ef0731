#pragma once

#include <map>
#include <string>
#include <vector>

namespace m3fend::metrics {

struct MetricsReport {
  double acc = 0, macro_f1 = 0, auc = 0, spauc = 0;
  std::map<int, double> per_domain_f1;
  std::map<int, double> per_domain_acc;
  int count = 0;
  double threshold = 0.5;
  std::string to_json() const;
};

// preds thresholded at 0.5
double accuracy(const std::vector<double>& scores, const std::vector<int>& labels,
                double threshold = 0.5);
// unweighted mean of per-class F1 over {real, fake}; absent class scores 0
double macro_f1(const std::vector<double>& scores, const std::vector<int>& labels,
                double threshold = 0.5);

// Rank-statistic AUC with average-rank tie handling; throws if one class is
// absent.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Standardized partial AUC at FPR <= t (McClish): trapezoid over the
// empirical ROC with interpolation at t, rescaled so random=0.5, perfect=1.
double spauc(const std::vector<double>& scores, const std::vector<int>& labels,
             double fpr_cap = 0.1);

MetricsReport build_report(const std::vector<double>& scores,
                           const std::vector<int>& labels,
                           const std::vector<int>& domains);

// Heatmap payload: |a| per (head, channel) and mean adapter weight per
// (domain, head).
std::string emit_plot_data(const std::vector<std::vector<double>>& abs_a,
                           const std::vector<std::vector<double>>& w_by_domain,
                           const std::vector<std::string>& channel_labels);

}  // namespace m3fend::metrics

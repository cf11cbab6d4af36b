#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include <json.hpp>

#include "uvsd/types.hpp"

namespace uvsd {

inline double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.empty()) throw Error("accuracy: empty input");
  if (predictions.size() != labels.size()) throw Error("accuracy: length mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == labels[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

// Mann-Whitney AUC: probability that a random positive outscores a random
// negative, ties counted as 0.5. Computed from average ranks with exact
// integer arithmetic (ranks are multiples of 1/2).
inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw Error("auc: length mismatch");
  const auto n = scores.size();
  long long n_pos = 0, n_neg = 0;
  for (int l : labels) (l == 1 ? n_pos : n_neg) += 1;
  if (n_pos == 0 || n_neg == 0) throw Error("auc: both classes must be present");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  long long twice_rank_sum_pos = 0;  // sum of 2*avg_rank over positives
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const long long twice_avg_rank = static_cast<long long>(i + 1) + static_cast<long long>(j);
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) twice_rank_sum_pos += twice_avg_rank;
    i = j;
  }
  const long long numerator = twice_rank_sum_pos - n_pos * (n_pos + 1);
  return static_cast<double>(numerator) / static_cast<double>(2 * n_pos * n_neg);
}

struct EvalReport {
  double accuracy = 0.0;
  double auc = 0.0;
  std::array<std::array<long, 2>, 2> confusion{};  // [actual][predicted]
  double sbp = 1.0;
};

inline EvalReport evaluate_scores(const std::vector<double>& scores,
                                  const std::vector<int>& labels, double sbp) {
  EvalReport report;
  report.sbp = sbp;
  std::vector<int> predictions(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) predictions[i] = scores[i] >= 0.5 ? 1 : 0;
  report.accuracy = accuracy(predictions, labels);
  report.auc = auc(scores, labels);
  for (std::size_t i = 0; i < labels.size(); ++i)
    report.confusion[labels[i]][predictions[i]] += 1;
  return report;
}

inline nlohmann::json report_to_json(const EvalReport& r) {
  return {{"accuracy", r.accuracy},
          {"auc", r.auc},
          {"confusion", {{r.confusion[0][0], r.confusion[0][1]},
                         {r.confusion[1][0], r.confusion[1][1]}}},
          {"sbp", r.sbp}};
}

}  // namespace uvsd

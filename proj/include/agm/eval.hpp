// Copyright 2026 the agm authors.
// SPDX-License-Identifier: Apache-2.0
//
// Instance-level average precision and pixel-level confusion counts.

#ifndef AGM_EVAL_HPP
#define AGM_EVAL_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "agm/grid.hpp"
#include "agm/instance.hpp"

namespace agm {

/// One mask for evaluation. Pixels are sorted linear indices; predictions
/// carry a confidence, ground truth ignores it.
struct EvalInstance {
  int class_id = 0;
  double confidence = 0.0;
  std::vector<int64_t> pixels;
};

inline double mask_iou(const std::vector<int64_t>& a, const std::vector<int64_t>& b) {
  if (a.empty() && b.empty())
    throw std::invalid_argument("mask_iou: both masks empty");
  size_t inter = 0, i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Average precision for one class at one IoU threshold. Predictions are
/// visited in descending confidence; each greedily claims the unmatched
/// ground truth of highest IoU when that IoU clears the threshold. The
/// precision/recall curve is integrated with all-point interpolation.
inline double ap_single(std::vector<EvalInstance> preds,
                        const std::vector<EvalInstance>& gts, double iou_t) {
  if (iou_t <= 0.0 || iou_t > 1.0)
    throw std::invalid_argument("iou threshold must be in (0,1]");
  if (gts.empty()) throw std::invalid_argument("ap_single: no ground truth");
  if (preds.empty()) return 0.0;

  std::stable_sort(preds.begin(), preds.end(),
                   [](const EvalInstance& a, const EvalInstance& b) {
                     return a.confidence > b.confidence;
                   });
  std::vector<char> claimed(gts.size(), 0);
  std::vector<char> tp(preds.size(), 0);
  for (size_t p = 0; p < preds.size(); ++p) {
    double best = 0.0;
    int best_gt = -1;
    for (size_t g = 0; g < gts.size(); ++g) {
      if (claimed[g]) continue;
      double iou = mask_iou(preds[p].pixels, gts[g].pixels);
      if (iou >= iou_t && iou > best) {
        best = iou;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      claimed[static_cast<size_t>(best_gt)] = 1;
      tp[p] = 1;
    }
  }

  const double n_gt = static_cast<double>(gts.size());
  std::vector<double> precision(preds.size()), recall(preds.size());
  int tps = 0;
  for (size_t p = 0; p < preds.size(); ++p) {
    tps += tp[p];
    precision[p] = static_cast<double>(tps) / static_cast<double>(p + 1);
    recall[p] = static_cast<double>(tps) / n_gt;
  }
  for (size_t p = precision.size() - 1; p > 0; --p)
    precision[p - 1] = std::max(precision[p - 1], precision[p]);

  double ap = 0.0, prev_recall = 0.0;
  for (size_t p = 0; p < preds.size(); ++p) {
    ap += (recall[p] - prev_recall) * precision[p];
    prev_recall = recall[p];
  }
  return ap;
}

struct ApReport {
  double ap = 0.0;    // mean over classes present in ground truth
  double ap50 = 0.0;  // same mean at IoU 0.5 only
  std::map<int, double> per_class_ap;
  std::vector<double> thresholds;
};

/// COCO-style sweep: thresholds 0.50 to 0.95 in steps of 0.05, averaged per
/// class and then across the classes present in the ground truth.
inline ApReport ap_report(const std::vector<EvalInstance>& preds,
                          const std::vector<EvalInstance>& gts) {
  if (gts.empty()) throw std::invalid_argument("ap_report: no ground truth");
  ApReport report;
  for (int k = 0; k < 10; ++k) report.thresholds.push_back(0.5 + 0.05 * k);

  std::map<int, std::vector<EvalInstance>> gt_by_class, pred_by_class;
  for (const EvalInstance& g : gts) gt_by_class[g.class_id].push_back(g);
  for (const EvalInstance& p : preds) pred_by_class[p.class_id].push_back(p);

  double sum = 0.0, sum50 = 0.0;
  for (auto& [cls, class_gts] : gt_by_class) {
    const std::vector<EvalInstance>& class_preds = pred_by_class[cls];
    double class_sum = 0.0;
    double class_ap50 = 0.0;
    for (double t : report.thresholds) {
      double ap = ap_single(class_preds, class_gts, t);
      class_sum += ap;
      if (t == 0.5) class_ap50 = ap;
    }
    double class_ap = class_sum / static_cast<double>(report.thresholds.size());
    report.per_class_ap[cls] = class_ap;
    sum += class_ap;
    sum50 += class_ap50;
  }
  report.ap = sum / static_cast<double>(gt_by_class.size());
  report.ap50 = sum50 / static_cast<double>(gt_by_class.size());
  return report;
}

/// Pixel counts: entry [gt * (m+1) + pred] counts pixels whose ground-truth
/// class is gt and predicted class is pred. Row sums therefore recover the
/// ground-truth class histogram.
inline std::vector<int64_t> confusion_matrix(const LabelMap& predicted,
                                             const LabelMap& truth, int class_count) {
  if (predicted.h != truth.h || predicted.w != truth.w)
    throw std::invalid_argument("confusion_matrix: dimension mismatch");
  const int n = class_count + 1;
  std::vector<int64_t> counts(static_cast<size_t>(n) * n, 0);
  for (int y = 0; y < truth.h; ++y)
    for (int x = 0; x < truth.w; ++x) {
      int g = truth.at(y, x), p = predicted.at(y, x);
      if (g < 0 || g > class_count || p < 0 || p > class_count)
        throw std::invalid_argument("confusion_matrix: label out of range");
      ++counts[static_cast<size_t>(g) * n + p];
    }
  return counts;
}

/// Builds evaluation instances from a label map plus per-id class (and
/// confidence) records, for wiring file-based evaluation.
inline std::vector<EvalInstance> instances_from_labels(
    const LabelMap& labels, const std::vector<InstanceRecord>& records) {
  std::map<int, size_t> index;
  std::vector<EvalInstance> out(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    out[i].class_id = records[i].class_id;
    out[i].confidence = records[i].confidence;
    index[records[i].id] = i;
  }
  for (int y = 0; y < labels.h; ++y)
    for (int x = 0; x < labels.w; ++x) {
      int id = labels.at(y, x);
      if (id == 0) continue;
      auto it = index.find(id);
      if (it == index.end())
        throw std::invalid_argument("label map references unknown instance id " +
                                    std::to_string(id));
      out[it->second].pixels.push_back(static_cast<int64_t>(y) * labels.w + x);
    }
  return out;
}

}  // namespace agm

#endif  // AGM_EVAL_HPP

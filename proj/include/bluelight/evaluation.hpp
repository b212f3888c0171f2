#pragma once

#include <algorithm>
#include <array>
#include <numeric>
#include <set>
#include <vector>

#include "bluelight/dataset_io.hpp"
#include "bluelight/errors.hpp"

namespace bluelight {

// One image's worth of evaluation data. vehicle_ids may be empty when the
// grouping is unknown; vehicle-level metrics then refuse to run.
struct Scene {
  std::vector<LabeledBox> ground_truth;
  std::vector<int> vehicle_ids;
  std::vector<Detection> predictions;

  bool has_vehicle_ids() const {
    return vehicle_ids.size() == ground_truth.size();
  }
};

inline double iou(const LabeledBox& a, const LabeledBox& b) {
  const double ix = std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min());
  const double iy = std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min());
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  return inter / (a.area() + b.area() - inter);
}

// Standard one-to-one matching: predictions at or above the confidence
// threshold are visited in descending confidence order (ties broken by the
// original index) and each takes the unmatched ground-truth box of highest
// IoU, provided IoU > tau.
struct MatchResult {
  int tp = 0, fp = 0, fn = 0;
  std::vector<bool> matched_gt;    // size = |ground_truth|
  std::vector<bool> matched_pred;  // size = |predictions|; below-threshold stays false
};

namespace detail {

inline std::vector<int> confidence_order(const std::vector<Detection>& preds,
                                         double conf_threshold) {
  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(preds.size()); ++i) {
    if (preds[i].confidence >= conf_threshold) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (preds[a].confidence != preds[b].confidence) {
      return preds[a].confidence > preds[b].confidence;
    }
    return a < b;
  });
  return order;
}

}  // namespace detail

inline MatchResult match_standard(const Scene& scene, double conf_threshold,
                                  double tau = 0.5) {
  MatchResult result;
  result.matched_gt.assign(scene.ground_truth.size(), false);
  result.matched_pred.assign(scene.predictions.size(), false);
  const auto order = detail::confidence_order(scene.predictions, conf_threshold);
  for (int pred_idx : order) {
    int best_gt = -1;
    double best_iou = tau;  // strict: IoU must exceed tau
    for (int g = 0; g < static_cast<int>(scene.ground_truth.size()); ++g) {
      if (result.matched_gt[g]) continue;
      const double overlap = iou(scene.predictions[pred_idx].box, scene.ground_truth[g]);
      if (overlap > best_iou) {
        best_iou = overlap;
        best_gt = g;
      }
    }
    if (best_gt >= 0) {
      result.matched_gt[best_gt] = true;
      result.matched_pred[pred_idx] = true;
      ++result.tp;
    } else {
      ++result.fp;
    }
  }
  result.fn = static_cast<int>(scene.ground_truth.size()) - result.tp;
  return result;
}

// Ratio with the no-denominator convention used throughout: undefined ratios
// report 1.0 plus a flag, so sweep curves stay total without inventing a
// penalty.
struct MetricValue {
  double value = 1.0;
  bool defined = false;
};

inline MetricValue metric_ratio(long numerator, long denominator) {
  if (denominator == 0) return {1.0, false};
  return {static_cast<double>(numerator) / static_cast<double>(denominator), true};
}

// Bulb-array counts for one scene: a ground-truth box is matched when at
// least one kept prediction overlaps it with IoU > tau; every box counts at
// most once regardless of how many predictions hit it.
struct BulbArrayCounts {
  long matched_gt = 0;
  long num_predictions = 0;  // M, after confidence filtering
  long num_ground_truth = 0;  // N
};

inline BulbArrayCounts bulb_array_counts(const Scene& scene, double conf_threshold,
                                         double tau) {
  BulbArrayCounts counts;
  counts.num_ground_truth = static_cast<long>(scene.ground_truth.size());
  std::vector<int> kept;
  for (int i = 0; i < static_cast<int>(scene.predictions.size()); ++i) {
    if (scene.predictions[i].confidence >= conf_threshold) kept.push_back(i);
  }
  counts.num_predictions = static_cast<long>(kept.size());
  for (const auto& gt : scene.ground_truth) {
    for (int pred_idx : kept) {
      if (iou(scene.predictions[pred_idx].box, gt) > tau) {
        ++counts.matched_gt;
        break;
      }
    }
  }
  return counts;
}

struct BulbArrayMetrics {
  MetricValue precision;  // matched_gt / M
  MetricValue recall;     // matched_gt / N
  BulbArrayCounts counts;
};

inline BulbArrayMetrics bulb_array_metrics(const Scene& scene, double conf_threshold,
                                           double tau = 0.5) {
  BulbArrayMetrics m;
  m.counts = bulb_array_counts(scene, conf_threshold, tau);
  m.precision = metric_ratio(m.counts.matched_gt, m.counts.num_predictions);
  m.recall = metric_ratio(m.counts.matched_gt, m.counts.num_ground_truth);
  return m;
}

// Vehicle-level counts. A ground-truth vehicle is detected when any kept
// prediction overlaps any of its bulbs with IoU > tau. Predictions are
// grouped into predicted vehicles by overlap assignment: every prediction
// overlapping at least one bulb joins that vehicle's predicted group, and
// each prediction overlapping nothing forms its own singleton, so
// L = detected + singletons.
struct VehicleCounts {
  long detected = 0;        // ground-truth vehicles with >= 1 overlapping prediction
  long num_vehicles = 0;    // K
  long num_predicted = 0;   // L = detected + singleton_fp
  long singleton_fp = 0;
};

inline VehicleCounts vehicle_counts(const Scene& scene, double conf_threshold,
                                    double tau) {
  if (!scene.ground_truth.empty() && !scene.has_vehicle_ids()) {
    throw MissingVehicleIds("vehicle metrics need a vehicle grouping per annotation");
  }
  VehicleCounts counts;
  std::set<int> vehicles(scene.vehicle_ids.begin(), scene.vehicle_ids.end());
  counts.num_vehicles = static_cast<long>(vehicles.size());
  std::set<int> detected;
  for (const auto& det : scene.predictions) {
    if (det.confidence < conf_threshold) continue;
    bool overlapped_any = false;
    for (int g = 0; g < static_cast<int>(scene.ground_truth.size()); ++g) {
      if (iou(det.box, scene.ground_truth[g]) > tau) {
        overlapped_any = true;
        detected.insert(scene.vehicle_ids[g]);
      }
    }
    if (!overlapped_any) ++counts.singleton_fp;
  }
  counts.detected = static_cast<long>(detected.size());
  counts.num_predicted = counts.detected + counts.singleton_fp;
  return counts;
}

struct VehicleMetrics {
  MetricValue precision;  // detected / L
  MetricValue recall;     // detected / K
  VehicleCounts counts;
};

inline VehicleMetrics vehicle_metrics(const Scene& scene, double conf_threshold,
                                      double tau = 0.5) {
  VehicleMetrics m;
  m.counts = vehicle_counts(scene, conf_threshold, tau);
  m.precision = metric_ratio(m.counts.detected, m.counts.num_predicted);
  m.recall = metric_ratio(m.counts.detected, m.counts.num_vehicles);
  return m;
}

inline double f1_score(double precision, double recall) {
  const double sum = precision + recall;
  return sum > 0.0 ? 2.0 * precision * recall / sum : 0.0;
}

// All-point interpolated average precision at one IoU threshold, pooled over
// scenes. Single class, so AP and mAP coincide.
inline double average_precision(const std::vector<Scene>& scenes, double tau) {
  struct Ranked {
    double confidence;
    int scene_idx;
    int pred_idx;
    bool is_tp;
  };
  std::vector<Ranked> ranked;
  long total_gt = 0;
  for (int s = 0; s < static_cast<int>(scenes.size()); ++s) {
    const Scene& scene = scenes[s];
    total_gt += static_cast<long>(scene.ground_truth.size());
    const MatchResult match = match_standard(scene, 0.0, tau);
    for (int p = 0; p < static_cast<int>(scene.predictions.size()); ++p) {
      ranked.push_back({scene.predictions[p].confidence, s, p, match.matched_pred[p]});
    }
  }
  if (ranked.empty() || total_gt == 0) return 0.0;
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.scene_idx != b.scene_idx) return a.scene_idx < b.scene_idx;
    return a.pred_idx < b.pred_idx;
  });
  const std::size_t n = ranked.size();
  std::vector<double> precision(n), recall(n);
  long tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ranked[i].is_tp) ++tp;
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    recall[i] = static_cast<double>(tp) / static_cast<double>(total_gt);
  }
  // Precision envelope from the right, integrated over recall steps.
  double ap = 0.0;
  double envelope = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    envelope = std::max(envelope, precision[i]);
    const double prev_recall = i > 0 ? recall[i - 1] : 0.0;
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * envelope;
    }
  }
  return ap;
}

struct MapScores {
  double map50 = 0.0;
  double map50_95 = 0.0;
  std::array<double, 10> per_tau{};  // tau = 0.50, 0.55, ..., 0.95
};

inline MapScores map_scores(const std::vector<Scene>& scenes) {
  MapScores scores;
  for (int i = 0; i < 10; ++i) {
    const double tau = 0.50 + 0.05 * i;
    scores.per_tau[i] = average_precision(scenes, tau);
  }
  scores.map50 = scores.per_tau[0];
  scores.map50_95 =
      std::accumulate(scores.per_tau.begin(), scores.per_tau.end(), 0.0) / 10.0;
  return scores;
}

// One row of a confidence sweep: micro-averaged over all scenes (counts are
// pooled before the ratios are taken).
struct SweepPoint {
  double theta = 0.0;
  double p_ba = 1.0, r_ba = 1.0, f1_ba = 0.0;
  double p_v = 1.0, r_v = 1.0, f1_v = 0.0;
  bool p_ba_defined = false, r_ba_defined = false;
  bool p_v_defined = false, r_v_defined = false;
  long tp = 0, fp = 0, fn = 0;
  long predictions_kept = 0;
};

inline SweepPoint sweep_point(const std::vector<Scene>& scenes, double theta,
                              double tau) {
  SweepPoint point;
  point.theta = theta;
  long matched_gt = 0, num_pred = 0, num_gt = 0;
  long detected = 0, num_vehicles = 0, num_predicted = 0;
  for (const Scene& scene : scenes) {
    const BulbArrayCounts ba = bulb_array_counts(scene, theta, tau);
    matched_gt += ba.matched_gt;
    num_pred += ba.num_predictions;
    num_gt += ba.num_ground_truth;
    const VehicleCounts v = vehicle_counts(scene, theta, tau);
    detected += v.detected;
    num_vehicles += v.num_vehicles;
    num_predicted += v.num_predicted;
    const MatchResult match = match_standard(scene, theta, tau);
    point.tp += match.tp;
    point.fp += match.fp;
    point.fn += match.fn;
  }
  point.predictions_kept = point.tp + point.fp;
  const MetricValue p_ba = metric_ratio(matched_gt, num_pred);
  const MetricValue r_ba = metric_ratio(matched_gt, num_gt);
  const MetricValue p_v = metric_ratio(detected, num_predicted);
  const MetricValue r_v = metric_ratio(detected, num_vehicles);
  point.p_ba = p_ba.value;
  point.p_ba_defined = p_ba.defined;
  point.r_ba = r_ba.value;
  point.r_ba_defined = r_ba.defined;
  point.p_v = p_v.value;
  point.p_v_defined = p_v.defined;
  point.r_v = r_v.value;
  point.r_v_defined = r_v.defined;
  point.f1_ba = f1_score(point.p_ba, point.r_ba);
  point.f1_v = f1_score(point.p_v, point.r_v);
  return point;
}

inline std::vector<SweepPoint> threshold_sweep(const std::vector<Scene>& scenes,
                                               const std::vector<double>& thetas,
                                               double tau = 0.5) {
  std::vector<SweepPoint> points;
  points.reserve(thetas.size());
  for (double theta : thetas) {
    points.push_back(sweep_point(scenes, theta, tau));
  }
  return points;
}

struct ConfusionCounts {
  long tp = 0, fp = 0, fn = 0;
};

inline ConfusionCounts confusion_counts(const std::vector<Scene>& scenes,
                                        double conf_threshold, double tau = 0.5) {
  ConfusionCounts counts;
  for (const Scene& scene : scenes) {
    const MatchResult match = match_standard(scene, conf_threshold, tau);
    counts.tp += match.tp;
    counts.fp += match.fp;
    counts.fn += match.fn;
  }
  return counts;
}

}  // namespace bluelight

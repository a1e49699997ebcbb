#pragma once

#include <array>
#include <string>
#include <vector>

#include "posesync/geometry.h"

namespace posesync {

inline constexpr double kDefaultRecallThreshold = 0.2;  // meters, indoor
inline constexpr std::array<double, 5> kRotationThresholdsDeg = {3.0, 5.0, 10.0, 30.0, 45.0};
inline constexpr std::array<double, 5> kTranslationThresholdsM = {0.05, 0.1, 0.25, 0.5, 0.75};

struct PoseError {
  double rotation_deg = 0.0;
  double translation_m = 0.0;
};

// Errors of the predicted relative pose pred_i^-1 * pred_j against
// gt_i^-1 * gt_j; translation error is the Euclidean norm.
PoseError PoseErrors(const RigidTransform& pred_i, const RigidTransform& pred_j,
                     const RigidTransform& gt_i, const RigidTransform& gt_j);

// A scan pair to score, with points expressed in scan j's frame.
struct EvalPair {
  int i = 0;
  int j = 0;
  std::vector<Vec3> points;
};

struct PairRecord {
  int i = 0;
  int j = 0;
  double rotation_deg = 0.0;
  double translation_m = 0.0;
  double mean_point_distance = 0.0;
  bool success = false;
};

// Mean distance between `points` mapped by the predicted and by the
// ground-truth relative pose of each pair.
std::vector<PairRecord> EvaluatePairs(const std::vector<RigidTransform>& pred,
                                      const std::vector<RigidTransform>& gt,
                                      const std::vector<EvalPair>& pairs, double dist_threshold);

// Fraction of pairs whose mean point distance is below the threshold. Throws
// kEmptyEvaluationSet on an empty pair list.
double RegistrationRecall(const std::vector<RigidTransform>& pred,
                          const std::vector<RigidTransform>& gt,
                          const std::vector<EvalPair>& pairs, double dist_threshold);

struct EcdfTable {
  std::array<double, 5> rotation{};
  std::array<double, 5> translation{};
  double mean_rotation_deg = 0.0;
  double median_rotation_deg = 0.0;
  double mean_translation_m = 0.0;
  double median_translation_m = 0.0;
};

// Throws kEmptyInput on an empty list.
EcdfTable EcdfReport(const std::vector<PoseError>& errors);

double Median(std::vector<double> values);

struct MetricsReport {
  std::vector<PairRecord> pairs;
  double recall = 0.0;
  EcdfTable ecdf;
};

MetricsReport BuildMetricsReport(const std::vector<RigidTransform>& pred,
                                 const std::vector<RigidTransform>& gt,
                                 const std::vector<EvalPair>& pairs, double dist_threshold);

// CSV with columns i,j,re_deg,te_m,mean_dist_m,success.
std::string ReportCsv(const MetricsReport& report);
std::string ReportSummary(const MetricsReport& report, double dist_threshold);

}  // namespace posesync

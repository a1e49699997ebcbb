#include "posesync/eval.h"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "posesync/error.h"

namespace posesync {

PoseError PoseErrors(const RigidTransform& pred_i, const RigidTransform& pred_j,
                     const RigidTransform& gt_i, const RigidTransform& gt_j) {
  const RigidTransform pred = RelativePose(pred_i, pred_j);
  const RigidTransform gt = RelativePose(gt_i, gt_j);
  return {AngularDistance(pred.rotation, gt.rotation), (pred.translation - gt.translation).norm()};
}

std::vector<PairRecord> EvaluatePairs(const std::vector<RigidTransform>& pred,
                                      const std::vector<RigidTransform>& gt,
                                      const std::vector<EvalPair>& pairs, double dist_threshold) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "eval",
                "predicted and ground-truth pose counts differ");
  }
  std::vector<PairRecord> records;
  records.reserve(pairs.size());
  for (const EvalPair& pair : pairs) {
    if (pair.i < 0 || pair.j < 0 || pair.i >= static_cast<int>(pred.size()) ||
        pair.j >= static_cast<int>(pred.size())) {
      throw Error(ErrorCode::kOutOfRange, "eval", "evaluation pair references a missing pose");
    }
    const PoseError err = PoseErrors(pred[pair.i], pred[pair.j], gt[pair.i], gt[pair.j]);
    const RigidTransform t_pred = RelativePose(pred[pair.i], pred[pair.j]);
    const RigidTransform t_gt = RelativePose(gt[pair.i], gt[pair.j]);
    double sum = 0.0;
    for (const Vec3& p : pair.points) sum += (t_pred * p - t_gt * p).norm();
    PairRecord rec;
    rec.i = pair.i;
    rec.j = pair.j;
    rec.rotation_deg = err.rotation_deg;
    rec.translation_m = err.translation_m;
    rec.mean_point_distance = pair.points.empty() ? 0.0 : sum / pair.points.size();
    rec.success = rec.mean_point_distance < dist_threshold;
    records.push_back(rec);
  }
  return records;
}

double RegistrationRecall(const std::vector<RigidTransform>& pred,
                          const std::vector<RigidTransform>& gt,
                          const std::vector<EvalPair>& pairs, double dist_threshold) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyEvaluationSet, "eval", "no evaluation pairs");
  const auto records = EvaluatePairs(pred, gt, pairs, dist_threshold);
  const auto ok = std::count_if(records.begin(), records.end(),
                                [](const PairRecord& r) { return r.success; });
  return static_cast<double>(ok) / static_cast<double>(records.size());
}

double Median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "eval", "median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  return values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
}

EcdfTable EcdfReport(const std::vector<PoseError>& errors) {
  if (errors.empty()) throw Error(ErrorCode::kEmptyInput, "eval", "ECDF of an empty error list");
  EcdfTable table;
  std::vector<double> re;
  std::vector<double> te;
  for (const PoseError& e : errors) {
    re.push_back(e.rotation_deg);
    te.push_back(e.translation_m);
  }
  const double n = static_cast<double>(errors.size());
  for (std::size_t k = 0; k < kRotationThresholdsDeg.size(); ++k) {
    table.rotation[k] = std::count_if(re.begin(), re.end(),
                                      [&](double v) { return v <= kRotationThresholdsDeg[k]; }) / n;
    table.translation[k] = std::count_if(te.begin(), te.end(),
                                         [&](double v) { return v <= kTranslationThresholdsM[k]; }) / n;
  }
  table.mean_rotation_deg = std::accumulate(re.begin(), re.end(), 0.0) / n;
  table.mean_translation_m = std::accumulate(te.begin(), te.end(), 0.0) / n;
  table.median_rotation_deg = Median(re);
  table.median_translation_m = Median(te);
  return table;
}

MetricsReport BuildMetricsReport(const std::vector<RigidTransform>& pred,
                                 const std::vector<RigidTransform>& gt,
                                 const std::vector<EvalPair>& pairs, double dist_threshold) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyEvaluationSet, "eval", "no evaluation pairs");
  MetricsReport report;
  report.pairs = EvaluatePairs(pred, gt, pairs, dist_threshold);
  std::vector<PoseError> errors;
  std::size_t ok = 0;
  for (const PairRecord& r : report.pairs) {
    errors.push_back({r.rotation_deg, r.translation_m});
    if (r.success) ++ok;
  }
  report.recall = static_cast<double>(ok) / static_cast<double>(report.pairs.size());
  report.ecdf = EcdfReport(errors);
  return report;
}

std::string ReportCsv(const MetricsReport& report) {
  std::ostringstream ss;
  ss.precision(17);
  ss << "i,j,re_deg,te_m,mean_dist_m,success\n";
  for (const PairRecord& r : report.pairs) {
    ss << r.i << ',' << r.j << ',' << r.rotation_deg << ',' << r.translation_m << ','
       << r.mean_point_distance << ',' << (r.success ? 1 : 0) << '\n';
  }
  return ss.str();
}

std::string ReportSummary(const MetricsReport& report, double dist_threshold) {
  std::ostringstream ss;
  char line[160];
  std::snprintf(line, sizeof(line), "pairs evaluated: %zu\n", report.pairs.size());
  ss << line;
  std::snprintf(line, sizeof(line), "registration recall (< %.3f m): %.4f\n", dist_threshold,
                report.recall);
  ss << line;
  std::snprintf(line, sizeof(line), "rotation error mean/median: %.4f / %.4f deg\n",
                report.ecdf.mean_rotation_deg, report.ecdf.median_rotation_deg);
  ss << line;
  std::snprintf(line, sizeof(line), "translation error mean/median: %.4f / %.4f m\n",
                report.ecdf.mean_translation_m, report.ecdf.median_translation_m);
  ss << line;
  ss << "rotation ECDF:";
  for (std::size_t k = 0; k < kRotationThresholdsDeg.size(); ++k) {
    std::snprintf(line, sizeof(line), " %g deg=%.4f", kRotationThresholdsDeg[k],
                  report.ecdf.rotation[k]);
    ss << line;
  }
  ss << "\ntranslation ECDF:";
  for (std::size_t k = 0; k < kTranslationThresholdsM.size(); ++k) {
    std::snprintf(line, sizeof(line), " %g m=%.4f", kTranslationThresholdsM[k],
                  report.ecdf.translation[k]);
    ss << line;
  }
  ss << '\n';
  return ss.str();
}

}  // namespace posesync

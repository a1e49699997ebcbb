#include "posesync/geometry.h"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "posesync/error.h"

namespace posesync {

bool IsRotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho = (r * r.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho < tol && std::abs(r.determinant() - 1.0) < tol;
}

Rotation3 AxisAngleRotation(const Vec3& axis, double angle_deg) {
  return Eigen::AngleAxisd(DegToRad(angle_deg), axis.normalized()).toRotationMatrix();
}

RigidTransform RigidTransform::FromMatrix(const Mat4& m) {
  RigidTransform t;
  t.rotation = m.topLeftCorner<3, 3>();
  t.translation = m.topRightCorner<3, 1>();
  return t;
}

Mat4 RigidTransform::ToMatrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

RigidTransform RigidTransform::Inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
  RigidTransform out;
  out.rotation = rotation * rhs.rotation;
  out.translation = rotation * rhs.translation + translation;
  return out;
}

RigidTransform RelativePose(const RigidTransform& pose_i,
                            const RigidTransform& pose_j) {
  RigidTransform rel;
  rel.rotation = pose_i.rotation.transpose() * pose_j.rotation;
  rel.translation = pose_i.rotation.transpose() * (pose_j.translation - pose_i.translation);
  return rel;
}

double AngularDistance(const Rotation3& a, const Rotation3& b) {
  // atan2 of the sine and cosine parts of a^T b; agrees with the clamped
  // arccos((tr - 1) / 2) but keeps full precision near 0 and 180 degrees.
  const Mat3 d = a.transpose() * b;
  const double cos_part = std::clamp((d.trace() - 1.0) / 2.0, -1.0, 1.0);
  const Vec3 skew(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
  const double sin_part = std::min(1.0, 0.5 * skew.norm());
  const double angle = RadToDeg(std::atan2(sin_part, cos_part));
  return std::clamp(angle, 0.0, 180.0);
}

Rotation3 ProjectToSO3(const Mat3& m) {
  if (!m.allFinite()) {
    throw Error(ErrorCode::kDegenerateMatrix, "geometry", "non-finite matrix");
  }
  const Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  if (svd.singularValues()(2) <= 1e-12) {
    throw Error(ErrorCode::kDegenerateMatrix, "geometry",
                "singular value " + std::to_string(svd.singularValues()(2)) +
                    " <= 1e-12");
  }
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return u * d * v.transpose();
}

RigidTransform FitRigid(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "geometry",
                "fit_rigid: " + std::to_string(src.size()) + " source vs " +
                    std::to_string(dst.size()) + " target points");
  }
  if (src.size() < 3) {
    throw Error(ErrorCode::kDegenerateConfiguration, "geometry",
                "fit_rigid needs at least 3 point pairs");
  }
  const double n = static_cast<double>(src.size());
  Vec3 src_mean = Vec3::Zero();
  Vec3 dst_mean = Vec3::Zero();
  for (std::size_t k = 0; k < src.size(); ++k) {
    src_mean += src[k];
    dst_mean += dst[k];
  }
  src_mean /= n;
  dst_mean /= n;

  Mat3 cov = Mat3::Zero();
  for (std::size_t k = 0; k < src.size(); ++k) {
    cov += (dst[k] - dst_mean) * (src[k] - src_mean).transpose();
  }
  const Eigen::JacobiSVD<Mat3> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) <= 1e-12 * sv(0)) {
    throw Error(ErrorCode::kDegenerateConfiguration, "geometry",
                "cross-covariance rank < 2 (collinear or coincident points)");
  }
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;

  RigidTransform t;
  t.rotation = u * d * v.transpose();
  t.translation = dst_mean - t.rotation * src_mean;
  return t;
}

}  // namespace posesync

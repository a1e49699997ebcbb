#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace posesync {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// A 3x3 rotation matrix. Kept as a plain matrix since every synchronization
// formula is written in matrix form; use IsRotation() to check membership.
using Rotation3 = Eigen::Matrix3d;

inline constexpr double kPi = 3.14159265358979323846;
inline double DegToRad(double deg) { return deg * kPi / 180.0; }
inline double RadToDeg(double rad) { return rad * 180.0 / kPi; }

// Orthonormal within 1e-9 (max-abs entry of R*R^T - I) and det within 1e-9
// of +1.
bool IsRotation(const Mat3& r, double tol = 1e-9);

// Rotation by `angle_deg` about `axis` (normalized internally).
Rotation3 AxisAngleRotation(const Vec3& axis, double angle_deg);

// Element of SE(3). Maps points x -> rotation * x + translation.
struct RigidTransform {
  Rotation3 rotation = Rotation3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform Identity() { return {}; }
  static RigidTransform FromMatrix(const Mat4& m);

  Mat4 ToMatrix() const;
  RigidTransform Inverse() const;
  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform operator*(const RigidTransform& rhs) const;

  bool operator==(const RigidTransform&) const = default;
};

inline RigidTransform Compose(const RigidTransform& a, const RigidTransform& b) {
  return a * b;
}
inline RigidTransform Invert(const RigidTransform& t) { return t.Inverse(); }

// Relative transform mapping frame j into frame i, i.e. pose_i^-1 * pose_j,
// for camera-to-world poses.
RigidTransform RelativePose(const RigidTransform& pose_i,
                            const RigidTransform& pose_j);

// Geodesic angle between two rotations in degrees, in [0, 180]. Never NaN.
double AngularDistance(const Rotation3& a, const Rotation3& b);

// Frobenius-nearest proper rotation to `m` (SVD with determinant
// correction). Throws kDegenerateMatrix if a singular value is <= 1e-12.
Rotation3 ProjectToSO3(const Mat3& m);

// Least-squares rigid transform T minimizing sum |dst_i - T*src_i|^2.
// Throws kDimensionMismatch on unequal sizes, kDegenerateConfiguration when
// fewer than 3 points are given or the centered cross-covariance has rank < 2.
RigidTransform FitRigid(std::span<const Vec3> src, std::span<const Vec3> dst);

}  // namespace posesync

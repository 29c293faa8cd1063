#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "pdcp/errors.hpp"

namespace pdcp::geom {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<double, 9>;  // row-major
using Quat = std::array<double, 4>;  // (w, x, y, z)

inline Vec3 vsub(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 vadd(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 vscale(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double vdot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
Vec3 vcross(const Vec3& a, const Vec3& b);
double vnorm(const Vec3& a);
Mat3 mat_mul(const Mat3& a, const Mat3& b);
Mat3 mat_transpose(const Mat3& a);
Vec3 mat_apply(const Mat3& m, const Vec3& v);
Mat3 rot_z(double angle);
Mat3 rot_y(double angle);
double so3_deviation(const Mat3& r);  // max(|R^T R - I|_max, |det R - 1|)

struct DegenerateKeypoints : Error {
  explicit DegenerateKeypoints(const std::string& w) : Error("DegenerateKeypoints: " + w) {}
};
struct InvalidRotation : Error {
  explicit InvalidRotation(const std::string& w) : Error("InvalidRotation: " + w) {}
};
struct EmptyDataset : Error {
  explicit EmptyDataset(const std::string& w) : Error("EmptyDataset: " + w) {}
};

// One hand-tracking frame: 21 labelled 3-D points in meters, camera frame.
// Index layout follows the usual 21-keypoint hand convention: 0 wrist, then
// four joints per digit starting at the thumb.
struct Keypoints21 {
  static constexpr std::size_t kWrist = 0;
  static constexpr std::size_t kIndexMcp = 5;
  static constexpr std::size_t kMiddleMcp = 9;
  // thumb, index, middle, ring tips; the chains the toy hand tracks
  static constexpr std::array<std::size_t, 4> kFingertips = {4, 8, 12, 16};

  std::array<Vec3, 21> points{};

  bool all_finite() const;
};

struct WristPose {
  Vec3 position{};
  Mat3 rotation{};  // columns [x y z]
};

inline constexpr std::size_t kActionDim = 19;
inline constexpr std::size_t kFingerDim = 12;

// 19-D decomposed action, layout [finger(12) | wrist quaternion(4) | wrist
// position(3)]. Invariants (unit quaternion, w >= 0, joints within limits)
// hold for assembled actions; raw denormalized vectors are repaired by
// renormalized_quaternion before use.
struct Action19 {
  std::array<double, kFingerDim> finger{};
  Quat wrist_rot{1.0, 0.0, 0.0, 0.0};
  Vec3 wrist_pos{};

  std::array<double, kActionDim> to_vector() const;
  static Action19 from_vector(const std::array<double, kActionDim>& v);
};

Quat rotation_to_quaternion(const Mat3& r);  // canonicalized, w >= 0
Mat3 quaternion_to_rotation(const Quat& q);
Quat canonicalize_quaternion(Quat q);
Action19 renormalized_quaternion(Action19 a);

// Appendix-frame construction: x from wrist to middle MCP, z the palm-plane
// normal, y = z cross x. Throws DegenerateKeypoints when the three landmark
// points are collinear or coincident (cross norm <= 1e-9).
WristPose wrist_pose_from_keypoints(const Keypoints21& k);

// Four serial 3-joint finger chains (abduction + two flexions, coupled
// distal segment). All quantities in the wrist frame.
struct ToyHandModel {
  struct Finger {
    Vec3 base;
    Mat3 orientation;            // local x points distally
    std::array<double, 3> link;  // proximal, middle, distal
  };
  std::array<Finger, 4> fingers;
  std::array<double, kFingerDim> limit_lo;
  std::array<double, kFingerDim> limit_hi;
  double dip_coupling = 0.66;

  static ToyHandModel standard();

  Vec3 fingertip(std::size_t finger, const std::array<double, 3>& angles) const;
  std::array<Vec3, 4> forward_kinematics(const std::array<double, kFingerDim>& angles) const;
  std::array<double, kFingerDim> clamp(std::array<double, kFingerDim> angles) const;
};

struct RetargetOptions {
  double smoothness = 0.01;        // beta on ||theta - theta_prev||^2
  double damping0 = 1e-3;          // initial Levenberg damping
  int max_iterations = 50;
  double step_tolerance = 1e-8;    // accepted-step norm convergence
  double residual_threshold = 1e-3;  // fingertip RMS above this flags NoConvergence
  double hand_scale_ratio = 1.0;   // human-to-robot hand size ratio
};

struct RetargetResult {
  std::array<double, kFingerDim> angles{};
  double fingertip_residual = 0.0;  // RMS over the 12 fingertip coordinates
  bool converged = false;
  int iterations = 0;
};

// argmin over joint angles of sum_fingertips |FK(theta) - v_human|^2
//   + beta |theta - theta_prev|^2, damped Gauss-Newton with step rejection,
// clamped to joint limits. The objective never increases across iterations.
RetargetResult retarget_fingers(const Keypoints21& keypoints, const ToyHandModel& hand,
                                const std::optional<std::array<double, kFingerDim>>& prev_angles,
                                const RetargetOptions& opts = {});

// Rotation is validated against the SO(3) tolerance, converted to a
// quaternion and sign-canonicalized.
Action19 assemble_action(const std::array<double, kFingerDim>& finger, const WristPose& pose,
                         double so3_tolerance = 1e-8);

struct Normalizer {
  std::array<double, kActionDim> min_a{};
  std::array<double, kActionDim> max_a{};
  std::array<bool, kActionDim> degenerate{};  // dims with max == min
};

// Elementwise min/max over the combined human + robot action set.
Normalizer fit_normalizer(const std::vector<Action19>& actions);

// Affine map per Appendix: (a - min) / (max - min); degenerate dims emit 0.5.
// Out-of-range inputs extrapolate linearly.
std::array<double, kActionDim> normalize_action(const Action19& a, const Normalizer& n);

// Inverse affine map; degenerate dims emit min_a. The quaternion block is
// returned as-is so that normalize(denormalize(v)) == v; callers emitting
// actions to an environment pass the result through renormalized_quaternion.
Action19 denormalize_action(const std::array<double, kActionDim>& v, const Normalizer& n);

// Keypoint file: one JSON record per line {"frame": int, "points": 21x[3]}.
struct KeypointFrame {
  int frame = 0;
  Keypoints21 keypoints;
};
std::vector<KeypointFrame> load_keypoint_file(const std::string& path);

// Optional camera extrinsic: applies the 4x4 row-major transform to every
// point of every frame.
Keypoints21 apply_extrinsic(const Keypoints21& k, const std::array<double, 16>& transform);

}  // namespace pdcp::geom

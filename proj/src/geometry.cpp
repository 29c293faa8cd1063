#include "pdcp/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace pdcp::geom {

Vec3 vcross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double vnorm(const Vec3& a) { return std::sqrt(vdot(a, a)); }

Mat3 mat_mul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i * 3 + j] += a[i * 3 + k] * b[k * 3 + j];
  return c;
}

Mat3 mat_transpose(const Mat3& a) {
  return {a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]};
}

Vec3 mat_apply(const Mat3& m, const Vec3& v) {
  return {m[0] * v[0] + m[1] * v[1] + m[2] * v[2], m[3] * v[0] + m[4] * v[1] + m[5] * v[2],
          m[6] * v[0] + m[7] * v[1] + m[8] * v[2]};
}

Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c, -s, 0, s, c, 0, 0, 0, 1};
}

Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {c, 0, s, 0, 1, 0, -s, 0, c};
}

double so3_deviation(const Mat3& r) {
  const Mat3 g = mat_mul(mat_transpose(r), r);
  double dev = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      dev = std::max(dev, std::abs(g[i * 3 + j] - (i == j ? 1.0 : 0.0)));
  const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
                     r[2] * (r[3] * r[7] - r[4] * r[6]);
  return std::max(dev, std::abs(det - 1.0));
}

bool Keypoints21::all_finite() const {
  for (const Vec3& p : points)
    for (double x : p)
      if (!std::isfinite(x)) return false;
  return true;
}

std::array<double, kActionDim> Action19::to_vector() const {
  std::array<double, kActionDim> v{};
  std::copy(finger.begin(), finger.end(), v.begin());
  std::copy(wrist_rot.begin(), wrist_rot.end(), v.begin() + kFingerDim);
  std::copy(wrist_pos.begin(), wrist_pos.end(), v.begin() + kFingerDim + 4);
  return v;
}

Action19 Action19::from_vector(const std::array<double, kActionDim>& v) {
  Action19 a;
  std::copy(v.begin(), v.begin() + kFingerDim, a.finger.begin());
  std::copy(v.begin() + kFingerDim, v.begin() + kFingerDim + 4, a.wrist_rot.begin());
  std::copy(v.begin() + kFingerDim + 4, v.end(), a.wrist_pos.begin());
  return a;
}

Quat canonicalize_quaternion(Quat q) {
  // Resolve the double cover deterministically: w >= 0; if w == 0, the
  // first nonzero vector component is made positive.
  bool flip = q[0] < 0.0;
  if (q[0] == 0.0) {
    for (int i = 1; i < 4; ++i) {
      if (q[i] != 0.0) {
        flip = q[i] < 0.0;
        break;
      }
    }
  }
  if (flip)
    for (double& c : q) c = -c;
  return q;
}

Quat rotation_to_quaternion(const Mat3& r) {
  // Shepperd's method: pick the dominant diagonal branch for stability.
  const double t = r[0] + r[4] + r[8];
  Quat q;
  if (t > 0.0) {
    const double s = std::sqrt(t + 1.0) * 2.0;
    q = {0.25 * s, (r[7] - r[5]) / s, (r[2] - r[6]) / s, (r[3] - r[1]) / s};
  } else if (r[0] >= r[4] && r[0] >= r[8]) {
    const double s = std::sqrt(1.0 + r[0] - r[4] - r[8]) * 2.0;
    q = {(r[7] - r[5]) / s, 0.25 * s, (r[1] + r[3]) / s, (r[2] + r[6]) / s};
  } else if (r[4] >= r[8]) {
    const double s = std::sqrt(1.0 + r[4] - r[0] - r[8]) * 2.0;
    q = {(r[2] - r[6]) / s, (r[1] + r[3]) / s, 0.25 * s, (r[5] + r[7]) / s};
  } else {
    const double s = std::sqrt(1.0 + r[8] - r[0] - r[4]) * 2.0;
    q = {(r[3] - r[1]) / s, (r[2] + r[6]) / s, (r[5] + r[7]) / s, 0.25 * s};
  }
  const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  for (double& c : q) c /= n;
  return canonicalize_quaternion(q);
}

Mat3 quaternion_to_rotation(const Quat& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  return {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
          2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
          2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
}

Action19 renormalized_quaternion(Action19 a) {
  double n = 0.0;
  for (double c : a.wrist_rot) n += c * c;
  n = std::sqrt(n);
  if (n < 1e-12) {
    a.wrist_rot = {1.0, 0.0, 0.0, 0.0};
    return a;
  }
  for (double& c : a.wrist_rot) c /= n;
  a.wrist_rot = canonicalize_quaternion(a.wrist_rot);
  return a;
}

WristPose wrist_pose_from_keypoints(const Keypoints21& k) {
  if (!k.all_finite()) throw DegenerateKeypoints("non-finite keypoints");
  const Vec3& w = k.points[Keypoints21::kWrist];
  const Vec3& idx = k.points[Keypoints21::kIndexMcp];
  const Vec3& mid = k.points[Keypoints21::kMiddleMcp];

  const Vec3 wm = vsub(mid, w);
  const Vec3 wi = vsub(idx, w);
  const Vec3 n = vcross(wi, wm);
  const double n_norm = vnorm(n);
  if (n_norm <= 1e-9) throw DegenerateKeypoints("wrist/index/middle landmarks are collinear");

  const Vec3 x = vscale(1.0 / vnorm(wm), wm);
  const Vec3 z = vscale(1.0 / n_norm, n);
  const Vec3 y = vcross(z, x);

  WristPose pose;
  pose.position = w;
  pose.rotation = {x[0], y[0], z[0], x[1], y[1], z[1], x[2], y[2], z[2]};
  return pose;
}

ToyHandModel ToyHandModel::standard() {
  ToyHandModel h;
  h.fingers[0] = {{0.030, -0.035, 0.0}, rot_z(-0.9), {0.042, 0.030, 0.024}};  // thumb
  h.fingers[1] = {{0.090, -0.025, 0.0}, rot_z(0.0), {0.045, 0.028, 0.022}};   // index
  h.fingers[2] = {{0.095, 0.000, 0.0}, rot_z(0.0), {0.048, 0.030, 0.023}};    // middle
  h.fingers[3] = {{0.085, 0.025, 0.0}, rot_z(0.0), {0.042, 0.027, 0.021}};    // ring
  for (std::size_t f = 0; f < 4; ++f) {
    const double abd = f == 0 ? 0.6 : 0.35;
    h.limit_lo[f * 3 + 0] = -abd;
    h.limit_hi[f * 3 + 0] = abd;
    h.limit_lo[f * 3 + 1] = -0.15;
    h.limit_hi[f * 3 + 1] = 1.6;
    h.limit_lo[f * 3 + 2] = -0.10;
    h.limit_hi[f * 3 + 2] = 1.8;
  }
  return h;
}

Vec3 ToyHandModel::fingertip(std::size_t f, const std::array<double, 3>& a) const {
  const Finger& fg = fingers[f];
  const Vec3 ex{1.0, 0.0, 0.0};
  Vec3 p = vscale(fg.link[2], mat_apply(rot_y(dip_coupling * a[2]), ex));
  p = vadd(vscale(fg.link[1], ex), p);
  p = mat_apply(rot_y(a[2]), p);
  p = vadd(vscale(fg.link[0], ex), p);
  p = mat_apply(rot_y(a[1]), p);
  p = mat_apply(rot_z(a[0]), p);
  return vadd(fg.base, mat_apply(fg.orientation, p));
}

std::array<Vec3, 4> ToyHandModel::forward_kinematics(
    const std::array<double, kFingerDim>& angles) const {
  std::array<Vec3, 4> tips;
  for (std::size_t f = 0; f < 4; ++f)
    tips[f] = fingertip(f, {angles[f * 3], angles[f * 3 + 1], angles[f * 3 + 2]});
  return tips;
}

std::array<double, kFingerDim> ToyHandModel::clamp(std::array<double, kFingerDim> a) const {
  for (std::size_t i = 0; i < kFingerDim; ++i) a[i] = std::clamp(a[i], limit_lo[i], limit_hi[i]);
  return a;
}

namespace {

// Solve (A + lambda I) x = b for SPD A, 12x12 Cholesky. Returns false when
// the factorization breaks down (then the caller raises lambda).
bool solve_damped(const std::array<double, 144>& a, double lambda,
                  const std::array<double, 12>& b, std::array<double, 12>& x) {
  std::array<double, 144> l{};
  for (int i = 0; i < 12; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[i * 12 + j] + (i == j ? lambda : 0.0);
      for (int k = 0; k < j; ++k) s -= l[i * 12 + k] * l[j * 12 + k];
      if (i == j) {
        if (s <= 0.0) return false;
        l[i * 12 + i] = std::sqrt(s);
      } else {
        l[i * 12 + j] = s / l[j * 12 + j];
      }
    }
  }
  std::array<double, 12> y{};
  for (int i = 0; i < 12; ++i) {
    double s = b[i];
    for (int k = 0; k < i; ++k) s -= l[i * 12 + k] * y[k];
    y[i] = s / l[i * 12 + i];
  }
  for (int i = 11; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < 12; ++k) s -= l[k * 12 + i] * x[k];
    x[i] = s / l[i * 12 + i];
  }
  return true;
}

struct RetargetProblem {
  const ToyHandModel& hand;
  std::array<Vec3, 4> targets;
  std::array<double, kFingerDim> prev;
  double beta;

  double objective(const std::array<double, kFingerDim>& theta, double* fingertip_sse) const {
    const auto tips = hand.forward_kinematics(theta);
    double sse = 0.0;
    for (std::size_t f = 0; f < 4; ++f) {
      const Vec3 d = vsub(tips[f], targets[f]);
      sse += vdot(d, d);
    }
    if (fingertip_sse) *fingertip_sse = sse;
    double smooth = 0.0;
    for (std::size_t i = 0; i < kFingerDim; ++i) {
      const double d = theta[i] - prev[i];
      smooth += d * d;
    }
    return sse + beta * smooth;
  }

  // residual = [fingertip deltas (12); sqrt(beta) * (theta - prev) (12)]
  void residual(const std::array<double, kFingerDim>& theta, std::array<double, 24>& r) const {
    const auto tips = hand.forward_kinematics(theta);
    for (std::size_t f = 0; f < 4; ++f)
      for (int c = 0; c < 3; ++c) r[f * 3 + c] = tips[f][c] - targets[f][c];
    const double sb = std::sqrt(beta);
    for (std::size_t i = 0; i < kFingerDim; ++i) r[12 + i] = sb * (theta[i] - prev[i]);
  }
};

}  // namespace

RetargetResult retarget_fingers(const Keypoints21& keypoints, const ToyHandModel& hand,
                                const std::optional<std::array<double, kFingerDim>>& prev_angles,
                                const RetargetOptions& opts) {
  const WristPose pose = wrist_pose_from_keypoints(keypoints);
  const Mat3 world_to_wrist = mat_transpose(pose.rotation);

  RetargetProblem prob{hand, {}, {}, opts.smoothness};
  for (std::size_t f = 0; f < 4; ++f) {
    const Vec3 v = vsub(keypoints.points[Keypoints21::kFingertips[f]], pose.position);
    prob.targets[f] = vscale(opts.hand_scale_ratio, mat_apply(world_to_wrist, v));
  }
  prob.prev = prev_angles ? hand.clamp(*prev_angles) : std::array<double, kFingerDim>{};

  std::array<double, kFingerDim> theta = prob.prev;
  double obj = prob.objective(theta, nullptr);
  double lambda = opts.damping0;

  RetargetResult res;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    std::array<double, 24> r{};
    prob.residual(theta, r);

    // numeric Jacobian, central differences
    std::array<double, 24 * 12> jac{};
    const double h = 1e-6;
    for (std::size_t j = 0; j < kFingerDim; ++j) {
      auto tp = theta, tm = theta;
      tp[j] += h;
      tm[j] -= h;
      std::array<double, 24> rp{}, rm{};
      prob.residual(tp, rp);
      prob.residual(tm, rm);
      for (std::size_t i = 0; i < 24; ++i) jac[i * 12 + j] = (rp[i] - rm[i]) / (2.0 * h);
    }

    std::array<double, 144> jtj{};
    std::array<double, 12> jtr{};
    for (std::size_t i = 0; i < 12; ++i) {
      for (std::size_t j = 0; j <= i; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < 24; ++k) s += jac[k * 12 + i] * jac[k * 12 + j];
        jtj[i * 12 + j] = jtj[j * 12 + i] = s;
      }
      double s = 0.0;
      for (std::size_t k = 0; k < 24; ++k) s += jac[k * 12 + i] * r[k];
      jtr[i] = s;
    }

    std::array<double, 12> delta{};
    if (!solve_damped(jtj, lambda, jtr, delta)) {
      lambda *= 4.0;
      if (lambda > 1e12) break;
      continue;
    }

    std::array<double, kFingerDim> cand = theta;
    for (std::size_t i = 0; i < kFingerDim; ++i) cand[i] -= delta[i];
    cand = hand.clamp(cand);
    const double cand_obj = prob.objective(cand, nullptr);

    if (cand_obj <= obj) {
      double step = 0.0;
      for (std::size_t i = 0; i < kFingerDim; ++i) {
        const double d = cand[i] - theta[i];
        step += d * d;
      }
      theta = cand;
      obj = cand_obj;
      lambda = std::max(lambda / 3.0, 1e-12);
      if (std::sqrt(step) < opts.step_tolerance) {
        ++it;
        break;
      }
    } else {
      lambda *= 4.0;
      if (lambda > 1e12) break;
    }
  }

  double sse = 0.0;
  prob.objective(theta, &sse);
  res.angles = theta;
  res.fingertip_residual = std::sqrt(sse / 12.0);
  res.converged = res.fingertip_residual <= opts.residual_threshold;
  res.iterations = it;
  return res;
}

Action19 assemble_action(const std::array<double, kFingerDim>& finger, const WristPose& pose,
                         double so3_tolerance) {
  const double dev = so3_deviation(pose.rotation);
  if (dev > so3_tolerance)
    throw InvalidRotation("rotation deviates from SO(3) by " + std::to_string(dev));
  Action19 a;
  a.finger = finger;
  a.wrist_rot = rotation_to_quaternion(pose.rotation);
  a.wrist_pos = pose.position;
  return a;
}

Normalizer fit_normalizer(const std::vector<Action19>& actions) {
  if (actions.empty()) throw EmptyDataset("fit_normalizer needs at least one action");
  Normalizer n;
  auto first = actions.front().to_vector();
  n.min_a = first;
  n.max_a = first;
  for (const Action19& a : actions) {
    const auto v = a.to_vector();
    for (std::size_t i = 0; i < kActionDim; ++i) {
      n.min_a[i] = std::min(n.min_a[i], v[i]);
      n.max_a[i] = std::max(n.max_a[i], v[i]);
    }
  }
  for (std::size_t i = 0; i < kActionDim; ++i) n.degenerate[i] = n.min_a[i] == n.max_a[i];
  return n;
}

std::array<double, kActionDim> normalize_action(const Action19& a, const Normalizer& n) {
  const auto v = a.to_vector();
  std::array<double, kActionDim> out{};
  for (std::size_t i = 0; i < kActionDim; ++i)
    out[i] = n.degenerate[i] ? 0.5 : (v[i] - n.min_a[i]) / (n.max_a[i] - n.min_a[i]);
  return out;
}

Action19 denormalize_action(const std::array<double, kActionDim>& v, const Normalizer& n) {
  std::array<double, kActionDim> out{};
  for (std::size_t i = 0; i < kActionDim; ++i)
    out[i] = n.degenerate[i] ? n.min_a[i] : v[i] * (n.max_a[i] - n.min_a[i]) + n.min_a[i];
  return Action19::from_vector(out);
}

std::vector<KeypointFrame> load_keypoint_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read keypoint file " + path);
  std::vector<KeypointFrame> frames;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("frame") || !j.contains("points") ||
        !j["points"].is_array() || j["points"].size() != 21)
      throw IoError(path + ":" + std::to_string(line_no) + ": bad keypoint record");
    KeypointFrame f;
    f.frame = j["frame"].get<int>();
    for (std::size_t p = 0; p < 21; ++p) {
      const auto& pt = j["points"][p];
      if (!pt.is_array() || pt.size() != 3)
        throw IoError(path + ":" + std::to_string(line_no) + ": point " + std::to_string(p) +
                      " is not a 3-vector");
      for (int c = 0; c < 3; ++c) f.keypoints.points[p][c] = pt[c].get<double>();
    }
    frames.push_back(f);
  }
  return frames;
}

Keypoints21 apply_extrinsic(const Keypoints21& k, const std::array<double, 16>& t) {
  Keypoints21 out;
  for (std::size_t p = 0; p < 21; ++p) {
    const Vec3& v = k.points[p];
    for (int r = 0; r < 3; ++r)
      out.points[p][r] = t[r * 4] * v[0] + t[r * 4 + 1] * v[1] + t[r * 4 + 2] * v[2] + t[r * 4 + 3];
  }
  return out;
}

}  // namespace pdcp::geom

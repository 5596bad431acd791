#include "mvgaze/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mvgaze {

Mat3 Intrinsics::matrix() const {
  Mat3 k = Mat3::Zero();
  k(0, 0) = fx;
  k(1, 1) = fy;
  k(0, 2) = cx;
  k(1, 2) = cy;
  k(2, 2) = 1.0;
  return k;
}

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw Error(ErrorKind::ParseError, "focal lengths must be positive");
  if (width <= 0 || height <= 0)
    throw Error(ErrorKind::ParseError, "image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
    throw Error(ErrorKind::ParseError, "principal point outside image");
}

Intrinsics Intrinsics::scaled(int new_width, int new_height) const {
  const double sx = double(new_width) / double(width);
  const double sy = double(new_height) / double(height);
  Intrinsics out;
  out.fx = fx * sx;
  out.fy = fy * sy;
  // Pixel centers map as u' = (u + 0.5) * s - 0.5.
  out.cx = (cx + 0.5) * sx - 0.5;
  out.cy = (cy + 0.5) * sy - 0.5;
  out.width = new_width;
  out.height = new_height;
  return out;
}

void Extrinsics::validate() const {
  const double ortho = (R.transpose() * R - Mat3::Identity()).norm();
  if (ortho > 1e-9)
    throw Error(ErrorKind::ParseError, "rotation is not orthonormal");
  if (std::abs(R.determinant() - 1.0) > 1e-9)
    throw Error(ErrorKind::ParseError, "rotation determinant is not +1");
}

Pixel project(const Camera& cam, const Vec3& p_cam) {
  if (!(p_cam.z() > 0.0))
    throw Error(ErrorKind::NonPositiveDepth, "point behind camera in project");
  const Intrinsics& in = cam.intrinsics;
  return Pixel{in.fx * p_cam.x() / p_cam.z() + in.cx, in.fy * p_cam.y() / p_cam.z() + in.cy};
}

Vec3 backproject(const Camera& cam, const Pixel& px, double depth) {
  if (!(depth > 0.0))
    throw Error(ErrorKind::NonPositiveDepth, "non-positive depth in backproject");
  const Intrinsics& in = cam.intrinsics;
  return Vec3((px.u - in.cx) / in.fx * depth, (px.v - in.cy) / in.fy * depth, depth);
}

Mat3 relative_rotation(const Extrinsics& r1, const Extrinsics& r2) {
  return r1.R * r2.R.transpose();
}

Vec3 transform_point(const Camera& src, const Camera& dst, const Vec3& p_src) {
  return dst.extrinsics.R * src.extrinsics.R.transpose() * (p_src - src.extrinsics.t) +
         dst.extrinsics.t;
}

namespace {

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

}  // namespace

Mat3 fundamental_matrix(const Camera& cam1, const Camera& cam2) {
  const Vec3 c1 = cam1.extrinsics.camera_center();
  const Vec3 c2 = cam2.extrinsics.camera_center();
  if ((c1 - c2).norm() < 1e-12)
    throw Error(ErrorKind::DegenerateBaseline, "camera centers coincide");
  // Relative pose cam1 -> cam2.
  const Mat3 r_rel = cam2.extrinsics.R * cam1.extrinsics.R.transpose();
  const Vec3 t_rel = cam2.extrinsics.t - r_rel * cam1.extrinsics.t;
  const Mat3 k1_inv = cam1.intrinsics.matrix().inverse();
  const Mat3 k2_inv_t = cam2.intrinsics.matrix().inverse().transpose();
  return k2_inv_t * skew(t_rel) * r_rel * k1_inv;
}

EpipolarLine epipolar_line(const Mat3& F, const Pixel& px) {
  const Vec3 l = F * Vec3(px.u, px.v, 1.0);
  return EpipolarLine{l.x(), l.y(), l.z()};
}

std::optional<Segment> epipolar_segment(const Mat3& F, const Pixel& px, const Intrinsics& view2) {
  const EpipolarLine l = epipolar_line(F, px);
  const double nrm = std::hypot(l.a, l.b);
  if (!(nrm > 0.0) || !std::isfinite(nrm)) return std::nullopt;

  // Point on the line closest to the origin plus the line direction.
  const double ox = -l.a * l.c / (nrm * nrm);
  const double oy = -l.b * l.c / (nrm * nrm);
  const double dx = l.b / nrm;
  const double dy = -l.a / nrm;

  // Liang-Barsky clip of the infinite line against [0, w) x [0, h).
  const double hi_u = std::nextafter(double(view2.width), 0.0);
  const double hi_v = std::nextafter(double(view2.height), 0.0);
  double t0 = -std::numeric_limits<double>::infinity();
  double t1 = std::numeric_limits<double>::infinity();
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {ox - 0.0, hi_u - ox, oy - 0.0, hi_v - oy};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;  // parallel and outside
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0)
      t0 = std::max(t0, r);
    else
      t1 = std::min(t1, r);
  }
  if (!(t0 <= t1) || !std::isfinite(t0) || !std::isfinite(t1)) return std::nullopt;
  Segment seg;
  seg.p0 = Pixel{ox + t0 * dx, oy + t0 * dy};
  seg.p1 = Pixel{ox + t1 * dx, oy + t1 * dy};
  // Clamp the last-ulp overshoot from the parametric evaluation.
  seg.p0.u = std::clamp(seg.p0.u, 0.0, hi_u);
  seg.p0.v = std::clamp(seg.p0.v, 0.0, hi_v);
  seg.p1.u = std::clamp(seg.p1.u, 0.0, hi_u);
  seg.p1.v = std::clamp(seg.p1.v, 0.0, hi_v);
  return seg;
}

std::vector<Pixel> sample_epipolar(const Segment& seg, int n) {
  if (n < 2) throw Error(ErrorKind::ParseError, "epipolar sampling needs n >= 2");
  std::vector<Pixel> out;
  out.reserve(size_t(n));
  for (int i = 0; i < n; ++i) {
    const double a = double(i) / double(n - 1);
    out.push_back(Pixel{seg.p0.u + a * (seg.p1.u - seg.p0.u), seg.p0.v + a * (seg.p1.v - seg.p0.v)});
  }
  out.front() = seg.p0;
  out.back() = seg.p1;
  return out;
}

TriangulationResult triangulate(const Camera& cam1, const Pixel& px1, const Camera& cam2,
                                const Pixel& px2) {
  const Vec3 c1 = cam1.extrinsics.camera_center();
  const Vec3 c2 = cam2.extrinsics.camera_center();
  if ((c1 - c2).norm() < 1e-12)
    throw Error(ErrorKind::DegenerateBaseline, "triangulation needs distinct centers");

  const Vec3 d1 = (cam1.extrinsics.R.transpose() * backproject(cam1, px1, 1.0)).normalized();
  const Vec3 d2 = (cam2.extrinsics.R.transpose() * backproject(cam2, px2, 1.0)).normalized();
  const double cos_angle = std::clamp(d1.dot(d2), -1.0, 1.0);
  const double angle_deg = std::acos(cos_angle) * 180.0 / M_PI;
  if (angle_deg < 0.1)
    throw Error(ErrorKind::NearParallelRays, "ray angle below 0.1 degrees");

  // Linear DLT seed from x cross (P X) = 0 rows of both views.
  Eigen::Matrix<double, 3, 4> p1, p2;
  p1.leftCols<3>() = cam1.intrinsics.matrix() * cam1.extrinsics.R;
  p1.col(3) = cam1.intrinsics.matrix() * cam1.extrinsics.t;
  p2.leftCols<3>() = cam2.intrinsics.matrix() * cam2.extrinsics.R;
  p2.col(3) = cam2.intrinsics.matrix() * cam2.extrinsics.t;
  Eigen::Matrix4d a;
  a.row(0) = px1.u * p1.row(2) - p1.row(0);
  a.row(1) = px1.v * p1.row(2) - p1.row(1);
  a.row(2) = px2.u * p2.row(2) - p2.row(0);
  a.row(3) = px2.v * p2.row(2) - p2.row(1);
  const Eigen::JacobiSVD<Eigen::Matrix4d> svd(a, Eigen::ComputeFullV);
  const Eigen::Vector4d xh = svd.matrixV().col(3);

  // Midpoint of closest approach between the two rays.
  const double b = d1.dot(d2);
  const Vec3 w0 = c1 - c2;
  const double denom = 1.0 - b * b;
  const double s = (b * w0.dot(d2) - w0.dot(d1)) / denom;
  const double t = (w0.dot(d2) - b * w0.dot(d1)) / denom;
  Vec3 x = 0.5 * ((c1 + s * d1) + (c2 + t * d2));
  if (std::abs(xh.w()) > 1e-12) {
    const Vec3 x_dlt = xh.head<3>() / xh.w();
    // DLT backs up the midpoint when the closest-approach system is
    // ill-conditioned; otherwise the midpoint refinement stands.
    if (!x.allFinite()) x = x_dlt;
  }

  TriangulationResult result;
  result.point_world = x;
  double err = 0.0;
  const Vec3 in1 = cam1.world_to_camera(x);
  const Vec3 in2 = cam2.world_to_camera(x);
  if (in1.z() > 0.0) {
    const Pixel r1 = project(cam1, in1);
    err = std::max(err, std::hypot(r1.u - px1.u, r1.v - px1.v));
  }
  if (in2.z() > 0.0) {
    const Pixel r2 = project(cam2, in2);
    err = std::max(err, std::hypot(r2.u - px2.u, r2.v - px2.v));
  }
  result.max_reprojection_error_px = err;
  return result;
}

}  // namespace mvgaze

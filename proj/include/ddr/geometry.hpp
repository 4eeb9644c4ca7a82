#pragma once

#include <cmath>
#include <vector>

#include "ddr/common.hpp"

namespace ddr {

// A camera ray. `direction` is unit length for rays built by pixel_ray;
// to_ndc returns rays whose direction is deliberately non-unit so that the
// parameter range [0,1] spans [near, infinity).
struct Ray {
  Vec3 origin{0, 0, 0};
  Vec3 direction{0, 0, -1};
  double t_near = 0.0;
  double t_far = 1.0;
};

inline bool is_unit_ray(const Ray& r, double tol = 1e-9) {
  return std::abs(r.direction.norm() - 1.0) <= tol && r.t_far > r.t_near;
}

struct PinholeCamera {
  int width = 0;
  int height = 0;
  double f_init = 0.0;
  double delta_f = 0.0;  // learnable residual, zero-initialized
  Vec2 principal_point{0, 0};
};

// f = f_init + delta_f.
inline double effective_focal(const PinholeCamera& cam) {
  const double f = cam.f_init + cam.delta_f;
  require(f > 0.0, "effective_focal: f_init + delta_f must be positive");
  return f;
}

// Camera-to-world rigid transform.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();
};

inline bool pose_valid(const Pose& p, double tol = 1e-9) {
  const Mat3 err = p.rotation.transpose() * p.rotation - Mat3::Identity();
  return err.cwiseAbs().maxCoeff() <= tol &&
         std::abs(p.rotation.determinant() - 1.0) <= tol;
}

// Learnable pose correction: first three entries are an axis-angle rotation,
// last three a translation. Any value of xi yields a valid rigid transform.
struct PoseResidual {
  Vec6 xi = Vec6::Zero();
};

inline Mat3 skew(const Vec3& w) {
  Mat3 s;
  s << 0, -w.z(), w.y(), w.z(), 0, -w.x(), -w.y(), w.x(), 0;
  return s;
}

// Rodrigues rotation.
inline Mat3 so3_exp(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const Mat3 k = skew(w);
  double a, b;
  if (theta2 < 1e-16) {
    a = 1.0 - theta2 / 6.0;
    b = 0.5 - theta2 / 24.0;
  } else {
    const double theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / theta2;
  }
  return Mat3::Identity() + a * k + b * k * k;
}

// Right Jacobian of SO(3): exp(w + dw) = exp(w) * exp(Jr(w) dw) to first
// order. Used to take exact derivatives of rotations through the residual.
inline Mat3 so3_right_jacobian(const Vec3& w) {
  const double theta2 = w.squaredNorm();
  const Mat3 k = skew(w);
  double b, c;
  if (theta2 < 1e-16) {
    b = 0.5 - theta2 / 24.0;
    c = 1.0 / 6.0 - theta2 / 120.0;
  } else {
    const double theta = std::sqrt(theta2);
    b = (1.0 - std::cos(theta)) / theta2;
    c = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Mat3::Identity() - b * k + c * k * k;
}

// P = P_init * exp(xi): right-composed rigid correction. xi = 0 leaves the
// pose untouched.
inline Pose compose_pose(const Pose& p, const PoseResidual& r) {
  const Vec3 w = r.xi.head<3>();
  const Vec3 rho = r.xi.tail<3>();
  Pose out;
  out.rotation = p.rotation * so3_exp(w);
  out.translation = p.rotation * rho + p.translation;
  return out;
}

// Back-project pixel px through the camera at `pose`. Origin is the camera
// center, direction is unit length. Convention: camera looks down -z, x
// right, y up, pixel rows increase downward.
inline Ray pixel_ray(const PinholeCamera& cam, const Pose& pose, const Vec2& px,
                     double t_near, double t_far) {
  require(px.x() >= 0.0 && px.x() <= cam.width && px.y() >= 0.0 &&
              px.y() <= cam.height,
          "pixel_ray: pixel outside image");
  require(t_far > t_near, "pixel_ray: t_far must exceed t_near");
  const double f = effective_focal(cam);
  const Vec3 cam_dir((px.x() - cam.principal_point.x()) / f,
                     -(px.y() - cam.principal_point.y()) / f, -1.0);
  Ray ray;
  ray.origin = pose.translation;
  ray.direction = (pose.rotation * cam_dir).normalized();
  ray.t_near = t_near;
  ray.t_far = t_far;
  return ray;
}

// Direction before normalization/rotation; exposed for the camera adjoint.
inline Vec3 pixel_cam_dir(const PinholeCamera& cam, const Vec2& px) {
  const double f = effective_focal(cam);
  return Vec3((px.x() - cam.principal_point.x()) / f,
              -(px.y() - cam.principal_point.y()) / f, -1.0);
}

// Standard forward-facing NDC warp. World point (x,y,z) with z < 0 maps to
//   q = ( -(2f/W) x/z,  -(2f/H) y/z,  1 + 2 near / z ),
// so z = -near lands on q_z = -1 and z -> -inf on q_z = +1. The inverse is
//   z = 2 near / (q_z - 1),  x = -q_x z W / (2f),  y = -q_y z H / (2f).
inline Vec3 ndc_point(const Vec3& p, const PinholeCamera& cam, double near) {
  require(p.z() < 0.0, "ndc_point: point must be in front of the camera");
  const double f = effective_focal(cam);
  return Vec3(-(2.0 * f / cam.width) * p.x() / p.z(),
              -(2.0 * f / cam.height) * p.y() / p.z(), 1.0 + 2.0 * near / p.z());
}

inline Vec3 ndc_point_inverse(const Vec3& q, const PinholeCamera& cam,
                              double near) {
  const double f = effective_focal(cam);
  const double z = 2.0 * near / (q.z() - 1.0);
  return Vec3(-q.x() * z * cam.width / (2.0 * f),
              -q.y() * z * cam.height / (2.0 * f), z);
}

// Warp a world ray into NDC. The returned ray has t in [0,1] covering
// [near, inf): its origin sits on the near plane and origin + direction is
// the point at infinity. Direction is not unit length.
inline Ray to_ndc(const Ray& ray, const PinholeCamera& cam, double near) {
  require(ray.direction.z() < 0.0, "to_ndc: ray must head away from the camera");
  // Slide the origin onto the near plane z = -near.
  const double shift = -(near + ray.origin.z()) / ray.direction.z();
  require(shift >= 0.0, "to_ndc: ray origin behind the near plane");
  const Vec3 o = ray.origin + shift * ray.direction;
  const Vec3& d = ray.direction;
  const double f = effective_focal(cam);
  const double ax = -2.0 * f / cam.width;
  const double ay = -2.0 * f / cam.height;
  Ray out;
  out.origin = Vec3(ax * o.x() / o.z(), ay * o.y() / o.z(), 1.0 + 2.0 * near / o.z());
  out.direction = Vec3(ax * (d.x() / d.z() - o.x() / o.z()),
                       ay * (d.y() / d.z() - o.y() / o.z()), -2.0 * near / o.z());
  out.t_near = 0.0;
  out.t_far = 1.0;
  return out;
}

// Adjoint of to_ndc: pulls gradients at the NDC ray (g_no, g_nd) back to the
// world ray origin/direction and the focal length.
inline void to_ndc_adjoint(const Ray& world, const PinholeCamera& cam, double near,
                           const Vec3& g_no, const Vec3& g_nd, Vec3& g_o, Vec3& g_d,
                           double& g_f) {
  const double f = effective_focal(cam);
  const Vec3& o = world.origin;
  const Vec3& d = world.direction;
  const double shift = -(near + o.z()) / d.z();
  const Vec3 os = o + shift * d;
  const double ax = -2.0 * f / cam.width;
  const double ay = -2.0 * f / cam.height;
  const double oz = os.z(), dz = d.z();

  // Focal enters only through ax, ay; the affected outputs scale with f.
  const Vec3 no(ax * os.x() / oz, ay * os.y() / oz, 1.0 + 2.0 * near / oz);
  const Vec3 nd(ax * (d.x() / dz - os.x() / oz), ay * (d.y() / dz - os.y() / oz),
                -2.0 * near / oz);
  g_f += (g_no.x() * no.x() + g_no.y() * no.y() + g_nd.x() * nd.x() +
          g_nd.y() * nd.y()) /
         f;

  Vec3 g_os = Vec3::Zero();
  Vec3 gd = Vec3::Zero();
  g_os.x() = (g_no.x() - g_nd.x()) * ax / oz;
  g_os.y() = (g_no.y() - g_nd.y()) * ay / oz;
  g_os.z() = (g_nd.x() - g_no.x()) * ax * os.x() / (oz * oz) +
             (g_nd.y() - g_no.y()) * ay * os.y() / (oz * oz) +
             (g_nd.z() - g_no.z()) * 2.0 * near / (oz * oz);
  gd.x() = g_nd.x() * ax / dz;
  gd.y() = g_nd.y() * ay / dz;
  gd.z() = -g_nd.x() * ax * d.x() / (dz * dz) - g_nd.y() * ay * d.y() / (dz * dz);

  // os = o + shift d with shift = -(near + o_z)/d_z.
  const double gdot = g_os.dot(d);
  g_o = g_os;
  g_o.z() -= gdot / dz;
  g_d = gd + shift * g_os;
  g_d.z() += gdot * (near + o.z()) / (dz * dz);
}

// NDC ray parameter of the world point at distance s along a (unit) world
// ray. Connects metric ground-truth depth to depths rendered in NDC.
inline double ndc_ray_param(const Ray& world_ray, const PinholeCamera& cam,
                            double near, double s) {
  const Ray ndc = to_ndc(world_ray, cam, near);
  const Vec3 q = ndc_point(world_ray.origin + s * world_ray.direction, cam, near);
  return (q.z() - ndc.origin.z()) / ndc.direction.z();
}

}  // namespace ddr

#pragma once

#include <Eigen/Core>
#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace ddr {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

// All recoverable failures (bad inputs, malformed files, broken invariants)
// surface as ddr::Error with a message naming the offender.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

// Numerically stable log(1 + exp(x)).
inline double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline double softplus_deriv(double x) {
  if (x > 30.0) return 1.0;
  if (x < -30.0) return std::exp(x);
  return 1.0 / (1.0 + std::exp(-x));
}

inline double logistic(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double logistic_deriv(double x) {
  const double s = logistic(x);
  return s * (1.0 - s);
}

// Inverse of softplus/logistic, used when seeding a grid from known values.
inline double softplus_inverse(double y) {
  require(y > 0.0, "softplus_inverse: y must be positive");
  if (y > 30.0) return y;
  return std::log(std::expm1(y));
}

inline double logit(double p) {
  require(p > 0.0 && p < 1.0, "logit: p must be in (0,1)");
  return std::log(p / (1.0 - p));
}

}  // namespace ddr

#pragma once

#include <functional>
#include <string>

#include "ddr/common.hpp"

namespace ddr {

struct FDReport {
  std::string op;
  double max_rel_error = 0.0;
  int argmax = -1;
  double h = 0.0;
  bool kink = false;  // nondifferentiable point detected, reported not failed
};

// Central finite differences of a scalar function against an analytic
// gradient. Relative error denominator: max(|analytic|, |fd|, 1e-12).
inline FDReport fd_check(const std::string& op,
                         const std::function<double(const Eigen::VectorXd&)>& f,
                         const Eigen::VectorXd& x, const Eigen::VectorXd& analytic,
                         double h) {
  require(h > 0.0, "fd_check: h must be positive");
  require(analytic.size() == x.size(), "fd_check: gradient shape mismatch");
  FDReport rep;
  rep.op = op;
  rep.h = h;
  Eigen::VectorXd xp = x;
  for (int i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    require(std::isfinite(fp) && std::isfinite(fm),
            "fd_check: non-finite evaluation in op " + op);
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::abs(analytic[i]), std::abs(fd), 1e-12});
    const double rel = std::abs(fd - analytic[i]) / denom;
    if (rel > rep.max_rel_error) {
      rep.max_rel_error = rel;
      rep.argmax = i;
    }
  }
  return rep;
}

}  // namespace ddr

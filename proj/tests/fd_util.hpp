#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <vector>

namespace testutil {

// Central finite difference of eval() w.r.t. one scalar parameter.
inline double central_diff(const std::function<double()>& eval, double* param,
                           double h) {
  const double orig = *param;
  *param = orig + h;
  const double up = eval();
  *param = orig - h;
  const double down = eval();
  *param = orig;
  return (up - down) / (2.0 * h);
}

inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

// Numeric gradient over every coefficient of an Eigen matrix/vector.
template <typename Mat>
Eigen::VectorXd numeric_gradient(const std::function<double()>& eval, Mat& params,
                                 double h = 1e-5) {
  Eigen::VectorXd g(params.size());
  double* data = params.data();
  for (Eigen::Index i = 0; i < params.size(); ++i)
    g(i) = central_diff(eval, data + i, h);
  return g;
}

template <typename Mat>
Eigen::VectorXd flatten(const Mat& m) {
  Eigen::VectorXd v(m.size());
  const double* data = m.data();
  for (Eigen::Index i = 0; i < m.size(); ++i) v(i) = data[i];
  return v;
}

}  // namespace testutil

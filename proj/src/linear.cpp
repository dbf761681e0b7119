#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "anchor/learn.hpp"

namespace anchor::learn {

Ridge Ridge::fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double lambda) {
  if (X.rows() != Y.rows()) throw std::invalid_argument("Ridge::fit: row mismatch");
  if (X.rows() == 0) throw std::invalid_argument("Ridge::fit: no samples");
  if (lambda < 0.0) throw std::invalid_argument("Ridge::fit: negative lambda");
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  // Augmented least squares is better conditioned than the normal equations
  // when lambda is tiny.
  Eigen::MatrixXd A(n + d, d);
  A.topRows(n) = X;
  A.bottomRows(d) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n + d, Y.cols());
  B.topRows(n) = Y;
  Ridge r;
  r.lambda = lambda;
  r.weights = A.completeOrthogonalDecomposition().solve(B);
  return r;
}

Ridge Ridge::fit_centered(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double lambda) {
  if (X.rows() == 0) throw std::invalid_argument("Ridge::fit_centered: no samples");
  const Eigen::VectorXd mx = X.colwise().mean().transpose();
  const Eigen::VectorXd my = Y.colwise().mean().transpose();
  Ridge r = fit(X.rowwise() - mx.transpose(), Y.rowwise() - my.transpose(), lambda);
  r.x_mean = mx;
  r.y_mean = my;
  return r;
}

Eigen::VectorXd Ridge::predict(const Eigen::VectorXd& x) const {
  if (centered()) return y_mean + weights.transpose() * (x - x_mean);
  return weights.transpose() * x;
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  Standardizer s;
  const double n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean().transpose();
  s.scale.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.mean[j]).square().sum() / n;
    s.scale[j] = var > 1e-18 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const {
  return ((x - mean).array() / scale.array()).matrix();
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return values[lo] + w * (values[hi] - values[lo]);
}

}  // namespace anchor::learn

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hashlane/core.hpp"
#include "hashlane/error.hpp"

namespace hashlane::linalg {

/// Dense row-major square matrix of doubles.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n) : n_(n), a_(n * n, 0.0) {}

  static SquareMatrix identity(std::size_t n) {
    SquareMatrix m(n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return a_[i * n_ + j]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

inline std::vector<double> column_mean(const FeatureSet& fs) {
  std::vector<double> mean(fs.dim(), 0.0);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    auto x = fs.row(i);
    for (std::size_t k = 0; k < fs.dim(); ++k) mean[k] += x[k];
  }
  for (auto& m : mean) m /= static_cast<double>(fs.size());
  return mean;
}

/// Population covariance (divides by n) of the rows of `fs` about `mean`.
inline SquareMatrix covariance(const FeatureSet& fs, std::span<const double> mean) {
  const std::size_t d = fs.dim();
  SquareMatrix cov(d);
  std::vector<double> centered(d);
  for (std::size_t i = 0; i < fs.size(); ++i) {
    auto x = fs.row(i);
    for (std::size_t k = 0; k < d; ++k) centered[k] = x[k] - mean[k];
    for (std::size_t p = 0; p < d; ++p) {
      const double cp = centered[p];
      for (std::size_t q = p; q < d; ++q) cov(p, q) += cp * centered[q];
    }
  }
  const double inv_n = 1.0 / static_cast<double>(fs.size());
  for (std::size_t p = 0; p < d; ++p)
    for (std::size_t q = p; q < d; ++q) {
      cov(p, q) *= inv_n;
      cov(q, p) = cov(p, q);
    }
  return cov;
}

struct EigenDecomposition {
  std::vector<double> values;  // descending
  SquareMatrix vectors;        // column k is the eigenvector of values[k]
};

/// Eigen-decomposition of a symmetric matrix, eigenvalues in descending order.
inline EigenDecomposition symmetric_eigen(const SquareMatrix& a) {
  const std::size_t n = a.size();
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(i, j);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success)
    fail(Errc::not_converged, "symmetric eigen-decomposition did not converge");

  // The solver sorts ascending; flip to descending.
  EigenDecomposition out{std::vector<double>(n), SquareMatrix(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const auto src = static_cast<Eigen::Index>(n - 1 - k);
    out.values[k] = solver.eigenvalues()(src);
    for (std::size_t r = 0; r < n; ++r)
      out.vectors(r, k) = solver.eigenvectors()(static_cast<Eigen::Index>(r), src);
  }
  return out;
}

}  // namespace hashlane::linalg

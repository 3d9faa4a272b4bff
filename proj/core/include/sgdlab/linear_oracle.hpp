#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

#include "sgdlab/rng.hpp"
#include "sgdlab/schedules.hpp"

namespace sgdlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Largest singular value, computed through the symmetric eigenproblem on
/// the Gram matrix of the operand.
double operator_norm(const Mat& m);

/// The averaged linear system driven by a constant symmetric matrix H with
/// negative spectrum: ordered transition products prod (I + gamma_r H), their
/// weighted window sums, and the averaged process built from them. Serves as
/// an independent oracle for the main limit transform.
class ProductMatrices {
 public:
  using SequenceFn = std::function<double(std::uint64_t)>;

  /// Power-law schedule family (the only family the experiment surface
  /// accepts).
  ProductMatrices(Mat h, ScheduleParams schedule);

  /// Generic sequences; exists so algebraic identities with constant steps
  /// and weights can be exercised directly.
  ProductMatrices(Mat h, SequenceFn gamma, SequenceFn weight,
                  std::function<std::uint64_t(std::uint64_t)> burn);

  int dim() const { return static_cast<int>(h_.rows()); }
  const Mat& h() const { return h_; }
  double stability() const { return stability_; }  // min |eigenvalue|
  double bound() const { return bound_; }          // max |eigenvalue|

  /// Ordered product prod_{r=i+1}^{j} (I + gamma_r H); identity when i == j.
  Mat transition(std::uint64_t i, std::uint64_t j) const;

  /// Window sum sum_{r=i}^{j} (gamma_i b_r / b_i) * transition(i, r),
  /// accumulated by the forward recurrence in O(j-i) matrix products.
  Mat weighted_sum(std::uint64_t i, std::uint64_t j) const;

  /// Operator norm of weighted_sum(l, n) + H^{-1}; decays to zero as the
  /// clock separation grows.
  double limit_residual(std::uint64_t l, std::uint64_t n) const;

  /// max over l in [l_min, n] of ||weighted_sum(l, n)||, swept with the
  /// backward recurrence in O(n) work.
  double max_weighted_norm(std::uint64_t l_min, std::uint64_t n) const;

  /// One draw of the averaged process
  ///   (1/b̄_n) sum_{i=n0(n)+1}^{n} b_i * weighted_sum(i, n) * D_i
  /// with D_i ~ N(0, gamma_theta), evaluated by the backward recurrence with
  /// O(n) matrix-vector work and O(1) memory in n.
  Vec simulate_average(std::uint64_t n, const Mat& gamma_theta,
                       std::uint64_t master_seed, std::uint64_t draw_index) const;

  /// Batch of draws, bit-identical to calling simulate_average per index;
  /// the step and weight sequences are evaluated once for all draws and the
  /// counter-based streams make the draws order- and thread-independent.
  std::vector<Vec> simulate_draws(std::uint64_t n, const Mat& gamma_theta,
                                  std::uint64_t master_seed, std::uint64_t count,
                                  int workers = 1) const;

  /// H^{-1} gamma_theta H^{-T}, the covariance of the limiting draw.
  Mat limit_covariance(const Mat& gamma_theta) const;

 private:
  Mat h_;
  Mat h_inverse_;
  SequenceFn gamma_;
  SequenceFn weight_;
  std::function<std::uint64_t(std::uint64_t)> burn_;
  double stability_ = 0.0;
  double bound_ = 0.0;
};

}  // namespace sgdlab

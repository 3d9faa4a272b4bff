#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

#include "sgdlab/rng.hpp"

namespace sgdlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class NotPsdError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class NoiseKind { gaussian_iid, state_dependent, bounded_rademacher };

std::string to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(const std::string& s);

/// Lower-triangular factor L with L L^T = gamma. Eigenvalues in
/// [-1e-12 * spectral radius, 0) are clipped to zero; anything below
/// -1e-8 * spectral radius is rejected as not positive semidefinite.
Mat covariance_factor(const Mat& gamma);

/// Martingale-difference perturbation with limiting conditional covariance
/// gamma_limit. Draws are pure functions of the generator position, so a
/// trajectory replays bit-for-bit from the same (seed, replication) stream.
///
///  - gaussian_iid:        N(0, Gamma) independent of the state.
///  - state_dependent:     N(0, Gamma * (1 + g(d))) with g(d) = min(d, 1)
///                         and d the distance of the state to the manifold;
///                         the covariance approaches Gamma at the manifold.
///  - bounded_rademacher:  L * s with iid Rademacher signs s; covariance is
///                         Gamma exactly and |D| <= sqrt(trace Gamma * dim).
class NoiseModel {
 public:
  NoiseModel(NoiseKind kind, Mat gamma);

  NoiseKind kind() const { return kind_; }
  const Mat& gamma_limit() const { return gamma_; }
  const Mat& factor() const { return factor_; }
  int dim() const { return static_cast<int>(gamma_.rows()); }
  bool degenerate() const { return degenerate_; }

  /// One draw for the given step generator. distance_to_manifold is used by
  /// the state_dependent kind only.
  Vec sample(StepRng& rng, double distance_to_manifold = 0.0) const;

  /// Allocation-free draw into preallocated vectors (z_scratch holds the raw
  /// signs/normals); identical values to sample().
  void sample_into(StepRng& rng, double distance_to_manifold, Vec& z_scratch,
                   Vec& out) const;

 private:
  NoiseKind kind_;
  Mat gamma_;
  Mat factor_;
  bool degenerate_ = false;
};

}  // namespace sgdlab

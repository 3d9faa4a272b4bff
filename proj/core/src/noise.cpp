#include "sgdlab/noise.hpp"

#include <algorithm>
#include <cmath>

namespace sgdlab {

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::gaussian_iid:
      return "gaussian_iid";
    case NoiseKind::state_dependent:
      return "state_dependent";
    case NoiseKind::bounded_rademacher:
      return "bounded_rademacher";
  }
  return "unknown";
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "gaussian_iid") return NoiseKind::gaussian_iid;
  if (s == "state_dependent") return NoiseKind::state_dependent;
  if (s == "bounded_rademacher") return NoiseKind::bounded_rademacher;
  throw std::invalid_argument("unknown noise kind: " + s);
}

Mat covariance_factor(const Mat& gamma) {
  if (gamma.rows() != gamma.cols() || gamma.rows() == 0) {
    throw std::invalid_argument("covariance_factor: matrix must be square");
  }
  const double asym = (gamma - gamma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * (1.0 + gamma.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("covariance_factor: matrix is not symmetric");
  }

  Eigen::SelfAdjointEigenSolver<Mat> es(gamma);
  const Vec evals = es.eigenvalues();
  const double specrad = evals.cwiseAbs().maxCoeff();
  Vec clipped = evals;
  for (int i = 0; i < clipped.size(); ++i) {
    if (clipped[i] < -1e-8 * specrad) {
      throw NotPsdError("covariance_factor: matrix is not PSD (eigenvalue " +
                        std::to_string(clipped[i]) + ")");
    }
    clipped[i] = std::max(clipped[i], 0.0);
  }

  // B B^T = gamma with B = V sqrt(D); the QR of B^T turns it into a genuine
  // lower-triangular factor, rank-deficient rows included.
  const Mat b = es.eigenvectors() * clipped.cwiseSqrt().asDiagonal();
  Eigen::HouseholderQR<Mat> qr(b.transpose());
  Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  return r.transpose();
}

NoiseModel::NoiseModel(NoiseKind kind, Mat gamma)
    : kind_(kind), gamma_(std::move(gamma)), factor_(covariance_factor(gamma_)) {
  degenerate_ = gamma_.cwiseAbs().maxCoeff() == 0.0;
}

Vec NoiseModel::sample(StepRng& rng, double distance_to_manifold) const {
  Vec z(dim());
  Vec draw(dim());
  sample_into(rng, distance_to_manifold, z, draw);
  return draw;
}

void NoiseModel::sample_into(StepRng& rng, double distance_to_manifold,
                             Vec& z_scratch, Vec& out) const {
  const int d = dim();
  if (kind_ == NoiseKind::bounded_rademacher) {
    for (int i = 0; i < d; ++i) z_scratch[i] = rng.next_sign();
  } else {
    for (int i = 0; i < d; ++i) z_scratch[i] = rng.next_normal();
  }
  out.noalias() = factor_ * z_scratch;
  if (kind_ == NoiseKind::state_dependent) {
    const double g = std::min(std::abs(distance_to_manifold), 1.0);
    out *= std::sqrt(1.0 + g);
  }
}

}  // namespace sgdlab

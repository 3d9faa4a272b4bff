#include "sgdlab/linear_oracle.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "sgdlab/noise.hpp"
#include "sgdlab/numerics.hpp"

namespace sgdlab {

double operator_norm(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m.transpose() * m);
  const double top = es.eigenvalues().maxCoeff();
  return std::sqrt(std::max(top, 0.0));
}

namespace {

void validate_h(const Mat& h, double& stability, double& bound, Mat& inverse) {
  if (h.rows() != h.cols() || h.rows() == 0) {
    throw std::invalid_argument("ProductMatrices: H must be square");
  }
  const double scale = 1.0 + h.cwiseAbs().maxCoeff();
  if ((h - h.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("ProductMatrices: H must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  const double top = es.eigenvalues().maxCoeff();
  if (!(top < 0.0)) {
    throw std::invalid_argument("ProductMatrices: spectrum of H must be negative");
  }
  stability = -top;
  bound = -es.eigenvalues().minCoeff();
  inverse = es.eigenvectors() *
            es.eigenvalues().cwiseInverse().asDiagonal() *
            es.eigenvectors().transpose();
}

}  // namespace

ProductMatrices::ProductMatrices(Mat h, ScheduleParams schedule) : h_(std::move(h)) {
  schedule.validate();
  validate_h(h_, stability_, bound_, h_inverse_);
  gamma_ = [schedule](std::uint64_t n) { return step_size(n, schedule); };
  weight_ = [schedule](std::uint64_t n) { return weight(n, schedule.rho); };
  burn_ = [schedule](std::uint64_t n) { return burn_in(n, schedule.beta); };
}

ProductMatrices::ProductMatrices(Mat h, SequenceFn gamma, SequenceFn weight,
                                 std::function<std::uint64_t(std::uint64_t)> burn)
    : h_(std::move(h)),
      gamma_(std::move(gamma)),
      weight_(std::move(weight)),
      burn_(std::move(burn)) {
  validate_h(h_, stability_, bound_, h_inverse_);
}

Mat ProductMatrices::transition(std::uint64_t i, std::uint64_t j) const {
  if (i > j) throw std::invalid_argument("transition: requires i <= j");
  const int d = dim();
  Mat out = Mat::Identity(d, d);
  Mat tmp(d, d);
  for (std::uint64_t r = i + 1; r <= j; ++r) {
    tmp.noalias() = h_ * out;
    out += gamma_(r) * tmp;  // (I + gamma_r H) * out
  }
  return out;
}

Mat ProductMatrices::weighted_sum(std::uint64_t i, std::uint64_t j) const {
  if (i > j) throw std::invalid_argument("weighted_sum: requires i <= j");
  const int d = dim();
  const double bi = weight_(i);
  Mat prod = Mat::Identity(d, d);  // transition(i, r), advanced in r
  Mat acc = weight_(i) * prod;
  Mat tmp(d, d);
  for (std::uint64_t r = i + 1; r <= j; ++r) {
    tmp.noalias() = h_ * prod;
    prod += gamma_(r) * tmp;
    acc += weight_(r) * prod;
  }
  return (gamma_(i) / bi) * acc;
}

double ProductMatrices::limit_residual(std::uint64_t l, std::uint64_t n) const {
  return operator_norm(weighted_sum(l, n) + h_inverse_);
}

double ProductMatrices::max_weighted_norm(std::uint64_t l_min, std::uint64_t n) const {
  if (l_min > n) throw std::invalid_argument("max_weighted_norm: l_min > n");
  // T_l = sum_{r=l}^{n} b_r * transition(l, r) satisfies the backward
  // recurrence T_l = b_l I + (I + gamma_{l+1} H) T_{l+1}; one sweep covers
  // every window ending at n.
  const int d = dim();
  Mat t = weight_(n) * Mat::Identity(d, d);
  Mat tmp(d, d);
  double best = operator_norm((gamma_(n) / weight_(n)) * t);
  for (std::uint64_t l = n; l-- > l_min;) {
    tmp.noalias() = h_ * t;
    t += gamma_(l + 1) * tmp;
    t.diagonal().array() += weight_(l);
    best = std::max(best, operator_norm((gamma_(l) / weight_(l)) * t));
  }
  return best;
}

Vec ProductMatrices::simulate_average(std::uint64_t n, const Mat& gamma_theta,
                                      std::uint64_t master_seed,
                                      std::uint64_t draw_index) const {
  const int d = dim();
  if (gamma_theta.rows() != d || gamma_theta.cols() != d) {
    throw std::invalid_argument("simulate_average: covariance has the wrong shape");
  }
  const Mat factor = covariance_factor(gamma_theta);
  const std::uint64_t n0 = burn_(n);
  if (n <= n0) throw std::invalid_argument("simulate_average: empty window");

  RngStream stream(master_seed, draw_index);

  // Xi_n = (1/b̄_n) sum_i gamma_i T_i D_i with T_i as in max_weighted_norm;
  // the counter-based stream lets us draw D_i in backward order.
  Mat t = weight_(n) * Mat::Identity(d, d);
  Mat tmp(d, d);
  Vec z(d), di(d), tdi(d);
  Vec acc = Vec::Zero(d);
  CompensatedSum mass;

  auto add_term = [&](std::uint64_t i) {
    StepRng rng = stream.at_step(i);
    for (int c = 0; c < d; ++c) z[c] = rng.next_normal();
    di.noalias() = factor * z;
    tdi.noalias() = t * di;
    acc += gamma_(i) * tdi;
    mass.add(weight_(i));
  };

  add_term(n);
  for (std::uint64_t i = n; i-- > n0 + 1;) {
    tmp.noalias() = h_ * t;
    t += gamma_(i + 1) * tmp;
    t.diagonal().array() += weight_(i);
    add_term(i);
  }
  return acc / mass.value();
}

std::vector<Vec> ProductMatrices::simulate_draws(std::uint64_t n,
                                                 const Mat& gamma_theta,
                                                 std::uint64_t master_seed,
                                                 std::uint64_t count,
                                                 int workers) const {
  const int d = dim();
  if (gamma_theta.rows() != d || gamma_theta.cols() != d) {
    throw std::invalid_argument("simulate_draws: covariance has the wrong shape");
  }
  const Mat factor = covariance_factor(gamma_theta);
  const std::uint64_t n0 = burn_(n);
  if (n <= n0) throw std::invalid_argument("simulate_draws: empty window");

  // one evaluation of the sequences for every draw
  const std::size_t len = static_cast<std::size_t>(n - n0);
  std::vector<double> gam(len + 1), wgt(len + 1);
  for (std::uint64_t i = n0 + 1; i <= n; ++i) {
    gam[static_cast<std::size_t>(i - n0)] = gamma_(i);
    wgt[static_cast<std::size_t>(i - n0)] = weight_(i);
  }

  std::vector<Vec> out(count);
  std::atomic<std::uint64_t> next{0};
  auto work = [&]() {
    Mat t(d, d), tmp(d, d);
    Vec z(d), di(d), tdi(d), acc(d);
    for (;;) {
      const std::uint64_t j = next.fetch_add(1);
      if (j >= count) return;
      RngStream stream(master_seed, j);
      t = wgt[len] * Mat::Identity(d, d);
      acc.setZero();
      CompensatedSum mass;
      auto add_term = [&](std::uint64_t i) {
        StepRng rng = stream.at_step(i);
        for (int c = 0; c < d; ++c) z[c] = rng.next_normal();
        di.noalias() = factor * z;
        tdi.noalias() = t * di;
        acc += gam[static_cast<std::size_t>(i - n0)] * tdi;
        mass.add(wgt[static_cast<std::size_t>(i - n0)]);
      };
      add_term(n);
      for (std::uint64_t i = n; i-- > n0 + 1;) {
        tmp.noalias() = h_ * t;
        t += gam[static_cast<std::size_t>(i + 1 - n0)] * tmp;
        t.diagonal().array() += wgt[static_cast<std::size_t>(i - n0)];
        add_term(i);
      }
      out[j] = acc / mass.value();
    }
  };
  const int n_workers = std::max(1, workers);
  if (n_workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return out;
}

Mat ProductMatrices::limit_covariance(const Mat& gamma_theta) const {
  if (gamma_theta.rows() != dim() || gamma_theta.cols() != dim()) {
    throw std::invalid_argument("limit_covariance: covariance has the wrong shape");
  }
  return h_inverse_ * gamma_theta * h_inverse_.transpose();
}

}  // namespace sgdlab

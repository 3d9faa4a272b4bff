#include "sgdlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "sgdlab/schedules.hpp"

namespace sgdlab {

namespace {

constexpr double kPi = std::numbers::pi;

void require_symmetric(const Mat& m, const char* what) {
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument(std::string(what) + ": matrix is not symmetric");
  }
}

// ---------------------------------------------------------------------------
// flat quadratic valley: F(zeta, theta) = -(1/2) theta^T A theta

class FlatQuadratic final : public Problem {
 public:
  FlatQuadratic(int manifold_dim, Mat a) : dzeta_(manifold_dim), a_(std::move(a)) {
    if (dzeta_ < 0) throw std::invalid_argument("flat_quadratic: manifold_dim < 0");
    if (a_.rows() == 0 || a_.rows() != a_.cols()) {
      throw std::invalid_argument("flat_quadratic: A must be square and nonempty");
    }
    require_symmetric(a_, "flat_quadratic");
    Eigen::SelfAdjointEigenSolver<Mat> es(a_);
    const double lo = es.eigenvalues().minCoeff();
    if (!(lo > 0.0)) {
      throw std::invalid_argument("flat_quadratic: A must be positive definite");
    }
    stability_ = lo;
    bound_ = es.eigenvalues().maxCoeff();
  }

  int dim() const override { return dzeta_ + static_cast<int>(a_.rows()); }
  int manifold_dim() const override { return dzeta_; }

  double objective(const Vec& x) const override {
    const Vec theta = x.tail(a_.rows());
    return -0.5 * theta.dot(a_ * theta);
  }

  void gradient_into(const Vec& x, Vec& out) const override {
    out.head(dzeta_).setZero();
    out.tail(a_.rows()).noalias() = -(a_ * x.tail(a_.rows()));
  }

  Mat hessian(const Vec& x) const override {
    (void)x;
    Mat h = Mat::Zero(dim(), dim());
    h.bottomRightCorner(a_.rows(), a_.rows()) = -a_;
    return h;
  }

  double distance(const Vec& x) const override { return x.tail(a_.rows()).norm(); }

  bool in_tube(const Vec& x) const override { return distance(x) < tube_.radius; }

  Vec project(const Vec& x) const override {
    if (!in_tube(x)) throw OutsideTubeError("flat_quadratic: outside attractor tube");
    Vec m = x;
    m.tail(a_.rows()).setZero();
    return m;
  }

  TubeSpec tube() const override { return tube_; }
  double stability() const override { return stability_; }
  double bound() const override { return bound_; }
  std::string kind() const override { return "flat_quadratic"; }

  Vec sample_manifold_point(StepRng& rng) const override {
    Vec m = Vec::Zero(dim());
    for (int i = 0; i < dzeta_; ++i) m[i] = 2.0 * rng.next_uniform() - 1.0;
    return m;
  }

  Vec random_unit_normal(const Vec& m, StepRng& rng) const override {
    (void)m;
    Vec v = Vec::Zero(dim());
    for (int i = 0; i < a_.rows(); ++i) v[dzeta_ + i] = rng.next_normal();
    const double norm = v.norm();
    if (norm == 0.0) {
      v[dzeta_] = 1.0;
      return v;
    }
    return v / norm;
  }

  const Mat& quadratic_form() const { return a_; }

 private:
  int dzeta_;
  Mat a_;
  double stability_ = 0.0;
  double bound_ = 0.0;
  TubeSpec tube_{1.0, 1.0};
};

// ---------------------------------------------------------------------------
// spherical well: F(x) = -(1/4)(|x|^2 - 1)^2, minima on the unit sphere

class SphereWell final : public Problem {
 public:
  explicit SphereWell(int dim) : d_(dim) {
    if (d_ < 2) throw std::invalid_argument("sphere_well: dim must be >= 2");
  }

  int dim() const override { return d_; }
  int manifold_dim() const override { return d_ - 1; }

  double objective(const Vec& x) const override {
    const double s = x.squaredNorm() - 1.0;
    return -0.25 * s * s;
  }

  void gradient_into(const Vec& x, Vec& out) const override {
    out = -(x.squaredNorm() - 1.0) * x;
  }

  Mat hessian(const Vec& x) const override {
    const double s = x.squaredNorm() - 1.0;
    Mat h = -2.0 * x * x.transpose();
    h.diagonal().array() -= s;
    return h;
  }

  double distance(const Vec& x) const override { return std::abs(x.norm() - 1.0); }

  bool in_tube(const Vec& x) const override { return distance(x) < tube_.radius; }

  Vec project(const Vec& x) const override {
    if (!in_tube(x)) throw OutsideTubeError("sphere_well: outside attractor tube");
    return x / x.norm();
  }

  TubeSpec tube() const override { return tube_; }
  double stability() const override { return 2.0; }
  double bound() const override { return 2.0; }
  std::string kind() const override { return "sphere_well"; }

  Vec sample_manifold_point(StepRng& rng) const override {
    Vec v(d_);
    double norm = 0.0;
    do {
      for (int i = 0; i < d_; ++i) v[i] = rng.next_normal();
      norm = v.norm();
    } while (norm < 1e-8);
    return v / norm;
  }

  Vec random_unit_normal(const Vec& m, StepRng& rng) const override {
    return rng.next_sign() * (m / m.norm());
  }

 private:
  int d_;
  TubeSpec tube_{0.5, 0.25};
};

// ---------------------------------------------------------------------------
// hyperbola branch: F(a,b) = -(1/2)(ab - c)^2, minima on {ab = c, a > 0}

class Hyperbola final : public Problem {
 public:
  explicit Hyperbola(double c) : c_(c) {
    if (c_ == 0.0) throw std::invalid_argument("hyperbola_toy: c must be nonzero");
    // Normal eigenvalue magnitude on the manifold is g(t) = t^2 + c^2/t^2,
    // minimized at t = sqrt|c|; the attractor constants cover the tube's
    // parameter range [kTMin, kTMax].
    auto g = [&](double t) { return t * t + c_ * c_ / (t * t); };
    const double t_star = std::sqrt(std::abs(c_));
    stability_ = (t_star >= kTMin && t_star <= kTMax)
                     ? 2.0 * std::abs(c_)
                     : std::min(g(kTMin), g(kTMax));
    bound_ = std::max(g(kTMin), g(kTMax));
  }

  int dim() const override { return 2; }
  int manifold_dim() const override { return 1; }

  double objective(const Vec& x) const override {
    const double r = x[0] * x[1] - c_;
    return -0.5 * r * r;
  }

  void gradient_into(const Vec& x, Vec& out) const override {
    const double r = x[0] * x[1] - c_;
    out[0] = -r * x[1];
    out[1] = -r * x[0];
  }

  Mat hessian(const Vec& x) const override {
    const double r = x[0] * x[1] - c_;
    Mat h(2, 2);
    h(0, 0) = -x[1] * x[1];
    h(1, 1) = -x[0] * x[0];
    h(0, 1) = h(1, 0) = -(x[0] * x[1] + r);
    return h;
  }

  double distance(const Vec& x) const override {
    const double t = closest_parameter(x);
    return (x - point_at(t)).norm();
  }

  bool in_tube(const Vec& x) const override {
    if (x[0] < 0.5 || x[0] > 2.0) return false;
    return distance(x) < tube_.radius;
  }

  Vec project(const Vec& x) const override {
    if (!in_tube(x)) throw OutsideTubeError("hyperbola_toy: outside attractor tube");
    return point_at(closest_parameter(x));
  }

  TubeSpec tube() const override { return tube_; }
  double stability() const override { return stability_; }
  double bound() const override { return bound_; }
  std::string kind() const override { return "hyperbola_toy"; }

  Vec sample_manifold_point(StepRng& rng) const override {
    const double t = 0.7 + 0.9 * rng.next_uniform();
    return point_at(t);
  }

  Vec random_unit_normal(const Vec& m, StepRng& rng) const override {
    return rng.next_sign() * unit_normal_at(m[0]);
  }

  Vec point_at(double t) const {
    Vec p(2);
    p << t, c_ / t;
    return p;
  }

  Vec unit_normal_at(double t) const {
    Vec v(2);
    v << c_ / (t * t), 1.0;
    return v / v.norm();
  }

  // Stationarity of t -> |x - (t, c/t)|^2 in the parametrization; the
  // relevant root is a zero of  phi(t) = t - x1 - (c/t - x2) c/t^2.
  double closest_parameter(const Vec& x) const {
    auto phi = [&](double t) {
      return t - x[0] - (c_ / t - x[1]) * c_ / (t * t);
    };
    auto dphi = [&](double t) {
      return 1.0 + 3.0 * c_ * c_ / (t * t * t * t) - 2.0 * x[1] * c_ / (t * t * t);
    };

    const double lo_limit = 0.05;
    const double hi_limit = 20.0;
    double t = std::clamp(std::max(x[0], 1e-6), lo_limit, hi_limit);

    // phi(t) -> -inf as t -> 0+ and phi(t) ~ t for large t: walk out a
    // bracket around the initial guess.
    double lo = t, hi = t;
    while (phi(lo) > 0.0 && lo > lo_limit) lo = std::max(lo / 1.5, lo_limit);
    while (phi(hi) < 0.0 && hi < hi_limit) hi = std::min(hi * 1.5, hi_limit);

    for (int iter = 0; iter < 60; ++iter) {
      const double ft = phi(t);
      if (ft > 0.0) {
        hi = t;
      } else if (ft < 0.0) {
        lo = t;
      } else {
        return t;
      }
      const double dft = dphi(t);
      double next = (dft != 0.0) ? t - ft / dft : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - t) <= 1e-15 * std::max(1.0, std::abs(t))) {
        return next;
      }
      t = next;
    }
    return t;
  }

  double c() const { return c_; }

 private:
  static constexpr double kTMin = 0.45;
  static constexpr double kTMax = 2.1;

  double c_;
  double stability_ = 0.0;
  double bound_ = 0.0;
  TubeSpec tube_{0.2, 0.2};
};

// ---------------------------------------------------------------------------
// spectral split of the Hessian at a manifold point

struct SpectralSplit {
  Vec eigenvalues;
  Mat eigenvectors;
  std::vector<int> tangent;
  std::vector<int> normal;
  double threshold = 0.0;
};

SpectralSplit split_hessian(const Problem& prob, const Vec& m) {
  if (prob.distance(m) > 1e-8) {
    throw std::invalid_argument(prob.kind() + ": point is not on the manifold");
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(prob.hessian(m));
  SpectralSplit out;
  out.eigenvalues = es.eigenvalues();
  out.eigenvectors = es.eigenvectors();
  const double specrad = out.eigenvalues.cwiseAbs().maxCoeff();
  out.threshold = 1e-8 * (1.0 + specrad);
  for (int i = 0; i < out.eigenvalues.size(); ++i) {
    const double lam = out.eigenvalues[i];
    if (std::abs(lam) <= out.threshold) {
      out.tangent.push_back(i);
    } else if (lam < 0.0) {
      out.normal.push_back(i);
    } else {
      throw SpectralError(prob.kind() + ": positive Hessian eigenvalue " +
                          std::to_string(lam) + " at a manifold point");
    }
  }
  if (static_cast<int>(out.tangent.size()) != prob.manifold_dim()) {
    throw SpectralError(prob.kind() + ": eigen-gap failure, kernel dimension " +
                        std::to_string(out.tangent.size()) + " != manifold dim " +
                        std::to_string(prob.manifold_dim()));
  }
  return out;
}

}  // namespace

Vec Problem::sample_tube_point(StepRng& rng, double dist) const {
  const Vec m = sample_manifold_point(rng);
  return m + dist * random_unit_normal(m, rng);
}

double distance_to_manifold(const Problem& prob, const Vec& x) {
  return (x - prob.project(x)).norm();
}

Mat normal_projector(const Problem& prob, const Vec& m) {
  const SpectralSplit s = split_hessian(prob, m);
  Mat pi = Mat::Zero(prob.dim(), prob.dim());
  for (int i : s.normal) {
    pi += s.eigenvectors.col(i) * s.eigenvectors.col(i).transpose();
  }
  return pi;
}

Mat restricted_inverse(const Problem& prob, const Vec& m) {
  const SpectralSplit s = split_hessian(prob, m);
  Mat b = Mat::Zero(prob.dim(), prob.dim());
  for (int i : s.normal) {
    const double lam = s.eigenvalues[i];
    if (std::abs(lam) <= s.threshold) {
      throw SpectralError(prob.kind() + ": normal eigenvalue too close to zero");
    }
    b += (1.0 / lam) * s.eigenvectors.col(i) * s.eigenvectors.col(i).transpose();
  }
  return b;
}

LimitLaw limit_law(const Problem& prob, const Vec& m, const Mat& gamma, double rho) {
  if (gamma.rows() != prob.dim() || gamma.cols() != prob.dim()) {
    throw std::invalid_argument("limit_law: Gamma has the wrong shape");
  }
  require_symmetric(gamma, "limit_law");
  {
    Eigen::SelfAdjointEigenSolver<Mat> es(gamma);
    const double specrad = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() < -1e-10 * (1.0 + specrad)) {
      throw std::invalid_argument("limit_law: Gamma is not positive semidefinite");
    }
  }

  const SpectralSplit s = split_hessian(prob, m);
  const double factor = c_rho(rho);

  Mat b = Mat::Zero(prob.dim(), prob.dim());
  Mat sqrt_inv = Mat::Zero(prob.dim(), prob.dim());
  for (int i : s.normal) {
    const double lam = s.eigenvalues[i];
    if (std::abs(lam) <= s.threshold) {
      throw SpectralError(prob.kind() + ": normal eigenvalue too close to zero");
    }
    const Mat outer = s.eigenvectors.col(i) * s.eigenvectors.col(i).transpose();
    b += (1.0 / lam) * outer;
    sqrt_inv += (1.0 / std::sqrt(-lam)) * outer;
  }

  LimitLaw law;
  law.limit_point = m;
  law.transform = b;
  law.weight_factor = factor;
  Mat sigma = (factor * factor) * (b * gamma * b.transpose());
  law.sigma = 0.5 * (sigma + sigma.transpose());

  Mat perf = (factor * factor) * (sqrt_inv * gamma * sqrt_inv.transpose());
  perf = 0.5 * (perf + perf.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> pes(perf);
  std::vector<double> spectrum(pes.eigenvalues().data(),
                               pes.eigenvalues().data() + pes.eigenvalues().size());
  std::sort(spectrum.begin(), spectrum.end(), std::greater<>());
  spectrum.resize(prob.normal_dim());
  for (double& v : spectrum) v = std::max(v, 0.0);
  law.perf_spectrum = std::move(spectrum);
  return law;
}

// ---------------------------------------------------------------------------
// charts

namespace {

class FlatChart final : public NiceRepresentation {
 public:
  explicit FlatChart(const FlatQuadratic& prob)
      : dzeta_(prob.manifold_dim()), d_(prob.dim()) {}

  Coords to_chart(const Vec& x) const override {
    return Coords{x.head(dzeta_), x.tail(d_ - dzeta_)};
  }

  Vec from_chart(const Coords& c) const override {
    Vec x(d_);
    x.head(dzeta_) = c.zeta;
    x.tail(d_ - dzeta_) = c.theta;
    return x;
  }

  bool in_domain(const Vec& x) const override {
    (void)x;
    return true;
  }

 private:
  int dzeta_;
  int d_;
};

// Geodesic polar chart of the sphere, recentered by an orthogonal map taking
// the chart center to e1. zeta is the tangent-scaled angular offset; theta
// is the radial offset |x| - 1, which is exactly the distance to the sphere.
class SphereChart final : public NiceRepresentation {
 public:
  SphereChart(int dim, Mat rotation)
      : d_(dim), q_(std::move(rotation)), max_angle_(0.5 * kPi) {}

  Coords to_chart(const Vec& x) const override {
    const Vec y = q_ * x;
    const double r = y.norm();
    if (r < 0.25) throw ChartDomainError("sphere chart: point too close to origin");
    const Vec w = y / r;
    const double c1 = w[0];
    const Vec perp = w.tail(d_ - 1);
    const double s = perp.norm();
    const double angle = std::atan2(s, c1);
    if (angle >= max_angle_) {
      throw ChartDomainError("sphere chart: angle outside chart domain");
    }
    Coords out;
    out.zeta = (s > 1e-300) ? Vec((angle / s) * perp) : Vec(Vec::Zero(d_ - 1));
    out.theta = Vec::Constant(1, r - 1.0);
    return out;
  }

  Vec from_chart(const Coords& c) const override {
    const double angle = c.zeta.norm();
    if (angle >= max_angle_) {
      throw ChartDomainError("sphere chart: angle outside chart domain");
    }
    Vec u(d_);
    u[0] = std::cos(angle);
    if (angle > 1e-300) {
      u.tail(d_ - 1) = (std::sin(angle) / angle) * c.zeta;
    } else {
      u.tail(d_ - 1) = c.zeta;  // sin(a)/a -> 1
    }
    return q_.transpose() * ((1.0 + c.theta[0]) * u);
  }

  bool in_domain(const Vec& x) const override {
    const Vec y = q_ * x;
    const double r = y.norm();
    if (r < 0.25) return false;
    return std::atan2(y.tail(d_ - 1).norm(), y[0]) < max_angle_;
  }

  void write_zeta(const Vec& x, Vec& out) const override {
    if (d_ == 2) {
      // scalar fast path used by per-step drift tracking
      const double y0 = q_(0, 0) * x[0] + q_(0, 1) * x[1];
      const double y1 = q_(1, 0) * x[0] + q_(1, 1) * x[1];
      const double r = std::sqrt(y0 * y0 + y1 * y1);
      if (r < 0.25) throw ChartDomainError("sphere chart: point too close to origin");
      const double angle = std::atan2(std::abs(y1), y0);
      if (angle >= max_angle_) {
        throw ChartDomainError("sphere chart: angle outside chart domain");
      }
      out[0] = std::copysign(angle, y1);
      return;
    }
    out = to_chart(x).zeta;
  }

 private:
  int d_;
  Mat q_;
  double max_angle_;
};

// Chart of the hyperbola branch: zeta = log t (monotone in arc length),
// theta = signed normal offset.
class HyperbolaChart final : public NiceRepresentation {
 public:
  explicit HyperbolaChart(const Hyperbola& prob) : prob_(prob) {}

  Coords to_chart(const Vec& x) const override {
    if (!prob_.in_tube(x)) {
      throw ChartDomainError("hyperbola chart: point outside tube");
    }
    const double t = prob_.closest_parameter(x);
    const Vec p = prob_.point_at(t);
    const Vec nu = prob_.unit_normal_at(t);
    Coords out;
    out.zeta = Vec::Constant(1, std::log(t));
    out.theta = Vec::Constant(1, (x - p).dot(nu));
    return out;
  }

  Vec from_chart(const Coords& c) const override {
    const double t = std::exp(c.zeta[0]);
    return prob_.point_at(t) + c.theta[0] * prob_.unit_normal_at(t);
  }

  bool in_domain(const Vec& x) const override { return prob_.in_tube(x); }

 private:
  const Hyperbola& prob_;
};

Mat reflection_taking_to_e1(const Vec& p) {
  const int d = static_cast<int>(p.size());
  Vec v = p;
  v[0] -= 1.0;
  const double n2 = v.squaredNorm();
  if (n2 < 1e-24) return Mat::Identity(d, d);
  return Mat::Identity(d, d) - (2.0 / n2) * (v * v.transpose());
}

}  // namespace

std::unique_ptr<NiceRepresentation> nice_representation(const Problem& prob) {
  if (const auto* flat = dynamic_cast<const FlatQuadratic*>(&prob)) {
    return std::make_unique<FlatChart>(*flat);
  }
  if (const auto* sphere = dynamic_cast<const SphereWell*>(&prob)) {
    return std::make_unique<SphereChart>(sphere->dim(),
                                         Mat::Identity(sphere->dim(), sphere->dim()));
  }
  if (const auto* hyp = dynamic_cast<const Hyperbola*>(&prob)) {
    return std::make_unique<HyperbolaChart>(*hyp);
  }
  throw std::invalid_argument("nice_representation: built-in problems only");
}

std::unique_ptr<NiceRepresentation> nice_representation(const Problem& prob,
                                                        const Vec& anchor) {
  if (const auto* sphere = dynamic_cast<const SphereWell*>(&prob)) {
    const Vec center = sphere->project(anchor);
    return std::make_unique<SphereChart>(sphere->dim(),
                                         reflection_taking_to_e1(center));
  }
  return nice_representation(prob);
}

std::shared_ptr<const Problem> make_flat_quadratic(int manifold_dim, Mat a) {
  return std::make_shared<FlatQuadratic>(manifold_dim, std::move(a));
}

std::shared_ptr<const Problem> make_sphere_well(int dim) {
  return std::make_shared<SphereWell>(dim);
}

std::shared_ptr<const Problem> make_hyperbola(double c) {
  return std::make_shared<Hyperbola>(c);
}

}  // namespace sgdlab

#pragma once

#include <Eigen/Dense>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgdlab/rng.hpp"

namespace sgdlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Thrown when a point lies outside the attractor tube of a problem.
class OutsideTubeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a chart is evaluated outside its domain.
class ChartDomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when a normal Hessian eigenvalue is too close to zero (or has the
/// wrong sign) for the spectral split to be trustworthy.
class SpectralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tube geometry around the manifold of minima: membership is
/// distance < radius together with a problem-specific localization.
struct TubeSpec {
  double delta = 0.0;
  double radius = 0.0;
};

/// A manifold test problem: objective with a stable manifold of minima,
/// exact gradient and Hessian, closest-point projection on a tube, and the
/// attractor constants of the normal Hessian spectrum.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual int dim() const = 0;
  virtual int manifold_dim() const = 0;
  int normal_dim() const { return dim() - manifold_dim(); }

  virtual double objective(const Vec& x) const = 0;
  virtual Mat hessian(const Vec& x) const = 0;

  /// Gradient written into a preallocated vector; the allocation-free path
  /// used by the simulation hot loop.
  virtual void gradient_into(const Vec& x, Vec& out) const = 0;

  Vec gradient(const Vec& x) const {
    Vec g(dim());
    gradient_into(x, g);
    return g;
  }

  /// Closest manifold point; defined on the tube only.
  /// Throws OutsideTubeError elsewhere, never returns a silent guess.
  virtual Vec project(const Vec& x) const = 0;

  /// Geometric distance to the manifold (defined everywhere it makes sense;
  /// used for tube membership and diagnostics).
  virtual double distance(const Vec& x) const = 0;

  virtual bool in_tube(const Vec& x) const = 0;
  virtual TubeSpec tube() const = 0;

  /// Attractor constants: the normal Hessian spectrum over the tube is
  /// contained in [-bound(), -stability()].
  virtual double stability() const = 0;
  virtual double bound() const = 0;

  virtual std::string kind() const = 0;

  /// Uniform-ish manifold point within the tube's manifold patch.
  virtual Vec sample_manifold_point(StepRng& rng) const = 0;

  /// Manifold point plus dist along a random unit normal.
  Vec sample_tube_point(StepRng& rng, double dist) const;

  /// Random unit normal at a manifold point (uniform over the unit sphere of
  /// the normal space).
  virtual Vec random_unit_normal(const Vec& m, StepRng& rng) const = 0;
};

/// Tube distance |x - project(x)|; throws like project.
double distance_to_manifold(const Problem& prob, const Vec& x);

/// Orthogonal projector onto the normal space at a manifold point, computed
/// as the spectral projector of the Hessian onto its negative eigenspace.
/// Eigenvalues within 1e-8*(1+spectral radius) of zero count as tangent;
/// a positive eigenvalue beyond that is an invariant violation.
Mat normal_projector(const Problem& prob, const Vec& m);

/// Inverse of the Hessian restricted to the normal space, composed with the
/// normal projector: Df(m) * B = B * Df(m) = normal projector.
Mat restricted_inverse(const Problem& prob, const Vec& m);

/// The theoretical limit of the averaged scheme at a manifold point.
struct LimitLaw {
  Vec limit_point;
  Mat transform;                     // B = (Df|_N)^{-1} Pi_N
  Mat sigma;                         // c(rho)^2 * B Gamma B^T
  std::vector<double> perf_spectrum; // eigenvalues of c^2 (-Df|_N)^{-1/2} Pi Gamma Pi (-Df|_N)^{-1/2}
  double weight_factor = 1.0;        // c(rho)
};

LimitLaw limit_law(const Problem& prob, const Vec& m, const Mat& gamma,
                   double rho);

/// Chart pair (psi, phi) splitting a tube neighbourhood into tangential
/// coordinates zeta and an isometric normal offset theta: the manifold is
/// {theta = 0} and |theta| equals the distance to the manifold.
class NiceRepresentation {
 public:
  struct Coords {
    Vec zeta;
    Vec theta;
  };

  virtual ~NiceRepresentation() = default;
  virtual Coords to_chart(const Vec& x) const = 0;  // throws ChartDomainError
  virtual Vec from_chart(const Coords& c) const = 0;
  virtual bool in_domain(const Vec& x) const = 0;

  /// Tangential coordinates only, written into a preallocated vector of
  /// size manifold_dim; the allocation-free path for per-step tracking.
  virtual void write_zeta(const Vec& x, Vec& out) const {
    out = to_chart(x).zeta;
  }
};

/// Canonical chart of a built-in problem.
std::unique_ptr<NiceRepresentation> nice_representation(const Problem& prob);

/// Chart recentered so that the projection of anchor sits at zeta = 0; used
/// to keep a whole trajectory window inside one chart.
std::unique_ptr<NiceRepresentation> nice_representation(const Problem& prob,
                                                        const Vec& anchor);

/// F(zeta, theta) = -(1/2) theta^T A theta on R^{manifold_dim + A.rows()};
/// the manifold of minima is the flat subspace {theta = 0}. A must be
/// symmetric positive definite.
std::shared_ptr<const Problem> make_flat_quadratic(int manifold_dim, Mat a);

/// F(x) = -(1/4)(|x|^2 - 1)^2 on R^dim, dim >= 2; the manifold is the unit
/// sphere.
std::shared_ptr<const Problem> make_sphere_well(int dim);

/// F(a,b) = -(1/2)(ab - c)^2 on R^2, c != 0; the manifold is the hyperbola
/// branch {ab = c, a > 0}.
std::shared_ptr<const Problem> make_hyperbola(double c);

}  // namespace sgdlab

#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string_view>

#include "ibpg/errors.hpp"

namespace ibpg {

/// Problem-shaped dense iterate. Vectors are stored as n×1 matrices.
using Point = Eigen::MatrixXd;

/// Throws DomainError(not_finite) if any entry is NaN or infinite.
void require_finite(const Point& x, std::string_view what);

/// Frobenius inner product.
inline double inner(const Point& a, const Point& b) { return (a.array() * b.array()).sum(); }

/// A Legendre-type kernel φ together with its domain predicates.
///
/// Implementations are immutable and may be shared between threads.
class BregmanKernel {
 public:
  virtual ~BregmanKernel() = default;

  virtual std::string_view name() const = 0;
  virtual double value(const Point& x) const = 0;
  /// ∇φ, defined on the interior of the domain only.
  virtual Point gradient(const Point& x) const = 0;
  virtual bool in_domain(const Point& x) const = 0;
  virtual bool in_interior(const Point& x) const = 0;

  /// Kernel-specific evaluation of D_φ(x, y) with no domain checks or
  /// clamping. The default is the generic φ(x) − φ(y) − ⟨∇φ(y), x − y⟩.
  virtual double distance_unchecked(const Point& x, const Point& y) const;
};

/// φ(x) = Σ x log x − x on the nonnegative orthant, with 0·log 0 = 0.
class EntropyKernel final : public BregmanKernel {
 public:
  explicit EntropyKernel(double interior_floor = 1e-300) : floor_(interior_floor) {}

  std::string_view name() const override { return "entropy"; }
  double value(const Point& x) const override;
  Point gradient(const Point& x) const override;
  bool in_domain(const Point& x) const override;
  bool in_interior(const Point& x) const override;
  /// Σ x log(x/y) − x + y, evaluated termwise through log1p.
  double distance_unchecked(const Point& x, const Point& y) const override;

  double interior_floor() const noexcept { return floor_; }

 private:
  double floor_;
};

/// φ(x) = ½‖x‖², whose Bregman distance is ½‖x − y‖².
class QuadraticKernel final : public BregmanKernel {
 public:
  std::string_view name() const override { return "quadratic"; }
  double value(const Point& x) const override;
  Point gradient(const Point& x) const override;
  bool in_domain(const Point& x) const override;
  bool in_interior(const Point& x) const override;
  double distance_unchecked(const Point& x, const Point& y) const override;
};

struct DistanceOptions {
  /// Values in [−clamp·scale, 0) are treated as round-off and returned as 0,
  /// with scale = 1 + ‖x‖₁ + ‖y‖₁.
  double clamp = 1e-12;
};

/// D_φ(x, y). Requires x ∈ dom φ and y ∈ int dom φ.
///
/// Throws DomainError with kind not_in_domain (x) or not_interior (y), and
/// NumericalError when the result is negative beyond round-off.
double bregman_distance(const BregmanKernel& kernel, const Point& x, const Point& y,
                        DistanceOptions opts = {});

/// Same contract as bregman_distance but always through the generic
/// φ(x) − φ(y) − ⟨∇φ(y), x − y⟩ formula. Kept for cross-checking.
double bregman_distance_generic(const BregmanKernel& kernel, const Point& x, const Point& y,
                                DistanceOptions opts = {});

/// ⟨∇φ(a) − ∇φ(b), c − d⟩ − [D(c,b) + D(d,a) − D(c,a) − D(d,b)].
///
/// Zero up to round-off for any valid quadruple; exists as a test oracle.
double four_points_gap(const BregmanKernel& kernel, const Point& a, const Point& b,
                       const Point& c, const Point& d);

/// Axis-aligned box {x : lower ≤ x ≤ upper} used as the restriction set.
struct BoxSet {
  double lower = 0.0;
  double upper = 1.0;

  bool contains(const Point& x, double tol = 0.0) const;
};

/// Constants of the (restricted) relative smoothness of f with respect to φ.
struct SmoothnessDescriptor {
  double L = 0.0;
  double tau = 1.0;
  double gamma = 1.0;
  BoxSet restriction{};

  /// Throws ConfigError unless L ≥ 0, τ > 0 and γ ≥ 1.
  void validate() const;
};

/// A differentiable objective given by value and gradient callbacks.
struct SmoothObjective {
  std::function<double(const Point&)> value;
  std::function<Point(const Point&)> gradient;

  /// D_f(a, b) = f(a) − f(b) − ⟨∇f(b), a − b⟩.
  double bregman(const Point& a, const Point& b) const;
};

struct PointPair {
  Point x;  ///< interior point where ∇f and ∇φ are evaluated
  Point y;
};

struct ExponentSample {
  Point x;
  Point z_tilde;
  Point z;
  double theta = 1.0;
};

struct ViolationReport {
  double max_violation = -std::numeric_limits<double>::infinity();
  /// Largest violation divided by 1 + |lhs| + |rhs|.
  double max_relative_violation = -std::numeric_limits<double>::infinity();
  std::size_t worst_index = 0;
  std::size_t samples = 0;

  bool consistent(double tol = 0.0) const { return max_violation <= tol; }
};

/// Max over samples of f(y) − f(x) − ⟨∇f(x), y − x⟩ − L·D_φ(y, x).
ViolationReport check_relative_smoothness(const SmoothObjective& f, const BregmanKernel& kernel,
                                          const SmoothnessDescriptor& desc,
                                          std::span<const PointPair> samples);

/// Max over samples of D_f((1−θ)x+θz̃, (1−θ)x+θz) − τLθ^γ D_φ(z̃, z).
ViolationReport check_restricted_exponent(const SmoothObjective& f, const BregmanKernel& kernel,
                                          const SmoothnessDescriptor& desc,
                                          std::span<const ExponentSample> samples);

}  // namespace ibpg

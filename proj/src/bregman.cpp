#include "ibpg/bregman.hpp"

#include <cmath>
#include <string>

namespace ibpg {

void require_finite(const Point& x, std::string_view what) {
  if (!x.allFinite()) {
    throw DomainError(DomainError::Kind::not_finite, std::string(what) + " has non-finite entries");
  }
}

double BregmanKernel::distance_unchecked(const Point& x, const Point& y) const {
  return value(x) - value(y) - inner(gradient(y), x - y);
}

// ---- entropy -------------------------------------------------------------

double EntropyKernel::value(const Point& x) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x.data()[i];
    if (v > 0.0) sum += v * std::log(v) - v;
  }
  return sum;
}

Point EntropyKernel::gradient(const Point& x) const {
  if (!in_interior(x)) {
    throw DomainError(DomainError::Kind::not_interior, "entropy gradient: point not interior");
  }
  return x.array().log().matrix();
}

bool EntropyKernel::in_domain(const Point& x) const {
  return x.allFinite() && (x.array() >= 0.0).all();
}

bool EntropyKernel::in_interior(const Point& x) const {
  return x.allFinite() && (x.array() >= floor_).all() && (x.array() > 0.0).all();
}

double EntropyKernel::distance_unchecked(const Point& x, const Point& y) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x.data()[i];
    const double yi = y.data()[i];
    if (xi == 0.0) {
      sum += yi;
      continue;
    }
    // y·((1+d)·log1p(d) − d) with d = (x − y)/y; the log1p form only pays
    // off when x ≈ y and breaks down as x/y → 0.
    const double d = (xi - yi) / yi;
    if (std::abs(d) > 0.5) {
      sum += xi * std::log(xi / yi) - xi + yi;
    } else {
      sum += yi * ((1.0 + d) * std::log1p(d) - d);
    }
  }
  return sum;
}

// ---- quadratic -----------------------------------------------------------

double QuadraticKernel::value(const Point& x) const { return 0.5 * x.squaredNorm(); }

Point QuadraticKernel::gradient(const Point& x) const { return x; }

bool QuadraticKernel::in_domain(const Point& x) const { return x.allFinite(); }

bool QuadraticKernel::in_interior(const Point& x) const { return x.allFinite(); }

double QuadraticKernel::distance_unchecked(const Point& x, const Point& y) const {
  return 0.5 * (x - y).squaredNorm();
}

// ---- distances -----------------------------------------------------------

namespace {

void check_pair(const BregmanKernel& kernel, const Point& x, const Point& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw DomainError(DomainError::Kind::shape_mismatch, "bregman distance: shape mismatch");
  }
  if (!kernel.in_interior(y)) {
    throw DomainError(DomainError::Kind::not_interior,
                      std::string(kernel.name()) + ": y not interior");
  }
  if (!kernel.in_domain(x)) {
    throw DomainError(DomainError::Kind::not_in_domain,
                      std::string(kernel.name()) + ": x not in domain");
  }
}

double clamp_distance(double d, const Point& x, const Point& y, double clamp) {
  if (d >= 0.0) return d;
  const double scale = 1.0 + x.lpNorm<1>() + y.lpNorm<1>();
  if (d >= -clamp * scale) return 0.0;
  throw NumericalError("bregman distance negative beyond round-off: " + std::to_string(d));
}

}  // namespace

double bregman_distance(const BregmanKernel& kernel, const Point& x, const Point& y,
                        DistanceOptions opts) {
  check_pair(kernel, x, y);
  return clamp_distance(kernel.distance_unchecked(x, y), x, y, opts.clamp);
}

double bregman_distance_generic(const BregmanKernel& kernel, const Point& x, const Point& y,
                                DistanceOptions opts) {
  check_pair(kernel, x, y);
  const double d = kernel.BregmanKernel::distance_unchecked(x, y);
  // The generic form cancels badly; scale the clamp by the magnitudes involved.
  const double magnitude = std::abs(kernel.value(x)) + std::abs(kernel.value(y));
  if (d < 0.0 && d >= -opts.clamp * (1.0 + magnitude)) return 0.0;
  return clamp_distance(d, x, y, opts.clamp);
}

double four_points_gap(const BregmanKernel& kernel, const Point& a, const Point& b,
                       const Point& c, const Point& d) {
  const double lhs = inner(kernel.gradient(a) - kernel.gradient(b), c - d);
  const double rhs = bregman_distance(kernel, c, b) + bregman_distance(kernel, d, a) -
                     bregman_distance(kernel, c, a) - bregman_distance(kernel, d, b);
  return lhs - rhs;
}

// ---- smoothness checks ---------------------------------------------------

bool BoxSet::contains(const Point& x, double tol) const {
  return (x.array() >= lower - tol).all() && (x.array() <= upper + tol).all();
}

void SmoothnessDescriptor::validate() const {
  if (!(L >= 0.0)) throw ConfigError("smoothness: L must be nonnegative");
  if (!(tau > 0.0)) throw ConfigError("smoothness: tau must be positive");
  if (!(gamma >= 1.0)) throw ConfigError("smoothness: gamma must be at least 1");
  if (!(restriction.lower <= restriction.upper)) throw ConfigError("smoothness: empty box");
}

double SmoothObjective::bregman(const Point& a, const Point& b) const {
  return value(a) - value(b) - inner(gradient(b), a - b);
}

namespace {

void record(ViolationReport& report, std::size_t index, double lhs, double rhs) {
  const double violation = lhs - rhs;
  const double relative = violation / (1.0 + std::abs(lhs) + std::abs(rhs));
  if (violation > report.max_violation) {
    report.max_violation = violation;
    report.worst_index = index;
  }
  report.max_relative_violation = std::max(report.max_relative_violation, relative);
  ++report.samples;
}

}  // namespace

ViolationReport check_relative_smoothness(const SmoothObjective& f, const BregmanKernel& kernel,
                                          const SmoothnessDescriptor& desc,
                                          std::span<const PointPair> samples) {
  desc.validate();
  ViolationReport report;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& [x, y] = samples[i];
    const double lhs = f.value(y);
    const double rhs = f.value(x) + inner(f.gradient(x), y - x) + desc.L * bregman_distance(kernel, y, x);
    record(report, i, lhs, rhs);
  }
  return report;
}

ViolationReport check_restricted_exponent(const SmoothObjective& f, const BregmanKernel& kernel,
                                          const SmoothnessDescriptor& desc,
                                          std::span<const ExponentSample> samples) {
  desc.validate();
  ViolationReport report;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!(s.theta > 0.0 && s.theta <= 1.0)) throw ConfigError("restricted exponent: theta not in (0,1]");
    const Point a = (1.0 - s.theta) * s.x + s.theta * s.z_tilde;
    const Point b = (1.0 - s.theta) * s.x + s.theta * s.z;
    const double lhs = f.bregman(a, b);
    const double rhs = desc.tau * desc.L * std::pow(s.theta, desc.gamma) *
                       bregman_distance(kernel, s.z_tilde, s.z);
    record(report, i, lhs, rhs);
  }
  return report;
}

}  // namespace ibpg

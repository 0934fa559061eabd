#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace ibpg {

// ---------------------------------------------------------------------------
// θ sequences for the inertial method
// ---------------------------------------------------------------------------

/// θ_k = (α−1)/(k+α−1) for k ≥ 1 and θ_0 = 1. Throws ConfigError if α < γ+1.
double theta_closed_form(std::size_t k, double alpha, double gamma);

/// Solves (1−θ)/θ^γ = 1/θ_prev^γ for θ ∈ (0, θ_prev] by bisection.
///
/// The returned value is the upper end of the final bracket, so the slack
/// 1/θ_prev^γ − (1−θ)/θ^γ is never negative when evaluated.
double theta_root_find(double theta_prev, double gamma);

enum class ThetaMode { closed_form, root_find, explicit_values };

/// Sequence {θ_k}_{k≥−1} with θ_{−1} = θ_0 = 1.
///
/// Values are cached lazily behind a mutex; copies share the cache.
class ThetaSchedule {
 public:
  static ThetaSchedule closed_form(double alpha, double gamma);
  static ThetaSchedule root_find(double gamma);
  /// θ_k for k ≥ 1 given by `theta_k`; θ_0 = 1 regardless. Test and
  /// experimentation hook; no admissibility is assumed.
  static ThetaSchedule from_function(double gamma, std::function<double(std::size_t)> theta_k,
                                     std::string label = "explicit");

  ThetaMode mode() const noexcept { return mode_; }
  double gamma() const noexcept { return gamma_; }
  /// α of the closed form; NaN for the other modes.
  double alpha() const noexcept { return alpha_; }
  std::string describe() const;

  /// θ_k for k ≥ −1.
  double theta(long long k) const;
  /// ϑ_k = 1/θ_{k−1}^γ − (1−θ_k)/θ_k^γ. Throws ScheduleError when the value
  /// is negative beyond relative round-off.
  double vartheta(std::size_t k) const;
  /// ϑ_k without the sign check.
  double vartheta_raw(std::size_t k) const;

  /// Fills the cache up to k_max so the schedule can be shared read-only.
  void materialize(std::size_t k_max) const;

 private:
  struct Cache;

  ThetaSchedule(ThetaMode mode, double gamma, double alpha,
                std::function<double(std::size_t)> fn, std::string label);

  ThetaMode mode_;
  double gamma_;
  double alpha_;
  std::string label_;
  std::shared_ptr<Cache> cache_;
};

struct ThetaValidation {
  bool passed = true;
  std::optional<std::size_t> first_violation;
  std::string condition;  ///< which check failed first
  std::size_t checked_up_to = 0;
  /// max_k ((α−1)/(k+α−1))^γ Σ_{i≤k} ϑ_i (closed form only, else NaN)
  double max_prefactor_sum = 0.0;
};

/// Checks, for every k ≤ k_max: the closed-form cap θ_k ≤ (α−1)/(k+α−1)
/// (closed-form mode), ϑ_k ≥ 0, θ_k ≥ 1/(k+γ), and Σ_{i≤k} ϑ_i ≤ 2 + (k+1+γ)^γ/γ.
ThetaValidation validate_theta(const ThetaSchedule& schedule, std::size_t k_max);

/// 2 + max{(α−1)^γ, (1+γ)^γ}/γ, the uniform bound on the prefactor times Σϑ.
double prefactor_sum_bound(double alpha, double gamma);

// ---------------------------------------------------------------------------
// Tolerance sequences {η_k, μ_k, ν_k}
// ---------------------------------------------------------------------------

/// Analytic nonnegative sequence used for one tolerance channel.
struct DecaySequence {
  enum class Form { zero, constant, power, geometric };

  Form form = Form::zero;
  double scale = 1.0;
  /// exponent p for power (scale/(k+1)^p), ratio r for geometric (scale·r^k)
  double rate = 0.0;

  static DecaySequence zero() { return {}; }
  static DecaySequence constant(double c) { return {Form::constant, c, 0.0}; }
  static DecaySequence power(double p, double scale = 1.0) { return {Form::power, scale, p}; }
  static DecaySequence geometric(double r, double scale = 1.0) { return {Form::geometric, scale, r}; }

  double at(std::size_t k) const;
  std::string describe() const;
};

enum class Normalization { none, bounded_domain, iterate_normalized };

struct ToleranceTriple {
  double eta = 0.0;
  double mu = 0.0;
  double nu = 0.0;
};

struct ToleranceSchedule {
  DecaySequence eta{};
  DecaySequence mu{};
  DecaySequence nu{};
  Normalization normalization = Normalization::none;
  /// Lower bound applied to every channel whose form is not `zero`.
  double floor = 1e-10;

  /// η ≡ ν ≡ 0 and μ_k = max{1/(k+1)^p, floor}.
  static ToleranceSchedule power_rule(double p, double floor = 1e-10);
  /// All channels zero: the exact method.
  static ToleranceSchedule exact();

  /// The triple for iteration k. In iterate_normalized mode η_k is divided by
  /// (‖x̃^{k+1}‖ + 1) and `iterate_norm` is required (ConfigError otherwise).
  ToleranceTriple at(std::size_t k, std::optional<double> iterate_norm = std::nullopt) const;

  void validate() const;
  std::string describe() const;
};

enum class SolverKind { ibpg, vibpg };

/// Which convergence guarantees the analytic decay of a schedule supports,
/// assuming bounded iterates (the floor is ignored: it is a numerical guard).
struct SummabilityClass {
  bool classified = true;
  bool avg_rate = false;           ///< Σ η, Σ μ, Σ ν < ∞
  bool last_iterate_rate = false;  ///< Σ kη, Σ kμ, Σ kν < ∞
  bool vibpg_rate = false;         ///< Σ θ^{1−γ}η, Σ μ, Σ θ^{1−γ}ν < ∞

  bool sufficient_for(SolverKind kind) const { return kind == SolverKind::ibpg ? avg_rate : vibpg_rate; }
  /// "unclassified", "insufficient", or a '+'-joined list of satisfied classes.
  std::string label() const;
};

SummabilityClass summability_class(const ToleranceSchedule& schedule, double gamma);

// ---------------------------------------------------------------------------
// Running error sums for bound verification
// ---------------------------------------------------------------------------

/// Running sums of the error terms entering the function-value bounds.
/// All members are nondecreasing.
struct ErrorAccumulator {
  std::size_t steps = 0;

  double sum_eta = 0.0;                ///< Σ η_i
  double sum_eta_norm_next = 0.0;      ///< Σ η_i‖x̃^{i+1}‖
  double sum_eta_norm1 = 0.0;          ///< Σ η_i(‖x̃^{i+1}‖+1)
  double sum_mu = 0.0;                 ///< Σ μ_i
  double sum_nu = 0.0;                 ///< Σ ν_i
  double sum_i_eta_norm = 0.0;         ///< Σ i·η_i(‖x̃^{i+1}‖+‖x̃^i‖+1)
  double sum_i_mu = 0.0;               ///< Σ i·μ_i
  double sum_i_nu = 0.0;               ///< Σ i·ν_i
  double sum_i_xi = 0.0;               ///< Σ i·ξ_i
  double sum_theta_eta = 0.0;          ///< Σ θ_i^{1−γ}η_i
  double sum_theta_eta_norm = 0.0;     ///< Σ θ_i^{1−γ}η_i‖z̃^{i+1}‖
  double sum_theta_eta_norm1 = 0.0;    ///< Σ θ_i^{1−γ}η_i(‖z̃^{i+1}‖+1)
  double sum_theta_nu = 0.0;           ///< Σ θ_i^{1−γ}ν_i
  double sum_vartheta = 0.0;           ///< Σ ϑ_i

  /// iBPG step i with ξ_i = η_i‖x̃^{i+1} − x̃^i‖ + L(μ_i + μ_{i−1}) + ν_i.
  void add_ibpg(double eta, double mu, double mu_prev, double nu, double norm_next,
                double norm_cur, double norm_diff, double L);
  /// v-iBPG step i.
  void add_vibpg(double theta, double gamma, double vartheta, double eta, double mu, double nu,
                 double norm_next);

  /// ξ_i of the most recent iBPG step.
  double last_xi = 0.0;
};

}  // namespace ibpg

#include "ibpg/schedules.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <vector>

#include "ibpg/errors.hpp"

namespace ibpg {

namespace {

// 1/θ_prev^γ − (1−θ)/θ^γ; shared by the root finder and ϑ so both see the
// same rounding.
double theta_slack(double theta_prev, double theta, double gamma) {
  return 1.0 / std::pow(theta_prev, gamma) - (1.0 - theta) / std::pow(theta, gamma);
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

double theta_closed_form(std::size_t k, double alpha, double gamma) {
  if (!(gamma >= 1.0)) throw ConfigError("theta: gamma must be at least 1");
  if (!(alpha >= gamma + 1.0)) throw ConfigError("theta: alpha must be at least gamma + 1");
  if (k == 0) return 1.0;
  return (alpha - 1.0) / (static_cast<double>(k) + alpha - 1.0);
}

double theta_root_find(double theta_prev, double gamma) {
  if (!(theta_prev > 0.0 && theta_prev <= 1.0)) throw ConfigError("theta_root_find: theta_prev not in (0,1]");
  if (!(gamma >= 1.0)) throw ConfigError("theta_root_find: gamma must be at least 1");
  // slack(θ) is increasing in θ, negative near 0 and nonnegative at θ_prev.
  double hi = theta_prev;
  double lo = 0.5 * theta_prev;
  while (theta_slack(theta_prev, lo, gamma) >= 0.0) {
    hi = lo;
    lo *= 0.5;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (theta_slack(theta_prev, mid, gamma) >= 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

struct ThetaSchedule::Cache {
  std::mutex mutex;
  std::vector<double> values{1.0};  // θ_0, θ_1, ...
  std::function<double(std::size_t)> fn;
};

ThetaSchedule::ThetaSchedule(ThetaMode mode, double gamma, double alpha,
                             std::function<double(std::size_t)> fn, std::string label)
    : mode_(mode), gamma_(gamma), alpha_(alpha), label_(std::move(label)),
      cache_(std::make_shared<Cache>()) {
  if (!(gamma >= 1.0)) throw ConfigError("theta schedule: gamma must be at least 1");
  cache_->fn = std::move(fn);
}

ThetaSchedule ThetaSchedule::closed_form(double alpha, double gamma) {
  (void)theta_closed_form(1, alpha, gamma);  // validates α ≥ γ+1
  return ThetaSchedule(ThetaMode::closed_form, gamma, alpha,
                       [alpha, gamma](std::size_t k) { return theta_closed_form(k, alpha, gamma); },
                       "closed_form");
}

ThetaSchedule ThetaSchedule::root_find(double gamma) {
  return ThetaSchedule(ThetaMode::root_find, gamma, kNaN, nullptr, "root_find");
}

ThetaSchedule ThetaSchedule::from_function(double gamma, std::function<double(std::size_t)> theta_k,
                                           std::string label) {
  return ThetaSchedule(ThetaMode::explicit_values, gamma, kNaN, std::move(theta_k), std::move(label));
}

std::string ThetaSchedule::describe() const {
  std::ostringstream os;
  os << label_ << "(gamma=" << gamma_;
  if (mode_ == ThetaMode::closed_form) os << ", alpha=" << alpha_;
  os << ")";
  return os.str();
}

void ThetaSchedule::materialize(std::size_t k_max) const {
  std::lock_guard lock(cache_->mutex);
  auto& values = cache_->values;
  values.reserve(k_max + 1);
  while (values.size() <= k_max) {
    const std::size_t k = values.size();
    double next = 0.0;
    if (mode_ == ThetaMode::root_find) {
      next = theta_root_find(values.back(), gamma_);
    } else {
      next = cache_->fn(k);
    }
    if (!(next > 0.0 && next <= 1.0)) {
      throw ScheduleError("theta_" + std::to_string(k) + " = " + std::to_string(next) + " not in (0,1]");
    }
    values.push_back(next);
  }
}

double ThetaSchedule::theta(long long k) const {
  if (k <= 0) return 1.0;
  const auto idx = static_cast<std::size_t>(k);
  if (mode_ == ThetaMode::closed_form) return theta_closed_form(idx, alpha_, gamma_);
  {
    std::lock_guard lock(cache_->mutex);
    if (idx < cache_->values.size()) return cache_->values[idx];
  }
  materialize(idx);
  std::lock_guard lock(cache_->mutex);
  return cache_->values[idx];
}

double ThetaSchedule::vartheta_raw(std::size_t k) const {
  const auto kk = static_cast<long long>(k);
  return theta_slack(theta(kk - 1), theta(kk), gamma_);
}

double ThetaSchedule::vartheta(std::size_t k) const {
  const double value = vartheta_raw(k);
  const double scale = 1.0 / std::pow(theta(static_cast<long long>(k) - 1), gamma_);
  if (value < -1e-14 * scale) {
    throw ScheduleError("vartheta_" + std::to_string(k) + " = " + std::to_string(value) + " < 0");
  }
  return std::max(value, 0.0);
}

double prefactor_sum_bound(double alpha, double gamma) {
  return 2.0 + std::max(std::pow(alpha - 1.0, gamma), std::pow(1.0 + gamma, gamma)) / gamma;
}

ThetaValidation validate_theta(const ThetaSchedule& schedule, std::size_t k_max) {
  ThetaValidation out;
  const double gamma = schedule.gamma();
  const bool closed = schedule.mode() == ThetaMode::closed_form;
  const double alpha = schedule.alpha();
  out.max_prefactor_sum = closed ? 0.0 : kNaN;

  auto fail = [&](std::size_t k, const char* what) {
    out.passed = false;
    out.first_violation = k;
    out.condition = what;
    out.checked_up_to = k;
    return out;
  };

  double sum_vartheta = 0.0;
  for (std::size_t k = 0; k <= k_max; ++k) {
    double theta = 0.0;
    try {
      theta = schedule.theta(static_cast<long long>(k));
    } catch (const ScheduleError&) {
      return fail(k, "theta in (0,1]");
    }
    const double kd = static_cast<double>(k);
    if (closed && k >= 1 && theta > (alpha - 1.0) / (kd + alpha - 1.0) * (1.0 + 1e-14)) {
      return fail(k, "theta_k <= (alpha-1)/(k+alpha-1)");
    }
    const double vt = schedule.vartheta_raw(k);
    const double scale = 1.0 / std::pow(schedule.theta(static_cast<long long>(k) - 1), gamma);
    if (vt < -1e-14 * scale) return fail(k, "vartheta_k >= 0");
    if (theta < 1.0 / (kd + gamma) - 1e-14) return fail(k, "theta_k >= 1/(k+gamma)");
    sum_vartheta += vt;
    const double sum_bound = 2.0 + std::pow(kd + 1.0 + gamma, gamma) / gamma;
    if (sum_vartheta > sum_bound * (1.0 + 1e-12)) return fail(k, "sum vartheta <= 2 + (k+1+gamma)^gamma/gamma");
    if (closed) {
      const double pref = std::pow((alpha - 1.0) / (kd + alpha - 1.0), gamma);
      out.max_prefactor_sum = std::max(out.max_prefactor_sum, pref * sum_vartheta);
    }
  }
  out.checked_up_to = k_max;
  return out;
}

// ---- tolerance schedules ---------------------------------------------------

double DecaySequence::at(std::size_t k) const {
  const double kd = static_cast<double>(k);
  switch (form) {
    case Form::zero:
      return 0.0;
    case Form::constant:
      return scale;
    case Form::power:
      return scale / std::pow(kd + 1.0, rate);
    case Form::geometric:
      return scale * std::pow(rate, kd);
  }
  return 0.0;
}

std::string DecaySequence::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (form) {
    case Form::zero:
      os << "zero";
      break;
    case Form::constant:
      os << "constant(" << scale << ")";
      break;
    case Form::power:
      os << "power(scale=" << scale << ", p=" << rate << ")";
      break;
    case Form::geometric:
      os << "geometric(scale=" << scale << ", r=" << rate << ")";
      break;
  }
  return os.str();
}

ToleranceSchedule ToleranceSchedule::power_rule(double p, double floor) {
  ToleranceSchedule s;
  s.mu = DecaySequence::power(p);
  s.floor = floor;
  s.normalization = Normalization::bounded_domain;
  s.validate();
  return s;
}

ToleranceSchedule ToleranceSchedule::exact() {
  ToleranceSchedule s;
  s.floor = 0.0;
  return s;
}

void ToleranceSchedule::validate() const {
  for (const auto* seq : {&eta, &mu, &nu}) {
    if (!(seq->scale >= 0.0)) throw ConfigError("tolerance: negative scale");
    if (seq->form == DecaySequence::Form::power && !(seq->rate > 0.0)) {
      throw ConfigError("tolerance: power exponent must be positive");
    }
    if (seq->form == DecaySequence::Form::geometric && !(seq->rate > 0.0)) {
      throw ConfigError("tolerance: geometric ratio must be positive");
    }
  }
  if (!(floor >= 0.0)) throw ConfigError("tolerance: negative floor");
}

ToleranceTriple ToleranceSchedule::at(std::size_t k, std::optional<double> iterate_norm) const {
  auto channel = [&](const DecaySequence& seq) {
    if (seq.form == DecaySequence::Form::zero) return 0.0;
    return std::max(seq.at(k), floor);
  };
  ToleranceTriple t{channel(eta), channel(mu), channel(nu)};
  if (normalization == Normalization::iterate_normalized) {
    if (!iterate_norm) throw ConfigError("tolerance: iterate norm required in normalized mode");
    t.eta /= (*iterate_norm + 1.0);
  }
  return t;
}

std::string ToleranceSchedule::describe() const {
  std::ostringstream os;
  os << "eta=" << eta.describe() << "; mu=" << mu.describe() << "; nu=" << nu.describe()
     << "; floor=" << floor << "; normalization="
     << (normalization == Normalization::none              ? "none"
         : normalization == Normalization::bounded_domain ? "bounded_domain"
                                                          : "iterate_normalized");
  return os.str();
}

namespace {

// Decay exponent a such that s_k ~ k^{−a}; +inf for zero/geometric decay.
double decay_exponent(const DecaySequence& seq) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (seq.scale == 0.0) return inf;
  switch (seq.form) {
    case DecaySequence::Form::zero:
      return inf;
    case DecaySequence::Form::constant:
      return 0.0;
    case DecaySequence::Form::power:
      return seq.rate;
    case DecaySequence::Form::geometric:
      return seq.rate < 1.0 ? inf : (seq.rate == 1.0 ? 0.0 : -inf);
  }
  return kNaN;
}

// Σ k^weight s_k < ∞.
bool summable(double exponent, double weight) { return exponent > weight + 1.0; }

}  // namespace

SummabilityClass summability_class(const ToleranceSchedule& schedule, double gamma) {
  SummabilityClass c;
  const double pe = decay_exponent(schedule.eta);
  const double pm = decay_exponent(schedule.mu);
  const double pn = decay_exponent(schedule.nu);
  if (std::isnan(pe) || std::isnan(pm) || std::isnan(pn)) {
    c.classified = false;
    return c;
  }
  c.avg_rate = summable(pe, 0) && summable(pm, 0) && summable(pn, 0);
  c.last_iterate_rate = summable(pe, 1) && summable(pm, 1) && summable(pn, 1);
  // θ_k = Θ(1/k) on admissible schedules, so θ_k^{1−γ} ~ k^{γ−1}.
  c.vibpg_rate = summable(pe, gamma - 1.0) && summable(pm, 0) && summable(pn, gamma - 1.0);
  return c;
}

std::string SummabilityClass::label() const {
  if (!classified) return "unclassified";
  std::string out;
  auto add = [&](bool flag, const char* name) {
    if (!flag) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(avg_rate, "avg-rate");
  add(last_iterate_rate, "last-iterate-rate");
  add(vibpg_rate, "vibpg-rate");
  return out.empty() ? "insufficient" : out;
}

// ---- accumulator ---------------------------------------------------------------

void ErrorAccumulator::add_ibpg(double eta, double mu, double mu_prev, double nu, double norm_next,
                                double norm_cur, double norm_diff, double L) {
  const double i = static_cast<double>(steps);
  last_xi = eta * norm_diff + L * (mu + mu_prev) + nu;
  sum_eta += eta;
  sum_eta_norm_next += eta * norm_next;
  sum_eta_norm1 += eta * (norm_next + 1.0);
  sum_mu += mu;
  sum_nu += nu;
  sum_i_eta_norm += i * eta * (norm_next + norm_cur + 1.0);
  sum_i_mu += i * mu;
  sum_i_nu += i * nu;
  sum_i_xi += i * last_xi;
  ++steps;
}

void ErrorAccumulator::add_vibpg(double theta, double gamma, double vartheta, double eta, double mu,
                                 double nu, double norm_next) {
  const double w = std::pow(theta, 1.0 - gamma);
  sum_eta += eta;
  sum_eta_norm_next += eta * norm_next;
  sum_mu += mu;
  sum_nu += nu;
  sum_theta_eta += w * eta;
  sum_theta_eta_norm += w * eta * norm_next;
  sum_theta_eta_norm1 += w * eta * (norm_next + 1.0);
  sum_theta_nu += w * nu;
  sum_vartheta += vartheta;
  ++steps;
}

}  // namespace ibpg

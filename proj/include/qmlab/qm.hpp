#pragma once

// Generic quasi-morphism machinery: homogenization, defect sampling.
//
// An evaluator is any type modelling `QmEvaluator`: it owns an opaque element
// type, a real-valued `evaluate`, a group product `compose` and an `identity`.
// Evaluators may additionally provide
//   Element power(const Element&, long long p) const;     // faster x^p
//   std::optional<double> error_bound(long long p) const; // |phi_h - phi(x^p)/p|
// which the harness picks up when present.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <exception>
#include <optional>
#include <utility>
#include <vector>

#include "qmlab/error.hpp"
#include "qmlab/parallel.hpp"

namespace qmlab::qm {

template <class E>
concept QmEvaluator = requires(const E& ev, const typename E::Element& x) {
  { ev.evaluate(x) } -> std::convertible_to<double>;
  { ev.compose(x, x) } -> std::convertible_to<typename E::Element>;
  { ev.identity() } -> std::convertible_to<typename E::Element>;
};

template <class E>
concept HasPower = requires(const E& ev, const typename E::Element& x, long long p) {
  { ev.power(x, p) } -> std::convertible_to<typename E::Element>;
};

template <class E>
concept HasErrorBound = requires(const E& ev, long long p) {
  { ev.error_bound(p) } -> std::convertible_to<std::optional<double>>;
};

template <class E>
concept HasInverse = requires(const E& ev, const typename E::Element& x) {
  { ev.inverse(x) } -> std::convertible_to<typename E::Element>;
};

struct HomogenizationSample {
  long long p;
  double quotient;  // phi(x^p) / p
};

struct HomogenizationResult {
  double value = 0.0;
  long long p_used = 0;
  std::optional<double> error_bound;  // empty means "unknown"
  std::vector<HomogenizationSample> samples;
};

struct DefectEstimate {
  double max_observed = 0.0;
  int n_pairs = 0;
  std::uint64_t seed = 0;
};

/// x^p, by the evaluator's own power if it has one, else binary powering.
template <QmEvaluator E>
typename E::Element power(const E& ev, const typename E::Element& x, long long p) {
  if (p < 0) throw ValidationError("power: negative exponent");
  if constexpr (HasPower<E>) {
    return ev.power(x, p);
  } else {
    typename E::Element result = ev.identity();
    typename E::Element base = x;
    while (p > 0) {
      if (p & 1) result = ev.compose(result, base);
      p >>= 1;
      if (p > 0) base = ev.compose(base, base);
    }
    return result;
  }
}

namespace detail {

template <QmEvaluator E>
double quotient_at(const E& ev, const typename E::Element& x, long long p) {
  try {
    return static_cast<double>(ev.evaluate(power(ev, x, p))) / static_cast<double>(p);
  } catch (const EvaluationError&) {
    throw;
  } catch (const std::exception& e) {
    throw EvaluationError(p, e.what());
  }
}

template <QmEvaluator E>
std::optional<double> bound_at(const E& ev, long long p) {
  if constexpr (HasErrorBound<E>) {
    return ev.error_bound(p);
  } else {
    (void)ev;
    (void)p;
    return std::nullopt;
  }
}

}  // namespace detail

/// phi(x^p)/p at every scheduled p. The schedule must be nonempty and
/// strictly increasing; `value` is the quotient at the last p.
template <QmEvaluator E>
HomogenizationResult homogenize(const E& ev, const typename E::Element& x,
                                const std::vector<long long>& p_schedule) {
  if (p_schedule.empty()) throw ValidationError("homogenize: empty p schedule");
  for (std::size_t i = 0; i < p_schedule.size(); ++i) {
    if (p_schedule[i] < 1) throw ValidationError("homogenize: powers must be positive");
    if (i > 0 && p_schedule[i] <= p_schedule[i - 1])
      throw ValidationError("homogenize: p schedule must be strictly increasing");
  }
  HomogenizationResult out;
  out.samples.reserve(p_schedule.size());
  for (long long p : p_schedule) out.samples.push_back({p, detail::quotient_at(ev, x, p)});
  out.value = out.samples.back().quotient;
  out.p_used = out.samples.back().p;
  out.error_bound = detail::bound_at(ev, out.p_used);
  return out;
}

/// Stop rule for power doubling. Stops at the first p where the evaluator's
/// deterministic bound drops to `absolute_bound`, or two successive quotients
/// differ by less than `successive_tolerance`, or p would exceed `p_max`.
struct StopRule {
  long long p_start = 1;
  long long p_max = 1 << 12;
  std::optional<double> absolute_bound;
  std::optional<double> successive_tolerance;
};

template <QmEvaluator E>
HomogenizationResult homogenize_doubling(const E& ev, const typename E::Element& x,
                                         const StopRule& rule) {
  if (rule.p_start < 1 || rule.p_max < rule.p_start)
    throw ValidationError("homogenize_doubling: need 1 <= p_start <= p_max");
  HomogenizationResult out;
  for (long long p = rule.p_start; p <= rule.p_max; p *= 2) {
    out.samples.push_back({p, detail::quotient_at(ev, x, p)});
    out.value = out.samples.back().quotient;
    out.p_used = p;
    out.error_bound = detail::bound_at(ev, p);
    if (rule.absolute_bound && out.error_bound && *out.error_bound <= *rule.absolute_bound) break;
    if (rule.successive_tolerance && out.samples.size() >= 2) {
      const double prev = out.samples[out.samples.size() - 2].quotient;
      if (std::abs(out.value - prev) < *rule.successive_tolerance) break;
    }
    if (p > rule.p_max / 2) break;
  }
  return out;
}

/// Largest |phi(xy) - phi(x) - phi(y)| over `n_pairs` sampled pairs.
/// `sampler(Rng&)` draws one element; pair i uses stream(seed, i).
template <QmEvaluator E, class Sampler>
DefectEstimate estimate_defect(const E& ev, Sampler&& sampler, int n_pairs, std::uint64_t seed) {
  if (n_pairs < 1) throw ValidationError("estimate_defect: n_pairs must be positive");
  DefectEstimate out{0.0, n_pairs, seed};
  for (int i = 0; i < n_pairs; ++i) {
    Rng rng = stream(seed, static_cast<std::uint64_t>(i));
    const auto x = sampler(rng);
    const auto y = sampler(rng);
    const double d = static_cast<double>(ev.evaluate(ev.compose(x, y))) -
                     static_cast<double>(ev.evaluate(x)) - static_cast<double>(ev.evaluate(y));
    out.max_observed = std::max(out.max_observed, std::abs(d));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lifts of circle maps and the translation-number quasi-morphism.

/// s -> s + shift + amplitude * sin(2 pi s) / (2 pi); a lift of an orientation
/// preserving circle diffeomorphism when |amplitude| < 1. With `inverted` set
/// the map acts as the inverse of that formula.
struct LiftMap {
  double shift = 0.0;
  double amplitude = 0.0;
  bool inverted = false;

  double operator()(double s) const;
  double forward(double s) const;
  double backward(double y) const;
};

/// Word of lift maps, applied right to left: (f_k o ... o f_1)(s).
struct CircleLift {
  std::vector<LiftMap> maps;  // maps.front() acts first

  double operator()(double s) const;
};

/// phi(F) = F(0); homogenizes to the translation number.
class TranslationEvaluator {
 public:
  using Element = CircleLift;

  double evaluate(const CircleLift& f) const { return f(0.0); }
  CircleLift compose(const CircleLift& f, const CircleLift& g) const;  // f o g
  CircleLift identity() const { return {}; }
  CircleLift inverse(const CircleLift& f) const;
  /// The defect of F -> F(0) is at most 1, so |tau - F^p(0)/p| <= 1/p.
  std::optional<double> error_bound(long long p) const { return 1.0 / static_cast<double>(p); }
};

}  // namespace qmlab::qm

#include "qmlab/qm.hpp"

#include <numbers>

namespace qmlab::qm {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double LiftMap::operator()(double s) const { return inverted ? backward(s) : forward(s); }

double LiftMap::forward(double s) const {
  return s + shift + amplitude * std::sin(kTwoPi * s) / kTwoPi;
}

double LiftMap::backward(double y) const {
  if (std::abs(amplitude) >= 1.0) throw ValidationError("LiftMap: |amplitude| must be < 1");
  // F(s) - s lies in [shift - a/2pi, shift + a/2pi]; bracket, then Newton with bisection guard.
  const double spread = std::abs(amplitude) / kTwoPi;
  double lo = y - shift - spread - 1e-12;
  double hi = y - shift + spread + 1e-12;
  double s = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double r = forward(s) - y;
    if (std::abs(r) < 1e-15 * (1.0 + std::abs(y))) break;
    if (r > 0) hi = s; else lo = s;
    const double d = 1.0 + amplitude * std::cos(kTwoPi * s);
    double next = s - r / d;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    s = next;
  }
  return s;
}

double CircleLift::operator()(double s) const {
  for (const auto& m : maps) s = m(s);
  return s;
}

CircleLift TranslationEvaluator::compose(const CircleLift& f, const CircleLift& g) const {
  CircleLift out;
  out.maps.reserve(f.maps.size() + g.maps.size());
  out.maps.insert(out.maps.end(), g.maps.begin(), g.maps.end());
  out.maps.insert(out.maps.end(), f.maps.begin(), f.maps.end());
  return out;
}

CircleLift TranslationEvaluator::inverse(const CircleLift& f) const {
  CircleLift out;
  out.maps.reserve(f.maps.size());
  for (auto it = f.maps.rbegin(); it != f.maps.rend(); ++it) {
    LiftMap m = *it;
    m.inverted = !m.inverted;
    out.maps.push_back(m);
  }
  return out;
}

}  // namespace qmlab::qm

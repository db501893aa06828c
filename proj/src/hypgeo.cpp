#include "qmlab/hypgeo.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "qmlab/error.hpp"
#include "qmlab/parallel.hpp"
#include "qmlab/quadrature.hpp"

namespace qmlab::hyp {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_turns(double d) { return d - std::round(d); }

ham::Vec to_vec(Complex z) {
  ham::Vec v(2);
  v << z.real(), z.imag();
  return v;
}

Complex to_complex(const ham::Vec& v) { return {v(0), v(1)}; }

// Velocity of the geodesic from z0 to z1 at parameter s (see geodesic_point).
Complex geodesic_velocity(Complex z0, Complex z1, double s) {
  const Complex w = (z1 - z0) / (1.0 - std::conj(z0) * z1);
  const Complex den = 1.0 + std::conj(z0) * s * w;
  return w * (1.0 - std::norm(z0)) / (den * den);
}

// Stratified omega-uniform point of the hyperbolic chart disk of area `area`.
Complex stratified_point(Rng& rng, std::size_t i, std::size_t n, double area) {
  const double u = (static_cast<double>(i) + uniform01(rng)) / static_cast<double>(n);
  const double a = u * area;
  const double r = ham::hyperbolic_disk_radius(a);
  const double th = kTwoPi * uniform01(rng);
  return std::polar(r, th);
}

struct Moments {
  double mean = 0.0;
  double std_error = 0.0;
};

// Mean of one-sample-per-stratum values; the variance is estimated from
// differences of neighbouring strata (collapsed pairs).
Moments stratified_moments(const std::vector<double>& w) {
  Moments m;
  const auto n = static_cast<double>(w.size());
  m.mean = pairwise_sum(w) / n;
  std::vector<double> sq;
  for (std::size_t i = 0; i + 1 < w.size(); i += 2) sq.push_back((w[i] - w[i + 1]) * (w[i] - w[i + 1]));
  m.std_error = std::sqrt(pairwise_sum(sq)) / n;
  return m;
}

// Orbit of x over p periods together with the common increment of the lifted
// fiber angle. Calls visit(step, base, angle_offset) after every step.
template <class Visit>
void lift_orbit(const DiskIsotopy& iso, const Correction& corr, Complex x, int p, Visit&& visit) {
  const auto& sc = iso.scenario;
  const int per = sc.steps_per_period();
  const double h = 1.0 / per;
  const double r_u = iso.disk_radius();
  const bool moving = std::abs(x) < sc.h->support_radius();
  const std::size_t total = static_cast<std::size_t>(per) * static_cast<std::size_t>(p);
  ham::Vec pos = to_vec(x);
  ham::Vec mid;
  double offset = 0.0;
  flow::Stepper stepper(sc);
  for (std::size_t k = 0; k < total; ++k) {
    const std::size_t j = k % static_cast<std::size_t>(per);
    const double tm = (static_cast<double>(j) + 0.5) * h;
    double k_tilde = corr.c[j];
    if (moving) {
      const ham::Vec next = stepper.step(pos, static_cast<double>(j) * h, h, k, nullptr, &mid);
      const Complex zm = to_complex(mid);
      offset += parallel_transport_rate(zm, to_complex(next - pos));
      k_tilde -= sc.h->value(mid, tm);
      pos = next;
      if (pos.norm() >= r_u) {
        std::ostringstream os;
        os << "theta_lift: trajectory left the disk U at step " << k + 1;
        throw NumericalError(os.str());
      }
    }
    offset -= kTwoPi * h * k_tilde;
    visit(k, to_complex(pos), offset);
  }
}

}  // namespace

DiskPoint::DiskPoint(Complex z) : z_(z) {
  if (!(std::abs(z) < 1.0 - kDiskGuard)) throw ValidationError("disk point must satisfy |z| < 1");
}

CirclePath::CirclePath(std::vector<double> lifted_turns) : lifted_(std::move(lifted_turns)) {
  if (lifted_.empty()) throw ValidationError("circle path needs at least one sample");
  for (std::size_t i = 1; i < lifted_.size(); ++i) {
    const double d = lifted_[i] - lifted_[i - 1];
    if (!std::isfinite(d)) throw ValidationError("circle path: non-finite sample");
    if (std::abs(d) >= 0.5) throw RefineError(i - 1, std::abs(d));
  }
}

long long circle_index(const CirclePath& path) {
  return static_cast<long long>(std::floor(path.displacement()));
}

CirclePath concatenate(const CirclePath& gamma, const CirclePath& beta) {
  const double end = gamma.lifted().back();
  const double start = beta.lifted().front();
  const double gap = wrap_turns(end - start);
  if (std::abs(gap) > 1e-9) throw ValidationError("concatenate: paths do not meet");
  std::vector<double> out = gamma.lifted();
  const double shift = end - start;
  for (std::size_t i = 1; i < beta.lifted().size(); ++i) out.push_back(beta.lifted()[i] + shift);
  return CirclePath(std::move(out));
}

double geodesic_endpoint(const UnitDirection& v) {
  const Complex z = v.base.z();
  const Complex u = std::polar(1.0, v.angle);
  return std::arg((u + z) / (1.0 + std::conj(z) * u));
}

Complex Mobius::apply(Complex z) const { return std::polar(1.0, phi) * (z - a) / (1.0 - std::conj(a) * z); }

double Mobius::rotation_at(Complex z) const {
  const Complex den = 1.0 - std::conj(a) * z;
  return phi + std::arg(1.0 / (den * den));
}

UnitDirection Mobius::apply(const UnitDirection& v) const {
  return {DiskPoint(apply(v.base.z())), v.angle + rotation_at(v.base.z())};
}

Mobius Mobius::inverse() const {
  // w = e^{i phi}(z - a)/(1 - conj(a) z)  <=>  z = e^{-i phi}(w + b)/(1 + conj(b) w), b = e^{i phi} a.
  const Complex b = std::polar(1.0, phi) * a;
  return {-phi, -b};
}

Complex geodesic_point(Complex z0, Complex z1, double s) {
  const Complex w = (z1 - z0) / (1.0 - std::conj(z0) * z1);
  const Complex sw = s * w;
  return (sw + z0) / (1.0 + std::conj(z0) * sw);
}

double hyperbolic_distance(Complex z0, Complex z1) {
  const double q = std::abs(z1 - z0) / std::abs(1.0 - std::conj(z0) * z1);
  return 2.0 * std::atanh(q);
}

double geodesic_triangle_area(Complex a, Complex b, Complex c) {
  auto corner = [](Complex at, Complex p, Complex q) {
    const Mobius m{0.0, at};
    const double d = std::arg(m.apply(q)) - std::arg(m.apply(p));
    return std::abs(std::remainder(d, kTwoPi));
  };
  return kPi - corner(a, b, c) - corner(b, c, a) - corner(c, a, b);
}

double parallel_transport_rate(Complex z, Complex zdot) {
  const double x = z.real(), y = z.imag();
  return 2.0 * (y * zdot.real() - x * zdot.imag()) / (1.0 - std::norm(z));
}

double geodesic_polygon_holonomy(const std::vector<Complex>& vertices, int nodes_per_side) {
  if (vertices.size() < 3) throw ValidationError("polygon needs at least three vertices");
  const auto gl = gauss_legendre(nodes_per_side, 0.0, 1.0);
  std::vector<double> terms;
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Complex z0 = DiskPoint(vertices[i]).z();
    const Complex z1 = DiskPoint(vertices[(i + 1) % vertices.size()]).z();
    for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
      const double s = gl.nodes[k];
      terms.push_back(gl.weights[k] *
                      parallel_transport_rate(geodesic_point(z0, z1, s), geodesic_velocity(z0, z1, s)));
    }
  }
  return pairwise_sum(terms);
}

// ---------------------------------------------------------------------------

void DiskIsotopy::validate() const {
  scenario.validate();
  if (scenario.form.kind != ham::FormKind::Hyperbolic)
    throw ValidationError("disk isotopy: scenario must use the hyperbolic form");
  if (genus < 2) throw ValidationError("disk isotopy: genus must be at least 2");
  if (!(disk_area > 0.0) || !(disk_area < 2.0 * genus - 2.0))
    throw ValidationError("disk isotopy: need 0 < disk_area < 2g - 2");
  if (!(scenario.support_radius < disk_radius()))
    throw ValidationError("disk isotopy: support must lie strictly inside U");
}

double DiskIsotopy::disk_radius() const { return ham::hyperbolic_disk_radius(disk_area); }

double DiskIsotopy::support_area() const { return ham::hyperbolic_disk_area(scenario.support_radius); }

Correction mean_zero_correction(const DiskIsotopy& iso, int radial, int angular) {
  iso.validate();
  const auto& sc = iso.scenario;
  const int per = sc.steps_per_period();
  const double h = 1.0 / per;
  const double r = sc.support_radius;
  const auto gl = gauss_legendre(radial, 0.0, r);
  const double dth = kTwoPi / angular;
  struct Node {
    ham::Vec x;
    double w;
  };
  std::vector<Node> nodes;
  for (int i = 0; i < radial; ++i)
    for (int j = 0; j < angular; ++j) {
      const Complex z = std::polar(gl.nodes[static_cast<std::size_t>(i)], j * dth);
      const ham::Vec x = to_vec(z);
      nodes.push_back({x, gl.weights[static_cast<std::size_t>(i)] * gl.nodes[static_cast<std::size_t>(i)] *
                              dth * sc.form.density(x)});
    }
  Correction out;
  out.c.resize(static_cast<std::size_t>(per));
  std::vector<double> terms(nodes.size());
  for (int k = 0; k < per; ++k) {
    const double tm = (k + 0.5) * h;
    for (std::size_t i = 0; i < nodes.size(); ++i) terms[i] = nodes[i].w * sc.h->value(nodes[i].x, tm);
    out.c[static_cast<std::size_t>(k)] = pairwise_sum(terms) / (2.0 * iso.genus - 2.0);
  }
  out.mean = pairwise_sum(out.c) / per;
  return out;
}

LiftTrace theta_lift(const DiskIsotopy& iso, const UnitDirection& v, int p) {
  iso.validate();
  if (p < 1) throw ValidationError("theta_lift: p must be positive");
  if (!(std::abs(v.base.z()) < iso.disk_radius())) throw ValidationError("theta_lift: base outside U");
  const Correction corr = mean_zero_correction(iso);
  LiftTrace out;
  double prev = geodesic_endpoint(v) / kTwoPi;
  std::vector<double> lifted{prev};
  out.base.push_back(v.base.z());
  out.direction.push_back(v.angle);
  lift_orbit(iso, corr, v.base.z(), p, [&](std::size_t k, Complex z, double offset) {
    const double angle = v.angle + offset;
    const double e = geodesic_endpoint({DiskPoint(z), angle}) / kTwoPi;
    const double d = wrap_turns(e - prev);
    if (std::abs(d) >= 0.25) {
      std::ostringstream os;
      os << "theta_lift: boundary step of " << d << " turns at step " << k + 1 << "; use a smaller dt";
      throw NumericalError(os.str());
    }
    lifted.push_back(lifted.back() + d);
    prev = e;
    out.base.push_back(z);
    out.direction.push_back(angle);
  });
  out.boundary = CirclePath(std::move(lifted));
  return out;
}

AngleResult angle_estimate(const DiskIsotopy& iso, Complex x, int p, int fiber_samples,
                           const Correction* correction) {
  if (p < 1) throw ValidationError("angle_estimate: p must be positive");
  if (fiber_samples < 1) throw ValidationError("angle_estimate: need at least one fiber sample");
  Correction local;
  if (!correction) {
    local = mean_zero_correction(iso);
    correction = &local;
  }
  AngleResult out;
  if (!(std::abs(x) < iso.scenario.h->support_radius())) {
    out.analytic = true;
    out.value = p * correction->mean;
    return out;
  }
  (void)DiskPoint(x);
  const auto k = static_cast<std::size_t>(fiber_samples);
  // The boundary point of direction u at z is (u + z) / (1 + conj(z) u), which
  // is a positive multiple of E = (u + z)(1 + z conj(u)) when |u| = 1. Only
  // phases of E are compared, so no division is needed. The fiber directions
  // share one rotation per step.
  struct Endpoint {
    double re, im;
  };
  auto endpoint = [](double ur, double ui, double zr, double zi) {
    const double ar = ur + zr, ai = ui + zi;      // u + z
    const double br = 1.0 + zr * ur + zi * ui;    // 1 + z conj(u)
    const double bi = zi * ur - zr * ui;
    return Endpoint{ar * br - ai * bi, ar * bi + ai * br};
  };
  std::vector<double> c0(k), s0(k), lifted(k, 0.0);
  std::vector<Endpoint> prev(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double th = kTwoPi * static_cast<double>(i) / static_cast<double>(k);
    c0[i] = std::cos(th);
    s0[i] = std::sin(th);
    prev[i] = endpoint(c0[i], s0[i], x.real(), x.imag());
  }
  lift_orbit(iso, *correction, x, p, [&](std::size_t step, Complex z, double offset) {
    const double cr = std::cos(offset), sr = std::sin(offset);
    const double zr = z.real(), zi = z.imag();
    for (std::size_t i = 0; i < k; ++i) {
      const Endpoint e = endpoint(cr * c0[i] - sr * s0[i], sr * c0[i] + cr * s0[i], zr, zi);
      const Endpoint& q = prev[i];
      const double d = std::atan2(e.im * q.re - e.re * q.im, e.re * q.re + e.im * q.im) / kTwoPi;
      if (std::abs(d) >= 0.25) {
        std::ostringstream os;
        os << "angle_estimate: boundary step of " << d << " turns at step " << step + 1
           << "; use a smaller dt";
        throw NumericalError(os.str());
      }
      lifted[i] += d;
      prev[i] = e;
    }
  });
  out.min_index = static_cast<long long>(std::floor(lifted[0]));
  out.max_index = out.min_index;
  for (double l : lifted) {
    const auto n = static_cast<long long>(std::floor(l));
    out.min_index = std::min(out.min_index, n);
    out.max_index = std::max(out.max_index, n);
  }
  out.value = -static_cast<double>(out.min_index);
  return out;
}

Estimate cal_s_estimate(const DiskIsotopy& iso, int p, int n_points, int fiber_samples, std::uint64_t seed,
                        int jobs) {
  iso.validate();
  if (p < 1) throw ValidationError("cal_s_estimate: p must be positive");
  if (n_points < 2) throw ValidationError("cal_s_estimate: need at least two points");
  const Correction corr = mean_zero_correction(iso);
  const double area = iso.support_area();
  const auto n = static_cast<std::size_t>(n_points);
  std::vector<double> w(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    auto rng = stream(seed, i);
    const Complex x = stratified_point(rng, i, n, area);
    try {
      w[i] = angle_estimate(iso, x, p, fiber_samples, &corr).value / p;
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << "cal_s_estimate: point " << i << ": " << e.what();
      throw NumericalError(os.str());
    }
  });
  const Moments m = stratified_moments(w);
  Estimate out;
  out.p = p;
  out.n_points = n_points;
  out.seed = seed;
  out.value = area * m.mean + corr.mean * (2.0 * iso.genus - 2.0 - area);
  out.std_error = area * m.std_error;
  // Fiber sampling (2) plus the integer part (1), per point, before division by p.
  out.deterministic_error = 3.0 * area / p;
  return out;
}

// ---------------------------------------------------------------------------

Complex PolyOneForm::coefficients(Complex z) const {
  auto eval = [&](const std::vector<Term>& terms) {
    double s = 0.0;
    for (const auto& t : terms) s += t.c * std::pow(z.real(), t.i) * std::pow(z.imag(), t.j);
    return s;
  };
  return {eval(a), eval(b)};
}

double PolyOneForm::apply(Complex z, Complex v) const {
  const Complex c = coefficients(z);
  return c.real() * v.real() + c.imag() * v.imag();
}

double PolyOneForm::hyperbolic_norm(double r, int samples) const {
  double best = 0.0;
  for (int i = 0; i <= samples; ++i)
    for (int j = 0; j < samples; ++j) {
      const Complex z = std::polar(r * i / samples, kTwoPi * j / samples);
      best = std::max(best, std::abs(coefficients(z)) * (1.0 - std::norm(z)) / 2.0);
    }
  return best;
}

double gg_u(const PolyOneForm& eta, const DiskIsotopy& iso, Complex x, int p, int nodes) {
  iso.validate();
  if (p < 1) throw ValidationError("gg_u: p must be positive");
  if (!(std::abs(x) < iso.disk_radius())) throw ValidationError("gg_u: point outside U");
  const Complex y = to_complex(flow::integrate_flow(iso.scenario, to_vec(x), static_cast<double>(p)));
  if (std::abs(y - x) == 0.0) return 0.0;
  const auto gl = gauss_legendre(nodes, 0.0, 1.0);
  std::vector<double> terms(gl.nodes.size());
  for (std::size_t k = 0; k < gl.nodes.size(); ++k) {
    const double s = gl.nodes[k];
    terms[k] = gl.weights[k] * eta.apply(geodesic_point(x, y, s), geodesic_velocity(x, y, s));
  }
  return pairwise_sum(terms);
}

Estimate phi_eta_estimate(const PolyOneForm& eta, const DiskIsotopy& iso, int p, int n_points,
                          std::uint64_t seed, int jobs) {
  iso.validate();
  if (n_points < 2) throw ValidationError("phi_eta_estimate: need at least two points");
  const double area = iso.support_area();
  const auto n = static_cast<std::size_t>(n_points);
  std::vector<double> w(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    auto rng = stream(seed, i);
    w[i] = gg_u(eta, iso, stratified_point(rng, i, n, area), p) / p;
  });
  const Moments m = stratified_moments(w);
  Estimate out;
  out.p = p;
  out.n_points = n_points;
  out.seed = seed;
  out.value = area * m.mean;
  out.std_error = area * m.std_error;
  out.deterministic_error =
      area * eta.hyperbolic_norm(iso.scenario.support_radius) *
      2.0 * hyperbolic_distance(0.0, iso.scenario.support_radius) / p;
  return out;
}

}  // namespace qmlab::hyp

#include "qmlab/hamflow.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

#include <Eigen/LU>

#include "qmlab/error.hpp"
#include "qmlab/parallel.hpp"
#include "qmlab/quadrature.hpp"

namespace qmlab::flow {

namespace {

constexpr int kNewtonMaxIter = 50;

using CMat = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, 0, ham::kMaxDim / 2,
                           ham::kMaxDim / 2>;

bool fixed_point(const Scenario& sc, const Vec& x) { return x.norm() >= sc.h->support_radius(); }

// det^2 of the Lagrangian frame spanned by the first n columns of d.
std::complex<double> frame_det2(const Mat& d) {
  const Eigen::Index n = d.rows() / 2;
  std::complex<double> z;
  if (n == 1) {
    z = {d(0, 0), d(1, 0)};
  } else {
    CMat m(n, n);
    m.real() = d.topLeftCorner(n, n);
    m.imag() = d.bottomLeftCorner(n, n);
    z = m.partialPivLu().determinant();
  }
  const double a = std::abs(z);
  if (!(a > 0.0) || !std::isfinite(a)) throw NumericalError("jacobian winding: degenerate frame");
  z /= a;
  return z * z;
}

Vec sample_ball(Rng& rng, int dim, double r) {
  std::normal_distribution<double> normal;
  Vec v(dim);
  for (int i = 0; i < dim; ++i) v(i) = normal(rng);
  const double u = uniform01(rng);
  return v.normalized() * (r * std::pow(u, 1.0 / dim));
}

void require_standard(const Scenario& sc, const char* where) {
  if (sc.form.kind != ham::FormKind::Standard)
    throw ValidationError(std::string(where) + ": requires the standard form");
}

}  // namespace

void Scenario::validate() const {
  if (dim < 2 || dim % 2 != 0 || dim > ham::kMaxDim)
    throw ValidationError("scenario: dim must be even and in [2, 8]");
  if (!h) throw ValidationError("scenario: missing Hamiltonian");
  if (h->dim() != dim) throw ValidationError("scenario: Hamiltonian dimension mismatch");
  if (!(support_radius > 0.0) || !(domain_radius > support_radius))
    throw ValidationError("scenario: need 0 < support_radius < domain_radius");
  if (h->support_radius() > support_radius * (1.0 + 1e-12))
    throw ValidationError("scenario: Hamiltonian support exceeds support_radius");
  if (!(dt > 0.0) || dt > 1.0) throw ValidationError("scenario: dt must be in (0, 1]");
  if (form.kind == ham::FormKind::Hyperbolic) {
    if (dim != 2) throw ValidationError("scenario: hyperbolic form is two-dimensional");
    if (domain_radius >= 1.0) throw ValidationError("scenario: hyperbolic domain must lie in the unit disk");
  }
}

int Scenario::steps_per_period() const { return std::max(1, static_cast<int>(std::lround(1.0 / dt))); }

Stepper::Stepper(const Scenario& sc) : sc_(&sc) {}

void Stepper::refresh(const Vec& m, double tm, double h) {
  const auto dim = m.size();
  lu_.compute(Mat::Identity(dim, dim) - 0.5 * h * ham::hamiltonian_vector_jacobian(*sc_->h, sc_->form, m, tm));
  lu_h_ = h;
}

Vec Stepper::step(const Vec& x, double t, double h, std::size_t index, Mat* tangent, Vec* midpoint) {
  const Scenario& sc = *sc_;
  const double tm = t + 0.5 * h;
  // Predictor: linear extrapolation of the last two increments.
  Vec y;
  if (history_ >= 2 && last_h_ == h)
    y = x + 2.0 * last_increment_ - prev_increment_;
  else if (history_ >= 1 && last_h_ == h)
    y = x + last_increment_;
  else
    y = x + h * ham::hamiltonian_vector(*sc.h, sc.form, x, tm);
  bool fresh = false;
  if (lu_h_ != h) {
    refresh(0.5 * (x + y), tm, h);
    fresh = true;
  }
  double last = ham::kInf;
  bool converged = false;
  for (int it = 0; it < kNewtonMaxIter; ++it) {
    const Vec m = 0.5 * (x + y);
    const Vec g = y - x - h * ham::hamiltonian_vector(*sc.h, sc.form, m, tm);
    const Vec delta = lu_.solve(g);
    y -= delta;
    if (!y.allFinite()) break;
    const double size = delta.lpNorm<Eigen::Infinity>();
    if (size <= kNewtonTol) {
      converged = true;
      break;
    }
    // Slow contraction: the carried matrix is stale.
    if (!fresh && (size > 0.05 * last || it >= 3)) {
      refresh(0.5 * (x + y), tm, h);
      fresh = true;
    }
    last = size;
  }
  if (!converged) {
    std::ostringstream os;
    os << "implicit midpoint: Newton did not converge at step " << index << " (t = " << t << ")";
    throw NumericalError(os.str());
  }
  const Vec m = 0.5 * (x + y);
  if (tangent) {
    const auto dim = x.size();
    const Mat a = ham::hamiltonian_vector_jacobian(*sc.h, sc.form, m, tm);
    const Mat id = Mat::Identity(dim, dim);
    lu_.compute(id - 0.5 * h * a);
    lu_h_ = h;
    *tangent = lu_.solve((id + 0.5 * h * a) * (*tangent));
  }
  if (midpoint) *midpoint = m;
  if (last_h_ != h) history_ = 0;
  prev_increment_ = last_increment_;
  last_increment_ = y - x;
  last_h_ = h;
  ++history_;
  return y;
}

Vec midpoint_step(const Scenario& sc, const Vec& x, double t, double h, std::size_t index, Mat* tangent,
                  Vec* midpoint) {
  return Stepper(sc).step(x, t, h, index, tangent, midpoint);
}

Vec integrate_flow(const Scenario& sc, const Vec& x0, double t) {
  sc.validate();
  if (x0.size() != sc.dim) throw ValidationError("integrate_flow: point dimension mismatch");
  if (x0.norm() >= sc.domain_radius) throw ValidationError("integrate_flow: point outside the ball");
  if (!(t >= 0.0)) throw ValidationError("integrate_flow: time must be nonnegative");
  if (fixed_point(sc, x0)) return x0;
  const int per = sc.steps_per_period();
  const double h = 1.0 / per;
  const double steps_real = t * per;
  const auto full = static_cast<std::size_t>(std::floor(steps_real + 1e-9));
  Vec x = x0;
  const auto period = static_cast<std::size_t>(per);
  Stepper stepper(sc);
  for (std::size_t k = 0; k < full; ++k) x = stepper.step(x, static_cast<double>(k % period) * h, h, k);
  const double rest = t - static_cast<double>(full) * h;
  if (rest > 1e-12) x = stepper.step(x, static_cast<double>(full % period) * h, rest, full);
  return x;
}

symp::SpPath jacobian_path(const Scenario& sc, const Vec& x0, int p) {
  sc.validate();
  require_standard(sc, "jacobian_path");
  if (p < 1) throw ValidationError("jacobian_path: p must be positive");
  if (x0.size() != sc.dim) throw ValidationError("jacobian_path: point dimension mismatch");
  if (x0.norm() >= sc.domain_radius) throw ValidationError("jacobian_path: point outside the ball");
  const int n = sc.dim / 2;
  if (fixed_point(sc, x0)) return symp::SpPath::constant_identity(n);
  const int per = sc.steps_per_period();
  const std::size_t total = static_cast<std::size_t>(per) * static_cast<std::size_t>(p);
  const double h = 1.0 / per;
  std::vector<double> times;
  std::vector<symp::SpMatrix> samples;
  times.reserve(total + 1);
  samples.reserve(total + 1);
  times.push_back(0.0);
  samples.push_back(symp::SpMatrix::identity(n));
  Vec x = x0;
  Mat d = Mat::Identity(sc.dim, sc.dim);
  Stepper stepper(sc);
  for (std::size_t k = 0; k < total; ++k) {
    const double t = static_cast<double>(k % per) * h;
    x = stepper.step(x, t, h, k, &d);
    const symp::Matrix dm = d;
    const double defect = symp::symplectic_defect(dm);
    if (defect > kTolFlow) {
      std::ostringstream os;
      os << "jacobian_path: symplecticity drift " << defect << " at step " << k + 1
         << "; use a smaller dt";
      throw NumericalError(os.str());
    }
    times.push_back(static_cast<double>(k + 1) / static_cast<double>(total));
    samples.emplace_back(dm, kTolFlow);
  }
  times.back() = 1.0;
  return symp::SpPath(std::move(times), std::move(samples));
}

double jacobian_winding(const Scenario& sc, const Vec& x0, int p) {
  if (p < 1) throw ValidationError("jacobian_winding: p must be positive");
  if (fixed_point(sc, x0)) return 0.0;
  const int per = sc.steps_per_period();
  const std::size_t total = static_cast<std::size_t>(per) * static_cast<std::size_t>(p);
  const double h = 1.0 / per;
  Vec x = x0;
  Mat d = Mat::Identity(sc.dim, sc.dim);
  auto prev = frame_det2(d);
  double turns = 0.0;
  Stepper stepper(sc);
  for (std::size_t k = 0; k < total; ++k) {
    const double t = static_cast<double>(k % per) * h;
    x = stepper.step(x, t, h, k, &d);
    const auto cur = frame_det2(d);
    const double step = symp::phase_turns(cur * std::conj(prev));
    if (std::abs(step) >= 0.25) {
      std::ostringstream os;
      os << "jacobian_winding: phase step of " << step << " turns at step " << k + 1
         << "; use a smaller dt";
      throw NumericalError(os.str());
    }
    turns += step;
    prev = cur;
  }
  const double defect = symp::symplectic_defect(symp::Matrix(d));
  if (defect > kTolFlow) {
    std::ostringstream os;
    os << "jacobian_winding: symplecticity drift " << defect << "; use a smaller dt";
    throw NumericalError(os.str());
  }
  return turns;
}

double action_integral(const Scenario& sc, const ham::PrimitiveOneForm& lam, const Vec& x0) {
  if (fixed_point(sc, x0)) return 0.0;
  const int per = sc.steps_per_period();
  const double h = 1.0 / per;
  // Line integral of lambda along each chord, 3-point Gauss-Legendre on [0, 1].
  static const auto gl = gauss_legendre(3, 0.0, 1.0);
  std::vector<double> terms(static_cast<std::size_t>(per));
  Vec x = x0;
  Stepper stepper(sc);
  for (int k = 0; k < per; ++k) {
    const Vec y = stepper.step(x, k * h, h, static_cast<std::size_t>(k));
    const Vec v = y - x;
    double s = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) s += gl.weights[i] * lam.apply(x + gl.nodes[i] * v, v);
    terms[static_cast<std::size_t>(k)] = s;
    x = y;
  }
  return pairwise_sum(terms);
}

double calabi(const Scenario& sc, const ham::PrimitiveOneForm& lam, const Quadrature& rule, int jobs) {
  sc.validate();
  if (lam.kind != sc.form.kind) throw ValidationError("calabi: primitive does not match the form");
  const double radius = rule.radius > 0.0 ? rule.radius : sc.support_radius;
  if (radius < sc.h->support_radius() * (1.0 - 1e-12))
    throw ValidationError("calabi: quadrature domain smaller than the support");
  if (radius >= sc.domain_radius) throw ValidationError("calabi: quadrature domain leaves the ball");

  struct Node {
    Vec x;
    double w;
  };
  std::vector<Node> nodes;
  if (sc.dim == 2) {
    if (rule.radial < 1 || rule.angular < 1) throw ValidationError("calabi: empty quadrature rule");
    const auto gl = gauss_legendre(rule.radial, 0.0, radius);
    const double dth = 2.0 * std::numbers::pi / rule.angular;
    for (int i = 0; i < rule.radial; ++i) {
      for (int j = 0; j < rule.angular; ++j) {
        const double r = gl.nodes[static_cast<std::size_t>(i)];
        Vec x(2);
        x << r * std::cos(j * dth), r * std::sin(j * dth);
        nodes.push_back({x, gl.weights[static_cast<std::size_t>(i)] * r * dth});
      }
    }
  } else {
    if (rule.per_axis < 1) throw ValidationError("calabi: empty quadrature rule");
    const auto gl = gauss_legendre(rule.per_axis, -radius, radius);
    std::vector<int> idx(static_cast<std::size_t>(sc.dim), 0);
    for (;;) {
      Vec x(sc.dim);
      double w = 1.0;
      for (int a = 0; a < sc.dim; ++a) {
        x(a) = gl.nodes[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
        w *= gl.weights[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
      }
      if (x.norm() < radius) nodes.push_back({x, w});
      int a = 0;
      while (a < sc.dim && ++idx[static_cast<std::size_t>(a)] == rule.per_axis) idx[static_cast<std::size_t>(a++)] = 0;
      if (a == sc.dim) break;
    }
  }

  std::vector<double> contrib(nodes.size());
  parallel_for(nodes.size(), jobs, [&](std::size_t i) {
    const auto& nd = nodes[i];
    contrib[i] = nd.w * sc.form.density(nd.x) * action_integral(sc, lam, nd.x);
  });
  return pairwise_sum(contrib);
}

BirkhoffResult birkhoff_average(const Scenario& sc, const std::function<double(const Vec&)>& phi,
                                const Vec& x0, int n_iterations) {
  sc.validate();
  if (n_iterations < 1) throw ValidationError("birkhoff_average: need at least one iteration");
  BirkhoffResult out;
  out.iterations = n_iterations;
  std::vector<double> values(static_cast<std::size_t>(n_iterations));
  const int quarter_start = n_iterations - std::max(1, n_iterations / 4);
  double lo = ham::kInf, hi = -ham::kInf;
  double running = 0.0;
  Vec x = x0;
  for (int k = 0; k < n_iterations; ++k) {
    values[static_cast<std::size_t>(k)] = phi(x);
    running += values[static_cast<std::size_t>(k)];
    if (k >= quarter_start) {
      const double avg = running / (k + 1);
      lo = std::min(lo, avg);
      hi = std::max(hi, avg);
    }
    if (k + 1 < n_iterations) x = integrate_flow(sc, x, 1.0);
  }
  out.average = pairwise_sum(values) / n_iterations;
  out.oscillation = hi - lo;
  return out;
}

double ball_volume(int dim, double r) {
  return std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim + 1.0) * std::pow(r, dim);
}

TauResult tau_ball(const Scenario& sc, int p, int n_samples, std::uint64_t seed, int jobs) {
  sc.validate();
  require_standard(sc, "tau_ball");
  if (p < 1) throw ValidationError("tau_ball: p must be positive");
  if (n_samples < 2) throw ValidationError("tau_ball: need at least two samples");
  TauResult out;
  out.p = p;
  out.n_samples = n_samples;
  out.seed = seed;
  out.volume = ball_volume(sc.dim, sc.support_radius);
  out.deterministic_error = 2.0 * (sc.dim / 2) / p * out.volume;
  std::vector<double> w(static_cast<std::size_t>(n_samples));
  parallel_for(w.size(), jobs, [&](std::size_t i) {
    auto rng = stream(seed, i);
    const Vec x = sample_ball(rng, sc.dim, sc.support_radius);
    try {
      w[i] = jacobian_winding(sc, x, p) / p;
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << "tau_ball: sample " << i << ": " << e.what();
      throw NumericalError(os.str());
    }
  });
  const double mean = pairwise_sum(w) / n_samples;
  std::vector<double> sq(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) sq[i] = (w[i] - mean) * (w[i] - mean);
  const double var = pairwise_sum(sq) / (n_samples - 1);
  out.value = out.volume * mean;
  out.std_error = out.volume * std::sqrt(var / n_samples);
  return out;
}

RestrictionValue s_restriction_value(const Scenario& sc, double s, int p, int n_samples, std::uint64_t seed,
                                     const Quadrature& rule, int jobs) {
  if (s == 0.0 || !std::isfinite(s)) throw ValidationError("s_restriction_value: s must be nonzero");
  RestrictionValue out;
  out.s = s;
  out.tau = tau_ball(sc, p, n_samples, seed, jobs);
  out.calabi = calabi(sc, ham::PrimitiveOneForm{sc.form.kind, nullptr}, rule, jobs);
  out.value = out.tau.value + s * out.calabi;
  return out;
}

}  // namespace qmlab::flow

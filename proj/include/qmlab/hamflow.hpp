#pragma once

// Hamiltonian flows on a ball: implicit-midpoint integration, tangent maps,
// the Calabi invariant, Birkhoff averages and the ball quasi-morphism tau.

#include <cstdint>
#include <functional>

#include <Eigen/LU>

#include "qmlab/hamiltonian.hpp"
#include "qmlab/symplinalg.hpp"

namespace qmlab::flow {

using ham::Mat;
using ham::Vec;

inline constexpr double kNewtonTol = 1e-12;
inline constexpr double kTolFlow = 1e-6;

struct Scenario {
  int dim = 2;
  ham::Form form;
  ham::FieldPtr h;
  double support_radius = 1.0;
  double domain_radius = 2.0;
  double dt = 1e-3;

  /// Throws ValidationError unless the scenario is consistent.
  void validate() const;
  /// Steps per unit time; dt is rounded to 1 / steps_per_period().
  int steps_per_period() const;
};

/// Implicit-midpoint integrator for one trajectory. step() maps x to x' with
/// x' = x + h X((x + x') / 2, t + h / 2), solved by simplified Newton to
/// kNewtonTol. The iteration matrix and the last increment are carried between
/// calls, so a Stepper must follow a single orbit. If `tangent` is given it is
/// advanced by the derivative of the scheme, (I - h/2 A) D' = (I + h/2 A) D
/// with A = DX(midpoint). If `midpoint` is given it receives (x + x') / 2.
/// Throws NumericalError naming `index` when Newton does not converge.
class Stepper {
 public:
  explicit Stepper(const Scenario& sc);
  Vec step(const Vec& x, double t, double h, std::size_t index, Mat* tangent = nullptr,
           Vec* midpoint = nullptr);

 private:
  void refresh(const Vec& m, double tm, double h);

  const Scenario* sc_;
  Eigen::PartialPivLU<Mat> lu_;
  double lu_h_ = 0.0;
  Vec last_increment_;
  Vec prev_increment_;
  double last_h_ = 0.0;
  int history_ = 0;
};

/// A single step with a fresh Stepper.
Vec midpoint_step(const Scenario& sc, const Vec& x, double t, double h, std::size_t index,
                  Mat* tangent = nullptr, Vec* midpoint = nullptr);

/// f_t(x0). Points outside the support are returned unchanged.
Vec integrate_flow(const Scenario& sc, const Vec& x0, double t);

/// t -> Df_t(x0) over p periods, one sample per step, times rescaled to [0, 1].
/// Requires the standard form. Throws NumericalError if the symplectic defect
/// exceeds kTolFlow.
symp::SpPath jacobian_path(const Scenario& sc, const Vec& x0, int p);

/// Winding in turns of t -> det^2(Df_t(x0) R^n) over p periods, streamed
/// without storing the path.
double jacobian_winding(const Scenario& sc, const Vec& x0, int p);

struct Quadrature {
  int radial = 96;    // Gauss-Legendre nodes in r (2D)
  int angular = 64;   // trapezoid nodes in theta (2D)
  int per_axis = 10;  // Gauss-Legendre nodes per axis (dim > 2)
  double radius = 0;  // 0 means the scenario's support radius
};

/// integral over the ball of integral_0^1 lambda(Z_t)(f_t(x)) dt nu.
double calabi(const Scenario& sc, const ham::PrimitiveOneForm& lam, const Quadrature& rule = {},
              int jobs = 1);

/// Same integrand on a single orbit: integral_0^1 lambda(Z_t)(f_t(x)) dt,
/// taken as the line integral of lambda along the polygon of midpoint steps.
double action_integral(const Scenario& sc, const ham::PrimitiveOneForm& lam, const Vec& x);

struct BirkhoffResult {
  double average = 0.0;
  double oscillation = 0.0;  // max - min of running averages over the last quarter
  int iterations = 0;
};

BirkhoffResult birkhoff_average(const Scenario& sc, const std::function<double(const Vec&)>& phi,
                                const Vec& x, int n_iterations);

struct TauResult {
  double value = 0.0;
  double std_error = 0.0;
  double deterministic_error = 0.0;  // 2n/p times the support volume
  double volume = 0.0;
  int p = 0;
  int n_samples = 0;
  std::uint64_t seed = 0;
};

/// Volume of the ball of radius r in R^dim.
double ball_volume(int dim, double r);

/// Monte Carlo over the support ball of (1/p) * winding of Df^p.
TauResult tau_ball(const Scenario& sc, int p, int n_samples, std::uint64_t seed, int jobs = 1);

struct RestrictionValue {
  double value = 0.0;
  double s = 0.0;
  TauResult tau;
  double calabi = 0.0;
};

/// tau + s * Cal on the ball.
RestrictionValue s_restriction_value(const Scenario& sc, double s, int p, int n_samples,
                                     std::uint64_t seed, const Quadrature& rule = {}, int jobs = 1);

}  // namespace qmlab::flow

#pragma once

// Poincare-disk geometry, the contact lift of a disk-supported Hamiltonian
// isotopy of a closed hyperbolic surface, its boundary index and the estimators
// built on it.

#include <complex>
#include <cstdint>
#include <vector>

#include "qmlab/hamflow.hpp"

namespace qmlab::hyp {

using Complex = std::complex<double>;

inline constexpr double kDiskGuard = 1e-12;

/// Point of the open unit disk; rejects |z| >= 1 - kDiskGuard.
class DiskPoint {
 public:
  explicit DiskPoint(Complex z);
  Complex z() const noexcept { return z_; }

 private:
  Complex z_;
};

/// Unit tangent direction: base point and angle (radians) in the chart frame.
struct UnitDirection {
  DiskPoint base;
  double angle = 0.0;
};

/// Continuous lift of a circle path, in turns.
class CirclePath {
 public:
  /// Throws RefineError at the first step of half a turn or more.
  explicit CirclePath(std::vector<double> lifted_turns);
  const std::vector<double>& lifted() const noexcept { return lifted_; }
  double displacement() const { return lifted_.back() - lifted_.front(); }

 private:
  std::vector<double> lifted_;
};

/// floor(displacement).
long long circle_index(const CirclePath& path);

/// gamma followed by beta; beta must start where gamma ends (mod 1).
CirclePath concatenate(const CirclePath& gamma, const CirclePath& beta);

/// Boundary point (angle in (-pi, pi]) of the geodesic ray from v.
double geodesic_endpoint(const UnitDirection& v);

/// z -> e^{i phi} (z - a) / (1 - conj(a) z).
struct Mobius {
  double phi = 0.0;
  Complex a{0.0, 0.0};

  Complex apply(Complex z) const;
  /// Argument of the derivative at z (radians); directions rotate by it.
  double rotation_at(Complex z) const;
  UnitDirection apply(const UnitDirection& v) const;
  Mobius inverse() const;
};

/// Point at parameter s in [0, 1] of the geodesic segment from z0 to z1.
Complex geodesic_point(Complex z0, Complex z1, double s);

/// Hyperbolic distance for the curvature -1 metric 4|dz|^2 / (1 - |z|^2)^2.
double hyperbolic_distance(Complex z0, Complex z1);

/// Area of a geodesic triangle, computed from its interior angles.
double geodesic_triangle_area(Complex a, Complex b, Complex c);

/// Chart-angle rate (radians per unit time) of a parallel frame along a curve
/// through z with velocity zdot.
double parallel_transport_rate(Complex z, Complex zdot);

/// Total chart-angle change of a parallel frame along a closed polygon of
/// geodesic sides, each integrated with `nodes_per_side` Gauss-Legendre nodes.
double geodesic_polygon_holonomy(const std::vector<Complex>& vertices, int nodes_per_side = 40);

// ---------------------------------------------------------------------------

/// A hyperbolic-form scenario supported in the disk U of omega-area disk_area
/// (chart radius R_U) inside a closed surface of genus g and area 2g - 2.
struct DiskIsotopy {
  flow::Scenario scenario;
  int genus = 2;
  double disk_area = 1.0;

  void validate() const;
  double disk_radius() const;
  /// omega-area of the chart disk of the scenario's support radius.
  double support_area() const;
};

/// Mean-zero correction c_t = (integral_U H_t omega) / (2g - 2) for the
/// generating function K = -H, tabulated at the midpoint of every integrator step
/// of one period.
struct Correction {
  std::vector<double> c;  // one per step
  double mean = 0.0;      // integral_0^1 c_t dt
};

Correction mean_zero_correction(const DiskIsotopy& iso, int radial = 48, int angular = 64);

struct LiftTrace {
  std::vector<Complex> base;            // orbit, one sample per step
  std::vector<double> direction;        // chart angle (radians), continuous
  CirclePath boundary{std::vector<double>{0.0, 0.0}};
};

/// Contact lift of v over p periods and its boundary path p_inf in turns.
LiftTrace theta_lift(const DiskIsotopy& iso, const UnitDirection& v, int p);

struct AngleResult {
  double value = 0.0;            // -min_k n_k, or p * mean(c) outside the support
  long long min_index = 0;
  long long max_index = 0;
  bool analytic = false;
};

/// angle(x, f^p) sampled over k equally spaced fiber directions.
AngleResult angle_estimate(const DiskIsotopy& iso, Complex x, int p, int fiber_samples = 8,
                           const Correction* correction = nullptr);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
  double deterministic_error = 0.0;
  int p = 0;
  int n_points = 0;
  std::uint64_t seed = 0;
};

/// Monte Carlo estimate of Cal_S(f_1): stratified omega-uniform points in the
/// support disk, plus mean(c) times the area of the rest of the surface.
Estimate cal_s_estimate(const DiskIsotopy& iso, int p, int n_points, int fiber_samples,
                        std::uint64_t seed, int jobs = 1);

/// Smooth 1-form a dx + b dy with polynomial coefficients sum c x^i y^j.
struct PolyOneForm {
  struct Term {
    double c = 0.0;
    int i = 0;
    int j = 0;
  };
  std::vector<Term> a;
  std::vector<Term> b;

  Complex coefficients(Complex z) const;  // a + i b
  double apply(Complex z, Complex v) const;
  /// max over the chart disk of radius r of the hyperbolic norm of eta.
  double hyperbolic_norm(double r, int samples = 64) const;
};

/// Integral of eta along the geodesic from x to f^p(x).
double gg_u(const PolyOneForm& eta, const DiskIsotopy& iso, Complex x, int p, int nodes = 32);

/// (1/p) integral over U of gg_u, by stratified omega-uniform sampling of the support.
Estimate phi_eta_estimate(const PolyOneForm& eta, const DiskIsotopy& iso, int p, int n_points,
                          std::uint64_t seed, int jobs = 1);

}  // namespace qmlab::hyp

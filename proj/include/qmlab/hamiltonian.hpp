#pragma once

// Compactly supported time-dependent Hamiltonians, symplectic area forms with
// a density, and their primitives.

#include <limits>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace qmlab::ham {

inline constexpr int kMaxDim = 8;
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// H_t(x) for t in [0, 1], extended 1-periodically in t.
class Field {
 public:
  virtual ~Field() = default;
  virtual int dim() const = 0;
  virtual double value(const Vec& x, double t) const = 0;
  virtual Vec gradient(const Vec& x, double t) const = 0;
  virtual Mat hessian(const Vec& x, double t) const = 0;
  /// H_t vanishes with all derivatives for |x| >= support_radius().
  virtual double support_radius() const = 0;
};

using FieldPtr = std::shared_ptr<const Field>;

/// Time modulation a(t) = sum_i poly[i] t^i + sin_amp * sin(2 pi t).
struct TimeProfile {
  std::vector<double> poly{1.0};
  double sin_amp = 0.0;

  double operator()(double t) const;
  bool autonomous() const;
};

enum class Profile { Bump, Quadratic };

/// amplitude * a(t) * h(|x - center|^2 / radius^2) with
/// h(s) = (1 - s)^exponent on s < 1 (Bump) or h(s) = s (Quadratic, no support).
struct RadialSpec {
  int dim = 2;
  double amplitude = 1.0;
  double radius = 1.0;
  int exponent = 3;
  Profile profile = Profile::Bump;
  std::vector<double> center;  // empty means origin
  TimeProfile time;
};

FieldPtr make_radial(const RadialSpec& spec);

/// Monomial coef * prod x_i^{e_i}.
struct Monomial {
  double coef = 0.0;
  std::vector<int> exponents;
};

/// a(t) * P(x) * (1 - |x|^2 / cutoff^2)^3 inside the cutoff ball; with
/// cutoff = inf the polynomial is used bare (unbounded support).
FieldPtr make_poly(int dim, std::vector<Monomial> terms, double cutoff, TimeProfile time = {});

/// Two-dimensional field: cubic B-spline through values on the uniform grid
/// [-half_width, half_width]^2 (row index = y), times the cutoff bump of
/// make_poly. The spline is C^2.
FieldPtr make_grid(std::vector<std::vector<double>> values, double half_width, double cutoff,
                   TimeProfile time = {});

FieldPtr make_sum(std::vector<FieldPtr> parts);
FieldPtr make_scaled(FieldPtr f, double factor);
/// H'_t = -H_{1-t}: generates the inverse of the time-one map.
FieldPtr make_reversed(FieldPtr f);
/// H'_t = k H_{frac(k t)}: generates the k-th power of the time-one map.
FieldPtr make_repeated(FieldPtr f, int k);
/// Generates f_1 o g_1: g on [0, 1/2], f on [1/2, 1], both at double speed.
FieldPtr make_concat(FieldPtr f, FieldPtr g);
/// H'(x) = H(M x); for a linear symplectic M this generates M^{-1} f M.
FieldPtr make_pullback(FieldPtr f, const Mat& m);

// ---------------------------------------------------------------------------

enum class FormKind { Standard, Hyperbolic };

/// nu = rho(x) * sum_i dx_i ^ dy_i. Standard: rho = 1. Hyperbolic (2D, |x| < 1):
/// rho = (2/pi) / (1 - |x|^2)^2, the hyperbolic area form divided by 2 pi.
struct Form {
  FormKind kind = FormKind::Standard;
  double density(const Vec& x) const;
  Vec density_gradient(const Vec& x) const;
};

/// omega-area of the chart disk of radius r under the hyperbolic form.
double hyperbolic_disk_area(double r);
/// Chart radius of the disk of omega-area a.
double hyperbolic_disk_radius(double area);

/// A primitive lambda of nu, optionally shifted by the exact form d(psi).
struct PrimitiveOneForm {
  FormKind kind = FormKind::Standard;
  FieldPtr exact_shift;  // psi, evaluated at t = 0; may be null

  /// lambda_x(v).
  double apply(const Vec& x, const Vec& v) const;
  /// Coefficients a with lambda = sum_k a_k dx^k (coordinate order x_1..x_n, y_1..y_n).
  Vec coefficients(const Vec& x) const;
};

/// max |d lambda - nu| over the (x_i, y_j) components at x, by central
/// differences with step h.
double exterior_derivative_defect(const PrimitiveOneForm& lam, const Form& form, const Vec& x,
                                  double h = 1e-5);

/// X = J0 grad H / rho and its Jacobian.
Vec hamiltonian_vector(const Field& f, const Form& form, const Vec& x, double t);
Mat hamiltonian_vector_jacobian(const Field& f, const Form& form, const Vec& x, double t);

/// J0 for dimension 2n (as a fixed-capacity matrix).
Mat j0(int dim);

}  // namespace qmlab::ham

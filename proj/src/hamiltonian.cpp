#include "qmlab/hamiltonian.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "qmlab/error.hpp"

namespace qmlab::ham {

namespace {

double frac(double t) { return t - std::floor(t); }

Mat zero_mat(int d) { return Mat::Zero(d, d); }

// (1 - |x|^2 / r^2)^3 inside the ball, with derivatives.
struct Cutoff {
  double r = kInf;

  bool active() const { return std::isfinite(r); }
  bool outside(const Vec& x) const { return active() && x.squaredNorm() >= r * r; }
  double value(const Vec& x) const {
    if (!active()) return 1.0;
    const double q = 1.0 - x.squaredNorm() / (r * r);
    return q > 0 ? q * q * q : 0.0;
  }
  Vec gradient(const Vec& x) const {
    if (!active()) return Vec::Zero(x.size());
    const double q = 1.0 - x.squaredNorm() / (r * r);
    if (q <= 0) return Vec::Zero(x.size());
    return (-6.0 * q * q / (r * r)) * x;
  }
  Mat hessian(const Vec& x) const {
    const int d = static_cast<int>(x.size());
    if (!active()) return zero_mat(d);
    const double q = 1.0 - x.squaredNorm() / (r * r);
    if (q <= 0) return zero_mat(d);
    Mat h = (24.0 * q / (r * r * r * r)) * (x * x.transpose());
    h.diagonal().array() -= 6.0 * q * q / (r * r);
    return h;
  }
};

class Radial final : public Field {
 public:
  explicit Radial(RadialSpec s) : s_(std::move(s)) {
    if (s_.dim < 2 || s_.dim % 2 != 0 || s_.dim > kMaxDim)
      throw ValidationError("radial field: dim must be even, 2..8");
    if (!(s_.radius > 0)) throw ValidationError("radial field: radius must be positive");
    if (s_.profile == Profile::Bump && s_.exponent < 1)
      throw ValidationError("radial field: exponent must be at least 1");
    c_ = Vec::Zero(s_.dim);
    if (!s_.center.empty()) {
      if (static_cast<int>(s_.center.size()) != s_.dim)
        throw ValidationError("radial field: center has wrong dimension");
      for (int i = 0; i < s_.dim; ++i) c_(i) = s_.center[i];
    }
  }
  int dim() const override { return s_.dim; }
  double support_radius() const override {
    return s_.profile == Profile::Bump ? c_.norm() + s_.radius : kInf;
  }
  double value(const Vec& x, double t) const override {
    double h, d1, d2;
    profile((x - c_).squaredNorm() / (s_.radius * s_.radius), h, d1, d2);
    return s_.amplitude * s_.time(frac(t)) * h;
  }
  Vec gradient(const Vec& x, double t) const override {
    const Vec u = x - c_;
    double h, d1, d2;
    profile(u.squaredNorm() / (s_.radius * s_.radius), h, d1, d2);
    return (s_.amplitude * s_.time(frac(t)) * d1 * 2.0 / (s_.radius * s_.radius)) * u;
  }
  Mat hessian(const Vec& x, double t) const override {
    const Vec u = x - c_;
    double h, d1, d2;
    const double r2 = s_.radius * s_.radius;
    profile(u.squaredNorm() / r2, h, d1, d2);
    const double a = s_.amplitude * s_.time(frac(t));
    Mat m = (a * d2 * 4.0 / (r2 * r2)) * (u * u.transpose());
    m.diagonal().array() += a * d1 * 2.0 / r2;
    return m;
  }

 private:
  void profile(double s, double& h, double& d1, double& d2) const {
    if (s_.profile == Profile::Quadratic) {
      h = s;
      d1 = 1.0;
      d2 = 0.0;
      return;
    }
    if (s >= 1.0) {
      h = d1 = d2 = 0.0;
      return;
    }
    const int k = s_.exponent;
    const double q = 1.0 - s;
    h = std::pow(q, k);
    d1 = -k * std::pow(q, k - 1);
    d2 = k >= 2 ? k * (k - 1) * std::pow(q, k - 2) : 0.0;
  }

  RadialSpec s_;
  Vec c_;
};

class Poly final : public Field {
 public:
  Poly(int dim, std::vector<Monomial> terms, double cutoff, TimeProfile time)
      : dim_(dim), terms_(std::move(terms)), cut_{cutoff}, time_(std::move(time)) {
    if (dim_ < 2 || dim_ % 2 != 0 || dim_ > kMaxDim)
      throw ValidationError("poly field: dim must be even, 2..8");
    if (!(cutoff > 0)) throw ValidationError("poly field: cutoff must be positive");
    for (const auto& m : terms_) {
      if (static_cast<int>(m.exponents.size()) != dim_)
        throw ValidationError("poly field: monomial exponent count must equal dim");
      for (int e : m.exponents)
        if (e < 0) throw ValidationError("poly field: negative exponent");
    }
  }
  int dim() const override { return dim_; }
  double support_radius() const override { return cut_.r; }
  double value(const Vec& x, double t) const override {
    if (cut_.outside(x)) return 0.0;
    return time_(frac(t)) * p(x) * cut_.value(x);
  }
  Vec gradient(const Vec& x, double t) const override {
    if (cut_.outside(x)) return Vec::Zero(dim_);
    return time_(frac(t)) * (cut_.value(x) * grad_p(x) + p(x) * cut_.gradient(x));
  }
  Mat hessian(const Vec& x, double t) const override {
    if (cut_.outside(x)) return zero_mat(dim_);
    const Vec gp = grad_p(x), gc = cut_.gradient(x);
    Mat h = cut_.value(x) * hess_p(x) + p(x) * cut_.hessian(x) + gp * gc.transpose() +
            gc * gp.transpose();
    return time_(frac(t)) * h;
  }

 private:
  static double mono(const Vec& x, const std::vector<int>& e) {
    double v = 1.0;
    for (std::size_t i = 0; i < e.size(); ++i)
      if (e[i] > 0) v *= std::pow(x(i), e[i]);
    return v;
  }
  double p(const Vec& x) const {
    double v = 0.0;
    for (const auto& m : terms_) v += m.coef * mono(x, m.exponents);
    return v;
  }
  Vec grad_p(const Vec& x) const {
    Vec g = Vec::Zero(dim_);
    for (const auto& m : terms_) {
      for (int i = 0; i < dim_; ++i) {
        if (m.exponents[i] == 0) continue;
        auto e = m.exponents;
        const double c = m.coef * e[i];
        --e[i];
        g(i) += c * mono(x, e);
      }
    }
    return g;
  }
  Mat hess_p(const Vec& x) const {
    Mat h = zero_mat(dim_);
    for (const auto& m : terms_) {
      for (int i = 0; i < dim_; ++i) {
        if (m.exponents[i] == 0) continue;
        for (int j = 0; j < dim_; ++j) {
          auto e = m.exponents;
          double c = m.coef * e[i];
          --e[i];
          if (e[j] == 0) continue;
          c *= e[j];
          --e[j];
          h(i, j) += c * mono(x, e);
        }
      }
    }
    return h;
  }

  int dim_;
  std::vector<Monomial> terms_;
  Cutoff cut_;
  TimeProfile time_;
};

// Natural cubic B-spline interpolation on a uniform grid: solve
// (c[i-1] + 4 c[i] + c[i+1]) / 6 = v[i] with linear ghost extrapolation.
std::vector<double> prefilter(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<double> c(v);
  if (n <= 2) return c;
  // Interior unknowns c[1..n-2]; c[0] = v[0], c[n-1] = v[n-1].
  const std::size_t m = n - 2;
  std::vector<double> diag(m, 4.0 / 6.0), rhs(m);
  for (std::size_t i = 0; i < m; ++i) rhs[i] = v[i + 1];
  rhs[0] -= v[0] / 6.0;
  rhs[m - 1] -= v[n - 1] / 6.0;
  const double off = 1.0 / 6.0;
  for (std::size_t i = 1; i < m; ++i) {
    const double w = off / diag[i - 1];
    diag[i] -= w * off;
    rhs[i] -= w * rhs[i - 1];
  }
  std::vector<double> x(m);
  x[m - 1] = rhs[m - 1] / diag[m - 1];
  for (std::size_t i = m - 1; i-- > 0;) x[i] = (rhs[i] - off * x[i + 1]) / diag[i];
  for (std::size_t i = 0; i < m; ++i) c[i + 1] = x[i];
  return c;
}

class Grid final : public Field {
 public:
  Grid(std::vector<std::vector<double>> values, double half_width, double cutoff, TimeProfile time)
      : half_(half_width), cut_{cutoff}, time_(std::move(time)) {
    n_ = static_cast<int>(values.size());
    if (n_ < 4) throw ValidationError("grid field: need at least 4x4 values");
    for (const auto& row : values)
      if (static_cast<int>(row.size()) != n_) throw ValidationError("grid field: grid must be square");
    if (!(half_width > 0)) throw ValidationError("grid field: half_width must be positive");
    if (!(cutoff > 0) || cutoff > half_width)
      throw ValidationError("grid field: cutoff must lie in (0, half_width]");
    h_ = 2.0 * half_ / (n_ - 1);
    coef_.assign(static_cast<std::size_t>(n_) * n_, 0.0);
    std::vector<std::vector<double>> rows(n_);
    for (int j = 0; j < n_; ++j) rows[j] = prefilter(values[j]);
    for (int i = 0; i < n_; ++i) {
      std::vector<double> col(n_);
      for (int j = 0; j < n_; ++j) col[j] = rows[j][i];
      col = prefilter(col);
      for (int j = 0; j < n_; ++j) coef_[static_cast<std::size_t>(j) * n_ + i] = col[j];
    }
  }
  int dim() const override { return 2; }
  double support_radius() const override { return cut_.r; }
  double value(const Vec& x, double t) const override {
    if (cut_.outside(x)) return 0.0;
    double s, sx, sy, sxx, sxy, syy;
    spline(x, s, sx, sy, sxx, sxy, syy);
    return time_(frac(t)) * s * cut_.value(x);
  }
  Vec gradient(const Vec& x, double t) const override {
    if (cut_.outside(x)) return Vec::Zero(2);
    double s, sx, sy, sxx, sxy, syy;
    spline(x, s, sx, sy, sxx, sxy, syy);
    Vec gs(2);
    gs << sx, sy;
    return time_(frac(t)) * (cut_.value(x) * gs + s * cut_.gradient(x));
  }
  Mat hessian(const Vec& x, double t) const override {
    if (cut_.outside(x)) return zero_mat(2);
    double s, sx, sy, sxx, sxy, syy;
    spline(x, s, sx, sy, sxx, sxy, syy);
    Vec gs(2);
    gs << sx, sy;
    Mat hs(2, 2);
    hs << sxx, sxy, sxy, syy;
    const Vec gc = cut_.gradient(x);
    Mat h = cut_.value(x) * hs + s * cut_.hessian(x) + gs * gc.transpose() + gc * gs.transpose();
    return time_(frac(t)) * h;
  }

 private:
  double c(int i, int j) const {
    // Linear ghost extrapolation beyond the grid.
    auto row = [&](int b) {
      auto at = [&](int a) { return coef_[static_cast<std::size_t>(b) * n_ + a]; };
      if (i < 0) return 2.0 * at(0) - at(1);
      if (i >= n_) return 2.0 * at(n_ - 1) - at(n_ - 2);
      return at(i);
    };
    if (j < 0) return 2.0 * row(0) - row(1);
    if (j >= n_) return 2.0 * row(n_ - 1) - row(n_ - 2);
    return row(j);
  }
  static void basis(double t, double b[4], double d[4], double dd[4]) {
    const double u = 1.0 - t;
    b[0] = u * u * u / 6.0;
    b[1] = (3 * t * t * t - 6 * t * t + 4) / 6.0;
    b[2] = (-3 * t * t * t + 3 * t * t + 3 * t + 1) / 6.0;
    b[3] = t * t * t / 6.0;
    d[0] = -u * u / 2.0;
    d[1] = (3 * t * t - 4 * t) / 2.0;
    d[2] = (-3 * t * t + 2 * t + 1) / 2.0;
    d[3] = t * t / 2.0;
    dd[0] = u;
    dd[1] = 3 * t - 2;
    dd[2] = -3 * t + 1;
    dd[3] = t;
  }
  void spline(const Vec& x, double& s, double& sx, double& sy, double& sxx, double& sxy,
              double& syy) const {
    s = sx = sy = sxx = sxy = syy = 0.0;
    const double ux = (x(0) + half_) / h_, uy = (x(1) + half_) / h_;
    if (ux < 0 || uy < 0 || ux > n_ - 1 || uy > n_ - 1) return;
    const int i = std::min(static_cast<int>(ux), n_ - 2);
    const int j = std::min(static_cast<int>(uy), n_ - 2);
    double bx[4], dx[4], ddx[4], by[4], dy[4], ddy[4];
    basis(ux - i, bx, dx, ddx);
    basis(uy - j, by, dy, ddy);
    for (int b = 0; b < 4; ++b)
      for (int a = 0; a < 4; ++a) {
        const double cv = c(i - 1 + a, j - 1 + b);
        s += cv * bx[a] * by[b];
        sx += cv * dx[a] * by[b];
        sy += cv * bx[a] * dy[b];
        sxx += cv * ddx[a] * by[b];
        sxy += cv * dx[a] * dy[b];
        syy += cv * bx[a] * ddy[b];
      }
    sx /= h_;
    sy /= h_;
    sxx /= h_ * h_;
    sxy /= h_ * h_;
    syy /= h_ * h_;
  }

  int n_ = 0;
  double half_ = 1.0, h_ = 1.0;
  Cutoff cut_;
  TimeProfile time_;
  std::vector<double> coef_;
};

class Sum final : public Field {
 public:
  explicit Sum(std::vector<FieldPtr> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) throw ValidationError("sum field: no parts");
    for (const auto& p : parts_)
      if (!p || p->dim() != parts_.front()->dim()) throw ValidationError("sum field: dimension mismatch");
  }
  int dim() const override { return parts_.front()->dim(); }
  double support_radius() const override {
    double r = 0.0;
    for (const auto& p : parts_) r = std::max(r, p->support_radius());
    return r;
  }
  double value(const Vec& x, double t) const override {
    double v = 0.0;
    for (const auto& p : parts_) v += p->value(x, t);
    return v;
  }
  Vec gradient(const Vec& x, double t) const override {
    Vec g = Vec::Zero(dim());
    for (const auto& p : parts_) g += p->gradient(x, t);
    return g;
  }
  Mat hessian(const Vec& x, double t) const override {
    Mat h = zero_mat(dim());
    for (const auto& p : parts_) h += p->hessian(x, t);
    return h;
  }

 private:
  std::vector<FieldPtr> parts_;
};

// H'(x, t) = scale(t) * H(x, tau(t)) for a time reparametrisation.
class Retimed final : public Field {
 public:
  enum class Mode { Scale, Reverse, Repeat };
  Retimed(FieldPtr f, Mode mode, double factor) : f_(std::move(f)), mode_(mode), k_(factor) {
    if (!f_) throw ValidationError("field wrapper: null field");
  }
  int dim() const override { return f_->dim(); }
  double support_radius() const override { return f_->support_radius(); }
  double value(const Vec& x, double t) const override {
    double s = 0.0, tt = 0.0;
    map(t, s, tt);
    return s * f_->value(x, tt);
  }
  Vec gradient(const Vec& x, double t) const override {
    double s = 0.0, tt = 0.0;
    map(t, s, tt);
    return s * f_->gradient(x, tt);
  }
  Mat hessian(const Vec& x, double t) const override {
    double s = 0.0, tt = 0.0;
    map(t, s, tt);
    return s * f_->hessian(x, tt);
  }

 private:
  void map(double t, double& s, double& tt) const {
    const double u = frac(t);
    switch (mode_) {
      case Mode::Scale:
        s = k_;
        tt = u;
        return;
      case Mode::Reverse:
        s = -1.0;
        tt = 1.0 - u;
        return;
      case Mode::Repeat:
        s = k_;
        tt = frac(k_ * u);
        return;
    }
  }
  FieldPtr f_;
  Mode mode_;
  double k_;
};

class Concat final : public Field {
 public:
  Concat(FieldPtr f, FieldPtr g) : f_(std::move(f)), g_(std::move(g)) {
    if (!f_ || !g_ || f_->dim() != g_->dim()) throw ValidationError("concat field: dimension mismatch");
  }
  int dim() const override { return f_->dim(); }
  double support_radius() const override { return std::max(f_->support_radius(), g_->support_radius()); }
  double value(const Vec& x, double t) const override {
    const double u = frac(t);
    return u < 0.5 ? 2.0 * g_->value(x, 2.0 * u) : 2.0 * f_->value(x, 2.0 * u - 1.0);
  }
  Vec gradient(const Vec& x, double t) const override {
    const double u = frac(t);
    return u < 0.5 ? Vec(2.0 * g_->gradient(x, 2.0 * u)) : Vec(2.0 * f_->gradient(x, 2.0 * u - 1.0));
  }
  Mat hessian(const Vec& x, double t) const override {
    const double u = frac(t);
    return u < 0.5 ? Mat(2.0 * g_->hessian(x, 2.0 * u)) : Mat(2.0 * f_->hessian(x, 2.0 * u - 1.0));
  }

 private:
  FieldPtr f_, g_;
};

class Pullback final : public Field {
 public:
  Pullback(FieldPtr f, const Mat& m) : f_(std::move(f)), m_(m) {
    if (!f_ || m_.rows() != f_->dim() || m_.cols() != f_->dim())
      throw ValidationError("pullback field: matrix size mismatch");
    const Eigen::MatrixXd dense = m_;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(dense);
    const double smin = svd.singularValues().minCoeff();
    if (!(smin > 0)) throw ValidationError("pullback field: singular matrix");
    inv_norm_ = 1.0 / smin;
  }
  int dim() const override { return f_->dim(); }
  double support_radius() const override { return f_->support_radius() * inv_norm_; }
  double value(const Vec& x, double t) const override { return f_->value(m_ * x, t); }
  Vec gradient(const Vec& x, double t) const override {
    return m_.transpose() * f_->gradient(m_ * x, t);
  }
  Mat hessian(const Vec& x, double t) const override {
    return m_.transpose() * f_->hessian(m_ * x, t) * m_;
  }

 private:
  FieldPtr f_;
  Mat m_;
  double inv_norm_ = 1.0;
};

}  // namespace

double TimeProfile::operator()(double t) const {
  double v = 0.0, p = 1.0;
  for (double c : poly) {
    v += c * p;
    p *= t;
  }
  return v + sin_amp * std::sin(2.0 * std::numbers::pi * t);
}

bool TimeProfile::autonomous() const {
  if (sin_amp != 0.0) return false;
  for (std::size_t i = 1; i < poly.size(); ++i)
    if (poly[i] != 0.0) return false;
  return true;
}

FieldPtr make_radial(const RadialSpec& spec) { return std::make_shared<Radial>(spec); }

FieldPtr make_poly(int dim, std::vector<Monomial> terms, double cutoff, TimeProfile time) {
  return std::make_shared<Poly>(dim, std::move(terms), cutoff, std::move(time));
}

FieldPtr make_grid(std::vector<std::vector<double>> values, double half_width, double cutoff,
                   TimeProfile time) {
  return std::make_shared<Grid>(std::move(values), half_width, cutoff, std::move(time));
}

FieldPtr make_sum(std::vector<FieldPtr> parts) { return std::make_shared<Sum>(std::move(parts)); }

FieldPtr make_scaled(FieldPtr f, double factor) {
  return std::make_shared<Retimed>(std::move(f), Retimed::Mode::Scale, factor);
}

FieldPtr make_reversed(FieldPtr f) {
  return std::make_shared<Retimed>(std::move(f), Retimed::Mode::Reverse, 1.0);
}

FieldPtr make_repeated(FieldPtr f, int k) {
  if (k < 1) throw ValidationError("repeated field: k must be positive");
  return std::make_shared<Retimed>(std::move(f), Retimed::Mode::Repeat, static_cast<double>(k));
}

FieldPtr make_concat(FieldPtr f, FieldPtr g) { return std::make_shared<Concat>(std::move(f), std::move(g)); }

FieldPtr make_pullback(FieldPtr f, const Mat& m) { return std::make_shared<Pullback>(std::move(f), m); }

// ---------------------------------------------------------------------------

double Form::density(const Vec& x) const {
  if (kind == FormKind::Standard) return 1.0;
  const double q = 1.0 - x.squaredNorm();
  if (!(q > 0)) throw NumericalError("hyperbolic form evaluated outside the unit disk");
  return (2.0 / std::numbers::pi) / (q * q);
}

Vec Form::density_gradient(const Vec& x) const {
  if (kind == FormKind::Standard) return Vec::Zero(x.size());
  const double q = 1.0 - x.squaredNorm();
  if (!(q > 0)) throw NumericalError("hyperbolic form evaluated outside the unit disk");
  return (8.0 / std::numbers::pi / (q * q * q)) * x;
}

double hyperbolic_disk_area(double r) {
  if (!(r >= 0 && r < 1)) throw ValidationError("hyperbolic disk radius must lie in [0, 1)");
  return 2.0 * r * r / (1.0 - r * r);
}

double hyperbolic_disk_radius(double area) {
  if (!(area >= 0)) throw ValidationError("area must be nonnegative");
  return std::sqrt(area / (2.0 + area));
}

Vec PrimitiveOneForm::coefficients(const Vec& x) const {
  const int d = static_cast<int>(x.size());
  const int n = d / 2;
  Vec a(d);
  double g = 0.5;
  if (kind == FormKind::Hyperbolic) {
    const double q = 1.0 - x.squaredNorm();
    if (!(q > 0)) throw NumericalError("hyperbolic primitive evaluated outside the unit disk");
    g = 1.0 / (std::numbers::pi * q);
  }
  for (int i = 0; i < n; ++i) {
    a(i) = -g * x(n + i);
    a(n + i) = g * x(i);
  }
  if (exact_shift) a += exact_shift->gradient(x, 0.0);
  return a;
}

double PrimitiveOneForm::apply(const Vec& x, const Vec& v) const { return coefficients(x).dot(v); }

double exterior_derivative_defect(const PrimitiveOneForm& lam, const Form& form, const Vec& x,
                                  double h) {
  const int d = static_cast<int>(x.size());
  const int n = d / 2;
  Mat da = zero_mat(d);  // da(k, l) = d a_l / d x_k
  for (int k = 0; k < d; ++k) {
    Vec xp = x, xm = x;
    xp(k) += h;
    xm(k) -= h;
    const Vec diff = (lam.coefficients(xp) - lam.coefficients(xm)) / (2.0 * h);
    for (int l = 0; l < d; ++l) da(k, l) = diff(l);
  }
  const double rho = form.density(x);
  double worst = 0.0;
  for (int k = 0; k < d; ++k)
    for (int l = k + 1; l < d; ++l) {
      const double dl = da(k, l) - da(l, k);
      const double nu = (l == k + n && k < n) ? rho : 0.0;
      worst = std::max(worst, std::abs(dl - nu));
    }
  return worst;
}

Mat j0(int dim) {
  const int n = dim / 2;
  Mat j = zero_mat(dim);
  for (int i = 0; i < n; ++i) {
    j(i, n + i) = -1.0;
    j(n + i, i) = 1.0;
  }
  return j;
}

Vec hamiltonian_vector(const Field& f, const Form& form, const Vec& x, double t) {
  const Vec g = f.gradient(x, t);
  const int n = static_cast<int>(x.size()) / 2;
  Vec v(x.size());
  v.head(n) = -g.tail(n);
  v.tail(n) = g.head(n);
  if (form.kind != FormKind::Standard) v /= form.density(x);
  return v;
}

Mat hamiltonian_vector_jacobian(const Field& f, const Form& form, const Vec& x, double t) {
  const int d = static_cast<int>(x.size());
  Mat h = f.hessian(x, t);
  if (form.kind != FormKind::Standard) {
    const double rho = form.density(x);
    h = h / rho - f.gradient(x, t) * form.density_gradient(x).transpose() / (rho * rho);
  }
  return j0(d) * h;
}

}  // namespace qmlab::ham

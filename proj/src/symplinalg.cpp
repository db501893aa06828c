#include "qmlab/symplinalg.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "qmlab/error.hpp"

namespace qmlab::symp {

namespace {

using CMatrix = Eigen::MatrixXcd;

constexpr double kRefineTurns = 0.25;

Matrix orthonormal_basis(const Matrix& cols) {
  Eigen::HouseholderQR<Matrix> qr(cols);
  return qr.householderQ() * Matrix::Identity(cols.rows(), cols.cols());
}

// det(X + iY)^2 / |det(X + iY)|^2 for a frame (X; Y). A real change of basis
// multiplies det(X + iY) by a real number, so this is basis independent and
// equals det(U)^2 for the unitary U of any orthonormal basis.
Complex det2_of_columns(const Matrix& cols) {
  const Eigen::Index n = cols.cols();
  Complex d;
  if (n == 1) {
    d = Complex(cols(0, 0), cols(1, 0));
  } else {
    CMatrix z(n, n);
    z.real() = cols.topRows(n);
    z.imag() = cols.bottomRows(n);
    d = z.partialPivLu().determinant();
  }
  const double a = std::abs(d);
  if (!(a > 0.0) || !std::isfinite(a)) throw NumericalError("det2: degenerate Lagrangian frame");
  d /= a;
  return d * d;
}

double step_turns(Complex from, Complex to) { return phase_turns(to * std::conj(from)); }

Matrix geodesic_midpoint(const Matrix& a, const Matrix& b) {
  const Matrix j = standard_j(static_cast<int>(a.rows() / 2));
  const Matrix rel = -j * a.transpose() * j * b;
  const Matrix gen = rel.log();
  if (!gen.allFinite()) throw NumericalError("phi_lag: no real logarithm for refinement step");
  const Matrix half = (0.5 * gen).exp();
  return a * half;
}

// Winding contribution of the step a -> b acting on `frame`, subdividing at
// geodesic midpoints while the det^2 phase moves a quarter turn or more.
double segment_turns(const Matrix& a, Complex za, const Matrix& b, Complex zb, const Matrix& frame,
                     int depth) {
  const double d = step_turns(za, zb);
  if (std::abs(d) < kRefineTurns) return d;
  if (depth >= kRefineDepthCap) {
    std::ostringstream os;
    os << "phi_lag: refinement depth cap " << kRefineDepthCap << " exceeded";
    throw NumericalError(os.str());
  }
  const Matrix m = geodesic_midpoint(a, b);
  const Complex zm = det2_of_columns(m * frame);
  return segment_turns(a, za, m, zm, frame, depth + 1) +
         segment_turns(m, zm, b, zb, frame, depth + 1);
}

double path_turns(const std::vector<SpMatrix>& samples, const Matrix& frame) {
  double turns = 0.0;
  Complex prev = det2_of_columns(samples.front().matrix() * frame);
  for (std::size_t j = 1; j < samples.size(); ++j) {
    const Complex cur = det2_of_columns(samples[j].matrix() * frame);
    turns += segment_turns(samples[j - 1].matrix(), prev, samples[j].matrix(), cur, frame, 0);
    prev = cur;
  }
  return turns;
}

void require_same_n(int a, int b, const char* where) {
  if (a != b) throw ValidationError(std::string(where) + ": dimension mismatch");
}

}  // namespace

Matrix standard_j(int n) {
  Matrix j = Matrix::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n) = -Matrix::Identity(n, n);
  j.bottomLeftCorner(n, n) = Matrix::Identity(n, n);
  return j;
}

double symplectic_defect(const Matrix& m) {
  const int n = static_cast<int>(m.rows() / 2);
  const Matrix j = standard_j(n);
  return (m.transpose() * j * m - j).cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------

SpMatrix::SpMatrix(Matrix m, double tol) {
  if (m.rows() != m.cols() || m.rows() == 0 || m.rows() % 2 != 0)
    throw ValidationError("SpMatrix: need a square matrix of even size");
  if (!m.allFinite()) throw ValidationError("SpMatrix: non-finite entries");
  const double defect = symplectic_defect(m);
  if (defect > tol) {
    std::ostringstream os;
    os << "SpMatrix: ||M^T J0 M - J0|| = " << defect << " exceeds tolerance " << tol;
    throw ValidationError(os.str());
  }
  n_ = static_cast<int>(m.rows() / 2);
  m_ = std::move(m);
}

SpMatrix::SpMatrix(Matrix m, Trusted) : m_(std::move(m)), n_(static_cast<int>(m_.rows() / 2)) {}

SpMatrix SpMatrix::identity(int n) {
  if (n < 1) throw ValidationError("SpMatrix: n must be positive");
  return SpMatrix(Matrix::Identity(2 * n, 2 * n), Trusted{});
}

SpMatrix SpMatrix::exp_hamiltonian(const Matrix& s) {
  if (s.rows() != s.cols() || s.rows() % 2 != 0 || s.rows() == 0)
    throw ValidationError("exp_hamiltonian: need a square matrix of even size");
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + s.cwiseAbs().maxCoeff()))
    throw ValidationError("exp_hamiltonian: generator must be symmetric");
  const Matrix a = standard_j(static_cast<int>(s.rows() / 2)) * s;
  return SpMatrix(a.exp(), Trusted{});
}

SpMatrix SpMatrix::rotation(int n, double angle) {
  if (n < 1) throw ValidationError("SpMatrix: n must be positive");
  const double c = std::cos(angle), s = std::sin(angle);
  Matrix m(2 * n, 2 * n);
  m << c * Matrix::Identity(n, n), -s * Matrix::Identity(n, n), s * Matrix::Identity(n, n),
      c * Matrix::Identity(n, n);
  return SpMatrix(std::move(m), Trusted{});
}

SpMatrix SpMatrix::operator*(const SpMatrix& other) const {
  require_same_n(n_, other.n_, "SpMatrix product");
  return SpMatrix(m_ * other.m_, Trusted{});
}

SpMatrix SpMatrix::inverse() const {
  const Matrix j = standard_j(n_);
  return SpMatrix(-j * m_.transpose() * j, Trusted{});
}

// ---------------------------------------------------------------------------

LagrangianFrame::LagrangianFrame(Matrix columns) {
  if (columns.cols() < 1 || columns.rows() != 2 * columns.cols())
    throw ValidationError("LagrangianFrame: need a 2n x n matrix");
  if (!columns.allFinite()) throw ValidationError("LagrangianFrame: non-finite entries");
  const int n = static_cast<int>(columns.cols());
  Eigen::JacobiSVD<Matrix> svd(columns);
  const auto& sv = svd.singularValues();
  if (!(sv(n - 1) > 1e-8 * sv(0))) throw ValidationError("LagrangianFrame: rank deficient frame");
  const Matrix q = orthonormal_basis(columns);
  const double iso = (q.transpose() * standard_j(n) * q).cwiseAbs().maxCoeff();
  if (iso > kTolSp) {
    std::ostringstream os;
    os << "LagrangianFrame: subspace is not Lagrangian (omega defect " << iso << ")";
    throw ValidationError(os.str());
  }
  n_ = n;
  columns_ = std::move(columns);
}

LagrangianFrame::LagrangianFrame(Matrix columns, Trusted)
    : columns_(std::move(columns)), n_(static_cast<int>(columns_.cols())) {}

LagrangianFrame LagrangianFrame::real_subspace(int n) {
  if (n < 1) throw ValidationError("LagrangianFrame: n must be positive");
  Matrix c = Matrix::Zero(2 * n, n);
  c.topRows(n) = Matrix::Identity(n, n);
  return LagrangianFrame(std::move(c), Trusted{});
}

LagrangianFrame LagrangianFrame::graph(const Matrix& symmetric) {
  const Eigen::Index n = symmetric.rows();
  if (n < 1 || symmetric.cols() != n) throw ValidationError("graph: need a square matrix");
  if ((symmetric - symmetric.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * (1.0 + symmetric.cwiseAbs().maxCoeff()))
    throw ValidationError("graph: matrix must be symmetric");
  Matrix c(2 * n, n);
  c.topRows(n) = symmetric;
  c.bottomRows(n) = Matrix::Identity(n, n);
  return LagrangianFrame(std::move(c), Trusted{});
}

LagrangianFrame LagrangianFrame::transformed(const SpMatrix& m) const {
  require_same_n(n_, m.n(), "LagrangianFrame::transformed");
  return LagrangianFrame(orthonormal_basis(m.matrix() * columns_), Trusted{});
}

Complex LagrangianFrame::det2() const { return det2_of_columns(orthonormal_basis(columns_)); }

Complex lagrangian_det2(const LagrangianFrame& l0, const LagrangianFrame& l1) {
  require_same_n(l0.n(), l1.n(), "lagrangian_det2");
  return l1.det2() * std::conj(l0.det2());
}

// ---------------------------------------------------------------------------

double phase_turns(Complex z) {
  if (!(std::abs(z) > 0.0)) throw NumericalError("phase of zero");
  double t = std::arg(z) / (2.0 * std::numbers::pi);  // [-1/2, 1/2]
  if (t <= -0.5) t += 1.0;
  return t;
}

WindingValue winding(const std::vector<Complex>& circle_values) {
  if (circle_values.size() < 2) throw ValidationError("winding: need at least two values");
  WindingValue out;
  for (std::size_t i = 1; i < circle_values.size(); ++i) {
    const double d = step_turns(circle_values[i - 1], circle_values[i]);
    if (std::abs(d) >= 0.5 - 1e-12) throw RefineError(i - 1, std::abs(d));
    out.turns += d;
    out.max_step_phase = std::max(out.max_step_phase, std::abs(d));
    ++out.step_count;
  }
  return out;
}

// ---------------------------------------------------------------------------

SpPath::SpPath(std::vector<double> times, std::vector<SpMatrix> samples)
    : times_(std::move(times)), samples_(std::move(samples)) {
  if (samples_.size() < 2) throw ValidationError("SpPath: need at least two samples");
  if (times_.size() != samples_.size()) throw ValidationError("SpPath: times/samples size mismatch");
  n_ = samples_.front().n();
  for (const auto& s : samples_) require_same_n(n_, s.n(), "SpPath");
  if (times_.front() != 0.0 || times_.back() > 1.0 + 1e-12)
    throw ValidationError("SpPath: times must lie in [0, 1] starting at 0");
  for (std::size_t i = 1; i < times_.size(); ++i)
    if (!(times_[i] > times_[i - 1])) throw ValidationError("SpPath: times must increase strictly");
  const double d0 =
      (samples_.front().matrix() - Matrix::Identity(2 * n_, 2 * n_)).cwiseAbs().maxCoeff();
  if (d0 > kTolSp) throw ValidationError("SpPath: first sample must be the identity");
}

SpPath SpPath::constant_identity(int n, int n_samples) {
  if (n_samples < 2) throw ValidationError("constant_identity: need two samples");
  std::vector<double> t(n_samples);
  std::vector<SpMatrix> m(n_samples, SpMatrix::identity(n));
  for (int i = 0; i < n_samples; ++i) t[i] = static_cast<double>(i) / (n_samples - 1);
  return SpPath(std::move(t), std::move(m));
}

SpPath SpPath::one_parameter(const Matrix& s, int n_samples) {
  if (n_samples < 2) throw ValidationError("one_parameter: need two samples");
  std::vector<double> t(n_samples);
  std::vector<SpMatrix> m;
  m.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) {
    t[i] = static_cast<double>(i) / (n_samples - 1);
    m.push_back(SpMatrix::exp_hamiltonian(t[i] * s));
  }
  return SpPath(std::move(t), std::move(m));
}

SpPath SpPath::rotation_loop(int n, int n_samples) {
  // Rotation in the (x_1, y_1) plane only: the generator of pi_1(Sp(2n)).
  Matrix s = Matrix::Zero(2 * n, 2 * n);
  s(0, 0) = s(n, n) = 2.0 * std::numbers::pi;
  return one_parameter(s, n_samples);
}

SpPath concat_power(const SpPath& path, int p) {
  if (p < 1) throw ValidationError("concat_power: p must be positive");
  const std::size_t len = path.size();
  const double t_end = path.times().back();
  std::vector<double> times;
  std::vector<SpMatrix> samples;
  times.reserve(p * (len - 1) + 1);
  samples.reserve(p * (len - 1) + 1);
  times.push_back(0.0);
  samples.push_back(path.samples().front());
  SpMatrix shift = SpMatrix::identity(path.n());
  for (int k = 0; k < p; ++k) {
    for (std::size_t j = 1; j < len; ++j) {
      times.push_back((k + path.times()[j] / t_end) / p);
      samples.push_back(path.samples()[j] * shift);
    }
    shift = path.end() * shift;
  }
  times.back() = 1.0;
  return SpPath(std::move(times), std::move(samples));
}

SpPath concat_product(const SpPath& a, const SpPath& b) {
  require_same_n(a.n(), b.n(), "concat_product");
  std::vector<double> times;
  std::vector<SpMatrix> samples;
  const double ta = a.times().back(), tb = b.times().back();
  for (std::size_t j = 0; j < b.size(); ++j) {
    times.push_back(0.5 * b.times()[j] / tb);
    samples.push_back(b.samples()[j]);
  }
  for (std::size_t j = 1; j < a.size(); ++j) {
    times.push_back(0.5 + 0.5 * a.times()[j] / ta);
    samples.push_back(a.samples()[j] * b.end());
  }
  return SpPath(std::move(times), std::move(samples));
}

SpPath conjugated(const SpPath& path, const SpMatrix& p) {
  require_same_n(path.n(), p.n(), "conjugated");
  const SpMatrix pinv = p.inverse();
  std::vector<SpMatrix> samples;
  samples.reserve(path.size());
  for (const auto& s : path.samples()) samples.push_back(p * s * pinv);
  samples.front() = SpMatrix::identity(path.n());
  return SpPath(path.times(), std::move(samples));
}

// ---------------------------------------------------------------------------

double phi_lag(const SpPath& path, const LagrangianFrame& l0) {
  require_same_n(path.n(), l0.n(), "phi_lag");
  return path_turns(path.samples(), orthonormal_basis(l0.columns()));
}

Bracket phi_homog(const SpPath& path, int p, const LagrangianFrame& l0) {
  if (p < 1) throw ValidationError("phi_homog: p must be positive");
  require_same_n(path.n(), l0.n(), "phi_homog");
  // Segment k of gamma^p is gamma_t gamma(1)^k acting on L0, i.e. gamma_t
  // acting on gamma(1)^k L0. Carry that subspace as an orthonormal frame so
  // hyperbolic endpoints never produce overflowing matrix powers.
  Matrix frame = orthonormal_basis(l0.columns());
  double turns = 0.0;
  for (int k = 0; k < p; ++k) {
    turns += path_turns(path.samples(), frame);
    frame = orthonormal_basis(path.end().matrix() * frame);
  }
  return {turns / p, 2.0 * path.n() / p};
}

bool transverse(const LagrangianFrame& l, const LagrangianFrame& w) {
  require_same_n(l.n(), w.n(), "transverse");
  const int n = l.n();
  Matrix both(2 * n, 2 * n);
  both << orthonormal_basis(l.columns()), orthonormal_basis(w.columns());
  Eigen::JacobiSVD<Matrix> svd(both);
  const auto& sv = svd.singularValues();
  return sv(2 * n - 1) > 1e-8 * sv(0);
}

TransversalityReport transversality_winding_check(const std::vector<LagrangianFrame>& lag_path,
                                                  const LagrangianFrame& w) {
  TransversalityReport out;
  if (lag_path.empty()) return out;
  std::vector<Complex> values;
  values.reserve(lag_path.size());
  for (const auto& l : lag_path) {
    if (!transverse(l, w)) out.all_transverse = false;
    values.push_back(l.det2());
  }
  if (values.size() >= 2) out.abs_winding = std::abs(winding(values).turns);
  return out;
}

PhiEvaluator::PhiEvaluator(int n, std::optional<LagrangianFrame> l0)
    : n_(n), l0_(l0 ? *l0 : LagrangianFrame::real_subspace(n)) {
  require_same_n(n_, l0_.n(), "PhiEvaluator");
}

SpPath PhiEvaluator::power(const SpPath& a, long long p) const {
  if (p == 0) return identity();
  return concat_power(a, static_cast<int>(p));
}

}  // namespace qmlab::symp

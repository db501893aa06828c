#pragma once

// Linear symplectic algebra on R^{2n} with coordinates (x_1..x_n, y_1..y_n),
// symplectic form omega(u, v) = u^T J0^T v and complex structure
// J0 = [[0, -I], [I, 0]] (multiplication by i on z = x + i y).

#include <complex>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "qmlab/qm.hpp"

namespace qmlab::symp {

using Matrix = Eigen::MatrixXd;
using Complex = std::complex<double>;

inline constexpr double kTolSp = 1e-8;
inline constexpr int kRefineDepthCap = 20;

/// J0 = [[0, -I], [I, 0]] of size 2n.
Matrix standard_j(int n);

/// || M^T J0 M - J0 ||_max.
double symplectic_defect(const Matrix& m);

class SpMatrix {
 public:
  /// Rejects (does not repair) matrices with symplectic_defect > tol.
  explicit SpMatrix(Matrix m, double tol = kTolSp);

  static SpMatrix identity(int n);
  /// exp(J0 S) for symmetric S; always symplectic.
  static SpMatrix exp_hamiltonian(const Matrix& s);
  /// Rotation by `angle` in every (x_i, y_i) plane: e^{i angle} on C^n.
  static SpMatrix rotation(int n, double angle);

  int n() const noexcept { return n_; }
  const Matrix& matrix() const noexcept { return m_; }

  SpMatrix operator*(const SpMatrix& other) const;
  /// M^{-1} = -J0 M^T J0.
  SpMatrix inverse() const;

 private:
  struct Trusted {};
  SpMatrix(Matrix m, Trusted);

  Matrix m_;
  int n_ = 0;
};

class LagrangianFrame {
 public:
  /// `columns` is 2n x n; must have full rank n and be isotropic.
  explicit LagrangianFrame(Matrix columns);

  /// span(e_1, ..., e_n).
  static LagrangianFrame real_subspace(int n);
  /// Graph { f(x) + J0 x : x in R^n } of a symmetric endomorphism f of R^n.
  static LagrangianFrame graph(const Matrix& symmetric);

  int n() const noexcept { return n_; }
  const Matrix& columns() const noexcept { return columns_; }

  /// Image under a symplectic matrix.
  LagrangianFrame transformed(const SpMatrix& m) const;

  /// det(U)^2 where U = X + iY and (X; Y) is a real-orthonormal basis of the
  /// subspace. Independent of the basis; equals det^2_{R^n}(L).
  Complex det2() const;

 private:
  struct Trusted {};
  LagrangianFrame(Matrix columns, Trusted);

  Matrix columns_;
  int n_ = 0;
};

/// det^2_{L0} L1 = det2(L1) * conj(det2(L0)).
Complex lagrangian_det2(const LagrangianFrame& l0, const LagrangianFrame& l1);

struct WindingValue {
  double turns = 0.0;
  int step_count = 0;
  double max_step_phase = 0.0;  // largest |step| in turns, < 0.5
};

/// Principal phase of z in turns, in (-1/2, 1/2].
double phase_turns(Complex z);

/// Sums principal phase differences of consecutive unit complex numbers.
/// Throws RefineError at the first step of half a turn or more.
WindingValue winding(const std::vector<Complex>& circle_values);

class SpPath {
 public:
  /// samples[0] must be the identity; times strictly increasing.
  SpPath(std::vector<double> times, std::vector<SpMatrix> samples);

  static SpPath constant_identity(int n, int n_samples = 2);
  /// t -> exp(t J0 S) sampled at `n_samples` uniform times in [0, 1].
  static SpPath one_parameter(const Matrix& s, int n_samples);
  /// Full rotation loop T: t -> e^{2 pi i t} on C^n.
  static SpPath rotation_loop(int n, int n_samples);

  int n() const noexcept { return n_; }
  std::size_t size() const noexcept { return samples_.size(); }
  const std::vector<double>& times() const noexcept { return times_; }
  const std::vector<SpMatrix>& samples() const noexcept { return samples_; }
  const SpMatrix& end() const { return samples_.back(); }

 private:
  std::vector<double> times_;
  std::vector<SpMatrix> samples_;
  int n_ = 0;
};

/// t -> gamma_t * gamma(1)^k on segment k: a representative of [gamma]^p.
SpPath concat_power(const SpPath& path, int p);

/// Path for the product [a][b]: b first, then a * b(1).
SpPath concat_product(const SpPath& a, const SpPath& b);

/// t -> P gamma_t P^{-1}.
SpPath conjugated(const SpPath& path, const SpMatrix& p);

/// Winding in turns of t -> det^2_{L0}(gamma_t L0). Steps whose phase moves a
/// quarter turn or more are subdivided at the group geodesic midpoint
/// A exp(log(A^{-1} B) / 2), up to kRefineDepthCap levels.
double phi_lag(const SpPath& path, const LagrangianFrame& l0);

struct Bracket {
  double value = 0.0;
  double error_bound = 0.0;  // |Phi - value| <= error_bound
};

/// phi_{L0}(gamma^p) / p together with the deterministic bound 2n/p.
Bracket phi_homog(const SpPath& path, int p, const LagrangianFrame& l0);

struct TransversalityReport {
  bool all_transverse = true;
  double abs_winding = 0.0;
};

/// True when L and W intersect only in 0 (rank [L | W] = 2n, relative
/// singular value threshold 1e-8).
bool transverse(const LagrangianFrame& l, const LagrangianFrame& w);

TransversalityReport transversality_winding_check(const std::vector<LagrangianFrame>& lag_path,
                                                  const LagrangianFrame& w);

/// phi_{L0} as a quasi-morphism on the universal cover; element = SpPath.
class PhiEvaluator {
 public:
  using Element = SpPath;

  PhiEvaluator(int n, std::optional<LagrangianFrame> l0 = std::nullopt);

  double evaluate(const SpPath& path) const { return phi_lag(path, l0_); }
  SpPath compose(const SpPath& a, const SpPath& b) const { return concat_product(a, b); }
  SpPath identity() const { return SpPath::constant_identity(n_); }
  SpPath power(const SpPath& a, long long p) const;
  std::optional<double> error_bound(long long p) const { return 2.0 * n_ / static_cast<double>(p); }

 private:
  int n_;
  LagrangianFrame l0_;
};

}  // namespace qmlab::symp

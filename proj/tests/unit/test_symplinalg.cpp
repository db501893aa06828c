#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "qmlab/symplinalg.hpp"

using namespace qmlab;
using namespace qmlab::symp;

namespace {

constexpr double kPi = std::numbers::pi;

Matrix random_symmetric(int m, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix s(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) s(i, j) = s(j, i) = g(rng);
  return s;
}

SpMatrix random_sp(int n, Rng& rng, double scale = 0.5) {
  return SpMatrix::exp_hamiltonian(random_symmetric(2 * n, rng, scale));
}

LagrangianFrame random_frame(int n, Rng& rng) {
  return LagrangianFrame::real_subspace(n).transformed(random_sp(n, rng, 0.8));
}

SpPath random_path(int n, Rng& rng, double scale, int samples = 48) {
  return SpPath::one_parameter(random_symmetric(2 * n, rng, scale), samples);
}

// Orthonormal basis of span(columns), then det(X + iY)^2, computed without
// the library: Gram-Schmidt on the real columns.
Complex det2_oracle(const Matrix& cols) {
  const int n = static_cast<int>(cols.cols());
  Matrix q = cols;
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < j; ++k) q.col(j) -= q.col(k).dot(q.col(j)) * q.col(k);
    q.col(j) /= q.col(j).norm();
  }
  Eigen::MatrixXcd u(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) u(i, j) = Complex(q(i, j), q(n + i, j));
  const Complex d = u.determinant();
  return d * d;
}

}  // namespace

TEST_CASE("symplectic matrices") {
  Rng rng = stream(1, 0);
  for (int n = 1; n <= 4; ++n) {
    const auto m = random_sp(n, rng);
    CHECK(symplectic_defect(m.matrix()) < 1e-10);
    CHECK(((m * m.inverse()).matrix() - Matrix::Identity(2 * n, 2 * n)).norm() < 1e-9);
    CHECK(m.matrix().determinant() == doctest::Approx(1.0).epsilon(1e-8));
  }
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 0) = 2.0;
  CHECK_THROWS_AS(SpMatrix{bad}, ValidationError);
  const auto r = SpMatrix::rotation(1, kPi / 2);
  CHECK(r.matrix()(1, 0) == doctest::Approx(1.0));
  CHECK((standard_j(1) - r.matrix()).norm() < 1e-12);
}

TEST_CASE("Lagrangian frames") {
  Matrix not_iso(2, 1);
  not_iso << 1, 0;
  CHECK_NOTHROW(LagrangianFrame{not_iso});
  Matrix cols(4, 2);
  cols << 1, 0, 0, 0, 0, 1, 0, 0;  // e1 and y1: not isotropic
  CHECK_THROWS_AS(LagrangianFrame{cols}, ValidationError);
  Matrix rank_def(4, 2);
  rank_def << 1, 2, 0, 0, 0, 0, 0, 0;
  CHECK_THROWS_AS(LagrangianFrame{rank_def}, ValidationError);
}

TEST_CASE("det2 examples") {
  const auto r1 = LagrangianFrame::real_subspace(1);
  CHECK(std::abs(lagrangian_det2(r1, r1) - Complex(1.0, 0.0)) < 1e-14);
  for (double theta : {0.3, 1.2, 2.9, -0.7}) {
    Matrix c(2, 1);
    c << std::cos(theta), std::sin(theta);
    const Complex expect = std::exp(Complex(0.0, 2.0 * theta));
    CHECK(std::abs(lagrangian_det2(r1, LagrangianFrame{c}) - expect) < 1e-12);
  }
}

TEST_CASE("det2 agrees with the Gram-Schmidt oracle and is basis independent") {
  Rng rng = stream(2, 0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 4;
    const auto l = random_frame(n, rng);
    CHECK(std::abs(l.det2() - det2_oracle(l.columns())) < 1e-10);
    Matrix change = Matrix::Identity(n, n) + random_symmetric(n, rng, 0.3);
    const LagrangianFrame other{l.columns() * change};
    CHECK(std::abs(other.det2() - l.det2()) < 1e-10);
  }
}

TEST_CASE("property: det2 cocycle") {
  Rng rng = stream(3, 0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + trial % 4;
    const auto a = random_frame(n, rng), b = random_frame(n, rng), c = random_frame(n, rng);
    CHECK(std::abs(lagrangian_det2(a, c) - lagrangian_det2(a, b) * lagrangian_det2(b, c)) < 1e-9);
  }
}

TEST_CASE("winding examples") {
  CHECK(winding({Complex(1, 0), Complex(1, 0), Complex(1, 0)}).turns == 0.0);
  std::vector<Complex> loop;
  for (int k = 0; k <= 64; ++k) loop.push_back(std::polar(1.0, 2 * kPi * k / 64));
  const auto w = winding(loop);
  CHECK(w.turns == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(w.step_count == 64);
  CHECK(w.max_step_phase == doctest::Approx(1.0 / 64));
  try {
    winding({Complex(1, 0), Complex(1, 0), Complex(-1, 0)});
    FAIL("expected RefineError");
  } catch (const RefineError& e) {
    CHECK(e.index() == 1);
  }
}

TEST_CASE("phi_lag examples") {
  const auto r1 = LagrangianFrame::real_subspace(1);
  CHECK(phi_lag(SpPath::constant_identity(1), r1) == 0.0);
  for (double theta : {0.4, 2.0, 7.5, -3.1}) {
    const Matrix s = theta * Matrix::Identity(2, 2);
    CHECK(phi_lag(SpPath::one_parameter(s, 200), r1) == doctest::Approx(theta / kPi).epsilon(1e-10));
  }
  Matrix hyp(2, 2);
  hyp << 0, -1, -1, 0;  // J0 * hyp = diag(1, -1)
  const auto path = SpPath::one_parameter(hyp, 20);
  CHECK(std::abs(path.end().matrix()(0, 0) - std::exp(1.0)) < 1e-12);
  CHECK(std::abs(phi_lag(path, r1)) < 1e-9);
}

TEST_CASE("phi_lag refines coarse samples") {
  // Quarter rotations move det^2 by exactly half a turn per step.
  const auto r2 = LagrangianFrame::real_subspace(2);
  CHECK(phi_lag(SpPath::rotation_loop(2, 5), r2) == doctest::Approx(2.0).epsilon(1e-12));
  const auto r1 = LagrangianFrame::real_subspace(1);
  CHECK(phi_lag(SpPath::one_parameter(1.4 * Matrix::Identity(2, 2), 2), r1) ==
        doctest::Approx(1.4 / kPi).epsilon(1e-10));
  CHECK(phi_lag(SpPath::one_parameter(3.0 * Matrix::Identity(2, 2), 4), r1) ==
        doctest::Approx(3.0 / kPi).epsilon(1e-10));
}

TEST_CASE("phi_homog examples") {
  const auto r1 = LagrangianFrame::real_subspace(1);
  for (int p : {1, 7, 64}) {
    const auto b = phi_homog(SpPath::rotation_loop(1, 16), p, r1);
    CHECK(b.value == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(b.error_bound == doctest::Approx(2.0 / p));
  }
  const auto id = phi_homog(SpPath::constant_identity(2), 8, LagrangianFrame::real_subspace(2));
  CHECK(id.value == 0.0);
  CHECK(id.error_bound == doctest::Approx(0.5));
  const Matrix s = (kPi / 3) * Matrix::Identity(2, 2);
  const auto b = phi_homog(SpPath::one_parameter(s, 32), 64, r1);
  CHECK(std::abs(b.value - 1.0 / 3.0) <= 1.0 / 32);
  CHECK(b.error_bound == doctest::Approx(1.0 / 32));
}

TEST_CASE("concat_power") {
  Rng rng = stream(4, 0);
  const auto path = random_path(1, rng, 0.7, 3);
  const auto one = concat_power(path, 1);
  REQUIRE(one.size() == path.size());
  for (std::size_t i = 0; i < path.size(); ++i)
    CHECK((one.samples()[i].matrix() - path.samples()[i].matrix()).norm() == 0.0);
  const auto two = concat_power(path, 2);
  CHECK(two.size() == 5);
  CHECK((two.end().matrix() - path.end().matrix() * path.end().matrix()).norm() < 1e-12);
  const auto loop3 = concat_power(SpPath::rotation_loop(1, 32), 3);
  CHECK((loop3.end().matrix() - Matrix::Identity(2, 2)).norm() < 1e-12);
  CHECK(phi_lag(loop3, LagrangianFrame::real_subspace(1)) == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("transversality") {
  const auto r1 = LagrangianFrame::real_subspace(1);
  Matrix v(2, 1);
  v << 0, 1;
  const LagrangianFrame vert{v};
  const auto flat = transversality_winding_check({vert, vert, vert}, r1);
  CHECK(flat.all_transverse);
  CHECK(flat.abs_winding == 0.0);
  // A graph sweeping almost all of R.
  std::vector<LagrangianFrame> sweep;
  for (int k = 0; k <= 400; ++k) {
    const double t = k / 400.0;
    sweep.push_back(LagrangianFrame::graph(Matrix::Constant(1, 1, std::tan(0.999 * kPi * (t - 0.5)))));
  }
  const auto rep = transversality_winding_check(sweep, r1);
  CHECK(rep.all_transverse);
  CHECK(rep.abs_winding < 1.0);
  CHECK(rep.abs_winding > 0.9);
  // Rotating span(e1) through itself crosses the real subspace.
  std::vector<LagrangianFrame> crossing;
  for (int k = 0; k <= 40; ++k) {
    Matrix c(2, 1);
    c << std::cos(0.1 + 2.0 * k / 40), std::sin(0.1 + 2.0 * k / 40);
    crossing.push_back(LagrangianFrame{c});
  }
  CHECK_FALSE(transversality_winding_check(crossing, LagrangianFrame{[] {
                Matrix c(2, 1);
                c << std::cos(1.0), std::sin(1.0);
                return c;
              }()}).all_transverse);
}

TEST_CASE("property: transverse graph paths wind at most n") {
  Rng rng = stream(5, 0);
  const double tol = 1e-12;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 1 + trial % 3;
    const Matrix a = random_symmetric(n, rng, 3.0), b = random_symmetric(n, rng, 3.0);
    std::vector<LagrangianFrame> path;
    for (int k = 0; k <= 200; ++k) {
      const double t = k / 200.0;
      path.push_back(LagrangianFrame::graph((1 - t) * a + t * b + 5.0 * std::sin(3 * t) * Matrix::Identity(n, n)));
    }
    const auto rep = transversality_winding_check(path, LagrangianFrame::real_subspace(n));
    REQUIRE(rep.all_transverse);
    CHECK(rep.abs_winding <= n + tol);
  }
}

TEST_CASE("property: base-point change moves phi_lag by at most 2n") {
  Rng rng = stream(6, 0);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + trial % 3;
    const auto path = random_path(n, rng, 1.5);
    const auto l0 = random_frame(n, rng), l1 = random_frame(n, rng);
    CHECK(std::abs(phi_lag(path, l0) - phi_lag(path, l1)) <= 2.0 * n);
  }
}

TEST_CASE("property: brackets at p and 2p overlap") {
  Rng rng = stream(7, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 2;
    const auto path = random_path(n, rng, 1.0, 24);
    const auto l0 = LagrangianFrame::real_subspace(n);
    const auto a = phi_homog(path, 16, l0), b = phi_homog(path, 32, l0);
    CHECK(std::abs(a.value - b.value) <= a.error_bound + b.error_bound);
  }
}

TEST_CASE("property: conjugation changes Phi by at most 2(2n/p)") {
  Rng rng = stream(8, 0);
  const int p = 32;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 1 + trial % 2;
    const auto conj = random_sp(n, rng, 0.6);
    const auto l0 = LagrangianFrame::real_subspace(n);
    const auto t = phi_homog(conjugated(SpPath::rotation_loop(n, 32), conj), p, l0);
    CHECK(std::abs(t.value - 2.0) <= 2.0 * t.error_bound);
    const auto path = random_path(n, rng, 1.0, 24);
    const auto a = phi_homog(path, p, l0), b = phi_homog(conjugated(path, conj), p, l0);
    CHECK(std::abs(a.value - b.value) <= 2.0 * a.error_bound);
  }
}

TEST_CASE("phi evaluator through the generic harness") {
  PhiEvaluator ev(1);
  const auto h = qm::homogenize(ev, SpPath::rotation_loop(1, 16), {1, 8});
  CHECK(h.value == doctest::Approx(2.0).epsilon(1e-12));
  REQUIRE(h.error_bound);
  CHECK(*h.error_bound == doctest::Approx(0.25));
  CHECK(qm::homogenize(ev, ev.identity(), {1, 2, 4}).value == 0.0);
  auto sampler = [](Rng& rng) { return random_path(1, rng, 1.2, 24); };
  const auto d = qm::estimate_defect(ev, sampler, 200, 17);
  CHECK(d.max_observed <= 2.0);
}

TEST_CASE("product path") {
  Rng rng = stream(9, 0);
  const auto a = random_path(2, rng, 0.8), b = random_path(2, rng, 0.8);
  const auto ab = concat_product(a, b);
  CHECK((ab.end().matrix() - a.end().matrix() * b.end().matrix()).norm() < 1e-10);
  CHECK(ab.times().front() == 0.0);
  CHECK(ab.times().back() == doctest::Approx(1.0));
}

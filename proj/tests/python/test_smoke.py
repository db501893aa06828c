import cmath
import math

import numpy as np
import pytest

import qmlab


def test_rotation_loop():
    value, bound = qmlab.phi_rotation_loop(1, 65, 64)
    assert abs(value - 2.0) <= bound
    assert bound == pytest.approx(1 / 32)


def test_phi_homog_from_matrices():
    times = np.linspace(0.0, 1.0, 33)
    mats = [np.array([[math.cos(2 * math.pi * t), -math.sin(2 * math.pi * t)],
                      [math.sin(2 * math.pi * t), math.cos(2 * math.pi * t)]]) for t in times]
    value, bound = qmlab.phi_homog(list(times), mats, 16)
    assert abs(value - 2.0) <= bound


def test_det2_of_a_line():
    theta = 0.3
    cols = np.array([[math.cos(theta)], [math.sin(theta)]])
    assert abs(qmlab.det2(cols) - cmath.exp(2j * theta)) < 1e-12


def test_calabi_radial():
    scenario = {"H": {"kind": "radial", "radius": 1.0, "exponent": 2}, "support_radius": 1.0, "dt": 0.01}
    assert qmlab.calabi(scenario) == pytest.approx(-math.pi / 3, abs=1e-4)


def test_validation_errors_map_to_value_error():
    with pytest.raises(ValueError, match="scenario.H.radius"):
        qmlab.calabi({"H": {"kind": "radial"}, "support_radius": 1.0})
    assert issubclass(qmlab.ValidationError, ValueError)


def test_tau_is_seeded():
    scenario = {"H": {"kind": "radial", "radius": 1.0}, "support_radius": 1.0, "dt": 0.02}
    a = qmlab.tau(scenario, 8, 20, 5)
    b = qmlab.tau(scenario, 8, 20, 5)
    assert a == b
    assert abs(a["value"] + 2.0) <= 3 * a["std_error"] + a["deterministic_error"]


def test_reeb_genus_two():
    s = qmlab.reeb_summary(2)
    assert s["genus"] == 2
    assert s["euler_sum"] == -2
    assert s["trivalent"] == 2


def test_hyperbolic_distance():
    r = 0.5
    assert qmlab.hyperbolic_distance(0j, r + 0j) == pytest.approx(2 * math.atanh(r))

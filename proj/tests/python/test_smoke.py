import math

import numpy as np
import pytest

import perilps


def test_cases_and_material():
    assert len(perilps.case_names()) == 6
    m = perilps.Material.plane_strain(1.0, 0.3)
    assert m.lam == pytest.approx(15 / 26, rel=1e-14)
    assert m.mu == pytest.approx(5 / 13, rel=1e-14)
    assert perilps.theoretical_rate("constant") == 0.5


def test_bad_input_raises():
    with pytest.raises(ValueError):
        perilps.build_setup("bogus")
    with pytest.raises(perilps.InputError):
        perilps.solve("patch-static", strategy="quadratic")


def test_operator_kills_affine_fields():
    s = perilps.build_setup("patch-static", delta=0.1)
    x = s.positions
    assert x.shape == (s.size, 2)
    u = np.column_stack([3 * x[:, 0] + 2 * x[:, 1], -x[:, 0] + 2 * x[:, 1]])
    theta = s.dilatation(u)
    inside = np.array(s.in_domain)
    assert np.allclose(theta[inside], 5.0, atol=1e-10)
    assert np.max(np.abs(s.apply(u))) < 1e-9
    with pytest.raises(ValueError):
        s.apply(u[:-1])


def test_patch_solve_is_exact():
    r = perilps.solve("patch-static", strategy="linear", delta=0.1)
    assert r["l2_error"] < 1e-10
    assert r["u"].shape == r["positions"].shape


def test_convergence_rate_on_nonlinear_case():
    (rep,) = perilps.converge("nonlinear-static", deltas=[0.2, 0.1])
    errors = [row["l2_error"] for row in rep["rows"]]
    assert errors[1] < errors[0]
    fit = perilps.fit_rate([0.2, 0.1], errors)
    assert fit["rate"] == pytest.approx(rep["l2_rate"]["rate"])
    assert 1.7 < fit["rate"] < 3.0
    assert math.isclose(rep["theoretical"], 2.0)


def test_quick_validation_passes():
    checks = perilps.validate(quick=True)
    assert checks and all(c["passed"] for c in checks)

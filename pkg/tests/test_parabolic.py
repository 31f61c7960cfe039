import math

import numpy as np
import pytest
from support import oracle_D_2d, oracle_gamma

from hornlab import (BackwardKernel, ConsistencyError, DomainValidationError,
                     ModeCaloric, UnitCaloric, check_D_lower,
                     check_ID_relation, check_N_bound, kernel_log,
                     parabolic_IDN, parabolic_scan, profile_state,
                     sphere_area)


@pytest.fixture(scope="module")
def mode_caloric(profile_i1_mu1):
    return ModeCaloric(profile_state(profile_i1_mu1))


# ---------------------------------------------------------------------------
# kernel
# ---------------------------------------------------------------------------


def test_kernel_exponent(p_default):
    kern = BackwardKernel(p_default)
    assert kern.exponent == pytest.approx((p_default.c + 1) / 2, abs=0)
    assert kern.exponent == pytest.approx(2.375, abs=0)
    # exponent equals (N + (n-1) eps - (N-n) eta)/2
    p = p_default
    alt = (p.bigN + (p.n - 1) * p.eps - (p.bigN - p.n) * p.eta) / 2.0
    assert kern.exponent == pytest.approx(alt, rel=1e-15)


def test_kernel_log_values(p_default):
    kern = BackwardKernel(p_default)
    assert kernel_log(kern, 0.0, -1.0) == 0.0
    assert kernel_log(kern, 2.0, -1.0) == pytest.approx(-1.0, rel=1e-14)
    with pytest.raises(DomainValidationError):
        kernel_log(kern, 1.0, 0.0)
    with pytest.raises(DomainValidationError):
        kernel_log(kern, 1.0, 0.5)


def test_kernel_parabolic_scaling(p_default):
    # kernel_log(r, t) = kernel_log(r/s, t/s^2) - 2 exponent log s
    kern = BackwardKernel(p_default)
    rng = np.random.default_rng(3)
    for _ in range(10):
        r = float(rng.uniform(0.1, 3.0))
        t = -float(rng.uniform(0.1, 2.0))
        s = float(rng.uniform(0.5, 2.0))
        lhs = kernel_log(kern, r, t)
        rhs = kernel_log(kern, r / s, t / s ** 2) - 2.0 * kern.exponent * math.log(s)
        assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------------------
# unit caloric: closed-form mass
# ---------------------------------------------------------------------------


def test_unit_caloric_closed_form(p_default):
    u = UnitCaloric(p_default)
    closed = sphere_area(p_default.n) * 2.0 ** (p_default.c + 1 - p_default.n) \
        * oracle_gamma((p_default.c + 1) / 2.0)
    vals = []
    for R in np.geomspace(0.05, 0.5, 7):
        I, D, N = parabolic_IDN(u, float(R))
        assert I == 0.0
        assert N == 0.0
        assert D == pytest.approx(closed, rel=1e-8)
        vals.append(D)
    # constant in R to 1e-8 relative
    assert max(vals) - min(vals) <= 1e-8 * max(vals)


def test_unit_caloric_identity_and_bounds(p_default):
    u = UnitCaloric(p_default)
    assert check_ID_relation(u, 0.2, 2e-4) <= 1e-9
    grid = np.geomspace(0.05, 0.5, 10)
    defect, C = check_N_bound(u, grid)
    assert defect == 0.0
    assert C == 0.0
    fit = check_D_lower(u, grid)
    assert fit.slope == pytest.approx(0.0, abs=1e-7)


# ---------------------------------------------------------------------------
# separated modes
# ---------------------------------------------------------------------------


def test_mode_caloric_reduction_matches_product_quadrature(mode_caloric,
                                                           p_default):
    for R in (0.02, 0.03, 0.04):
        _, D, _ = parabolic_IDN(mode_caloric, R)
        assert D == pytest.approx(oracle_D_2d(mode_caloric, R, p_default),
                                  rel=1e-6)


def test_mode_caloric_N_nonnegative(mode_caloric):
    for R in (0.01, 0.02, 0.05):
        I, D, N = parabolic_IDN(mode_caloric, R)
        assert I >= 0.0 and D > 0.0 and N >= 0.0


def test_parabolic_scan_rows(mode_caloric):
    grid = np.geomspace(0.01, 0.05, 8)
    scan = parabolic_scan(mode_caloric, grid)
    assert scan.kind == "parabolic"
    ratio = scan.I / scan.ED
    assert np.max(np.abs(scan.UN - ratio)) <= 1e-12 * np.max(np.abs(ratio))


def test_parabolic_csv(tmp_path, mode_caloric):
    scan = parabolic_scan(mode_caloric, np.geomspace(0.01, 0.05, 8))
    path = tmp_path / "scan.csv"
    scan.to_csv(path)
    assert path.read_text().splitlines()[0] == "R,I,D,N"


# ---------------------------------------------------------------------------
# identity: I = (R/4) D'
# ---------------------------------------------------------------------------


def test_ID_relation_single_eigenmode(pairs8_rout2, p_default):
    from hornlab import make_caloric_series
    single = make_caloric_series(pairs8_rout2[:1], [1.0], t_min=0.05)
    R = 0.3
    d1 = check_ID_relation(single, R, 1e-3 * R)
    d2 = check_ID_relation(single, R, 5e-4 * R)
    assert d1 <= 1e-4
    assert d1 / d2 == pytest.approx(4.0, abs=0.7)


def test_ID_relation_two_mode(series2):
    R = 0.3
    d1 = check_ID_relation(series2, R, 1e-3 * R)
    d2 = check_ID_relation(series2, R, 5e-4 * R)
    assert d1 <= 1e-4
    assert d1 / d2 == pytest.approx(4.0, abs=0.7)


def test_ID_relation_rejects_bad_h(series2):
    with pytest.raises(DomainValidationError):
        check_ID_relation(series2, 0.1, 0.2)


# ---------------------------------------------------------------------------
# N and D bounds on series states
# ---------------------------------------------------------------------------


def test_N_bound_series(series2, p_default):
    grid = np.geomspace(0.05, 0.5, 10)
    defect, C = check_N_bound(series2, grid)
    assert defect <= 1e-3
    assert 0 < C < 20.0
    # N R^(2eps) bounded across the decade
    scan = parabolic_scan(series2, grid)
    vals = scan.UN * grid ** (2 * p_default.eps)
    assert np.all(np.isfinite(vals)) and np.all(vals > 0)


def test_N_bound_single_lowest_mode(pairs8_rout2, p_default):
    # the lowest mode alone: N R^(2eps) bounded across a decade of scales
    from hornlab import make_caloric_series
    single = make_caloric_series(pairs8_rout2[:1], [1.0], t_min=0.002)
    grid = np.geomspace(0.05, 0.5, 10)
    defect, C = check_N_bound(single, grid)
    assert defect <= 1e-6
    assert math.isfinite(C) and C > 0


def test_D_lower_series(series2):
    grid = np.geomspace(0.02, 0.2, 10)
    fit = check_D_lower(series2, grid)
    scan = parabolic_scan(series2, grid)
    rng = np.log(scan.ED).max() - np.log(scan.ED).min()
    assert fit.slope >= 0.0
    assert fit.max_residual <= 0.10 * rng
    # slope stable under grid refinement
    fit2 = check_D_lower(series2, np.geomspace(0.02, 0.2, 20))
    assert abs(fit2.slope - fit.slope) <= 0.1 * abs(fit.slope)


def test_parabolic_IDN_rejects_bad_R(series2):
    with pytest.raises(DomainValidationError):
        parabolic_IDN(series2, -0.1)

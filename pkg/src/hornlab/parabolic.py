"""Parabolic frequency functionals against the backward Gaussian weight.

The weight is the explicit tip-centred kernel

    log G(r, t) = -((c + 1)/2) log(-t) + r^2 / (4 t),        t < 0,

whose exponent (c+1)/2 makes the total weighted mass of the horn exactly
scale-free: for u == 1,

    D(R) = area(S^{n-1}) 2^(c+1-n) Gamma((c+1)/2),   independent of R.

On backward time slices t = -R^2 the three quantities are

    I(R) = R^2 int |grad u|^2 G dm,   D(R) = int u^2 G dm,   N = I/D,

reduced to radial quadrature for separated caloric states.  Slice
integrands are assembled in log space: an eigenmode carries exp(+nu R^2)
on backward slices, and near the tip the state itself is log-represented.

Caloric states plug in through a small duck-typed surface: attributes
params, sphere_index, sphere_factor, r_support, and a method
slice_log(r, t) -> (sign_F, log|F|, sign_Fr, log|Fr|) for arrays r.
"""

import math
from dataclasses import dataclass

import numpy as np

from .elliptic import FrequencyScan, _KIND_PARABOLIC
from .errors import ConsistencyError, DomainValidationError
from .geometry import sphere_area, sphere_eigenvalue
from .numerics import fit_line, quad_adaptive_err

_LOG_FLOOR = -745.0  # below exp() underflow


@dataclass(frozen=True)
class BackwardKernel:
    """Backward Gaussian weight centred at the tip at time 0."""

    params: object

    @property
    def exponent(self):
        return (self.params.c + 1.0) / 2.0


def kernel_log(g, r, t):
    """log G(r, t) = -exponent log(-t) + r^2/(4t); needs t < 0."""
    if not t < 0:
        raise DomainValidationError(f"kernel_log needs t < 0, got {t}")
    if np.any(np.asarray(r) < 0):
        raise DomainValidationError("kernel_log needs r >= 0")
    return -g.exponent * math.log(-t) + np.asarray(r) ** 2 / (4.0 * t)


# ---------------------------------------------------------------------------
# Caloric states
# ---------------------------------------------------------------------------


class UnitCaloric:
    """The literal caloric function u == 1 on the infinite horn."""

    def __init__(self, params):
        self.params = params
        self.sphere_index = 0
        self.sphere_factor = sphere_area(params.n)
        self.r_support = (0.0, math.inf)

    def slice_log(self, r, t):
        r = np.asarray(r, dtype=float)
        z = np.zeros_like(r)
        return np.ones_like(r), z, z, np.full_like(r, -np.inf)


class ModeCaloric:
    """Caloric extension u = exp(-mu t) f_i(r) phi_i of a ModeState."""

    def __init__(self, state):
        self.state = state
        self.params = state.params
        self.sphere_index = state.i
        self.sphere_factor = 1.0
        self.r_support = state.domain

    def slice_log(self, r, t):
        r = np.asarray(r, dtype=float)
        sign, lm, ld = self.state.radial_log(r)
        shift = -self.state.mu * t
        with np.errstate(divide="ignore", invalid="ignore"):
            log_fr = lm + np.log(np.abs(ld)) + shift
        sign_fr = sign * np.sign(ld)
        return sign, lm + shift, sign_fr, log_fr


# ---------------------------------------------------------------------------
# Slice quadrature
# ---------------------------------------------------------------------------


def _slice_bounds(u, R):
    lo, hi = u.r_support
    if math.isinf(hi):
        hi = 45.0 * R  # Gaussian tail beyond is < exp(-500) of the peak
    lo = max(lo, 1e-9 * hi)
    return lo, hi


def _log_quad(fn_log, lo, hi, tol):
    """integral of exp(fn_log) with an exp-shift; returns (log value, shift)."""
    probe = np.linspace(lo, hi, 257)
    L = fn_log(probe)
    shift = float(np.max(L))
    if not np.isfinite(shift) or shift < _LOG_FLOOR:
        return -math.inf
    val, _ = quad_adaptive_err(
        lambda r: math.exp(min(fn_log(np.array([r]))[0] - shift, 50.0)),
        lo, hi, tol)
    if val <= 0:
        return -math.inf
    return shift + math.log(val)


def parabolic_IDN(u, R, tol=1e-12):
    """(I, D, N) on the backward slice t = -R^2.

    Radial quadrature against w(r) exp(log G); N = I/D exactly as computed.
    D = 0 is an error.
    """
    if not R > 0:
        raise DomainValidationError("parabolic_IDN needs R > 0")
    p = u.params
    kern = BackwardKernel(p)
    t = -R * R
    mu_i = sphere_eigenvalue(p.n, u.sphere_index)
    lo, hi = _slice_bounds(u, R)
    wlog_c = (1 - p.n) * math.log(2.0)

    def d_log(r):
        sF, lF, _, _ = u.slice_log(r, t)
        return 2.0 * lF + kernel_log(kern, r, t) + wlog_c + p.c * np.log(r)

    def i_log(r):
        # log of (|Fr|^2 + 4 mu_i r^(-2-2eps) |F|^2) G w, exp-shifted per point
        _, lF, _, lFr = u.slice_log(r, t)
        ang = 4.0 * mu_i * r ** (-2.0 - 2.0 * p.eps) if mu_i > 0 \
            else np.zeros_like(r)
        m = np.maximum(lF, lFr)
        dead = ~np.isfinite(m)
        m_safe = np.where(dead, 0.0, m)
        with np.errstate(divide="ignore", invalid="ignore"):
            total = np.exp(2.0 * np.where(dead, -np.inf, lFr - m_safe)) \
                + ang * np.exp(2.0 * np.where(dead, -np.inf, lF - m_safe))
            out = 2.0 * m_safe + np.log(total) \
                + kernel_log(kern, r, t) + wlog_c + p.c * np.log(r)
        return np.where(dead | (total == 0.0), -np.inf, out)

    logD = _log_quad(d_log, lo, hi, tol)
    if logD == -math.inf:
        raise ConsistencyError(f"D vanishes on the slice R = {R}")
    D = u.sphere_factor * math.exp(logD)
    logI = _log_quad(i_log, lo, hi, tol)
    I = 0.0 if logI == -math.inf else R * R * u.sphere_factor * math.exp(logI)
    return I, D, I / D


def parabolic_scan(u, R_grid, tol=1e-12):
    """Scan rows (R, I, D, N) over increasing scales."""
    R_grid = np.asarray(R_grid, dtype=float)
    if R_grid.size < 1 or np.any(np.diff(R_grid) <= 0):
        raise DomainValidationError("R_grid must be strictly increasing")
    rows = [parabolic_IDN(u, R, tol) for R in R_grid]
    I = np.array([r[0] for r in rows])
    D = np.array([r[1] for r in rows])
    Nn = np.array([r[2] for r in rows])
    return FrequencyScan(kind=_KIND_PARABOLIC, scale=R_grid, I=I, ED=D, UN=Nn)


# ---------------------------------------------------------------------------
# Identity and bound checks
# ---------------------------------------------------------------------------


def check_ID_relation(u, R, h, tol=1e-12):
    """Relative defect of I(R) = (R/4) D'(R) with central differences in R.

    The defect is relative to the identity's magnitude (backward slices
    carry exp(2 nu R^2) factors, so an absolute defect would be meaningless
    across states), floored at the slice-mass scale D/4 so that states with
    both sides at quadrature-noise level (u == 1 has D constant and I == 0)
    report ~0 instead of noise divided by itself.
    """
    if not 0 < h < R:
        raise DomainValidationError("check_ID_relation needs 0 < h < R")
    I, _, _ = parabolic_IDN(u, R, tol)
    _, Dp, _ = parabolic_IDN(u, R + h, tol)
    _, Dm, _ = parabolic_IDN(u, R - h, tol)
    fd = (R / 4.0) * (Dp - Dm) / (2.0 * h)
    scale = max(abs(I), abs(fd), (abs(Dp) + abs(Dm)) / 8.0)
    if scale == 0.0:
        return 0.0
    return abs(I - fd) / scale


def check_N_bound(u, R_grid, tol=1e-12, scan=None):
    """Discrete check of (log N)'(R) >= -2 eps / R across a scan.

    Returns (defect, C): defect is the largest violation of
    log N(R_{k+1}) - log N(R_k) >= -2 eps (log R_{k+1} - log R_k),
    C = max N(R) R^(2eps).  A state with N == 0 everywhere (u == 1)
    passes trivially with C = 0; N = 0 at isolated grid points is an error.
    """
    if scan is None:
        scan = parabolic_scan(u, R_grid, tol)
    if scan.scale.size < 3:
        raise DomainValidationError("check_N_bound needs >= 3 grid points")
    eps = u.params.eps
    Nn = scan.UN
    if np.all(Nn == 0.0):
        return 0.0, 0.0
    if np.any(Nn <= 0.0):
        raise ConsistencyError("N vanishes at some grid points")
    dlogN = np.diff(np.log(Nn))
    dlogR = np.diff(np.log(scan.scale))
    defect = float(np.max(np.concatenate([[0.0], -2.0 * eps * dlogR - dlogN])))
    C = float(np.max(Nn * scan.scale ** (2.0 * eps)))
    return defect, C


def check_D_lower(u, R_grid, tol=1e-12, scan=None):
    """Fit of log D against 1 - (R/R_top)^(-2eps).

    A non-negative slope certifies D decays no faster than
    exp(-C R^(-2eps)) toward small scales.
    """
    if scan is None:
        scan = parabolic_scan(u, R_grid, tol)
    if scan.scale.size < 8:
        raise DomainValidationError("check_D_lower needs >= 8 grid points")
    eps = u.params.eps
    x = 1.0 - (scan.scale / scan.scale[-1]) ** (-2.0 * eps)
    return fit_line(x, np.log(scan.ED))

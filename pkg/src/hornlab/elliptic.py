"""Elliptic frequency functionals on the horn.

For a separated state u = f(r) phi_i(theta) with unit spherical L^2 factor
and L u = lam u (lam = -mu <= 0 in the convention fixed here), the three
scale-invariant quantities reduce to radial form:

    I(r) = r^(1-n) w(r) f(r)^2
    E(r) = r^(2-n) int_0^r ( f'^2 + 4 mu_i s^(-2-2eps) f^2 + lam f^2 ) w ds
         = r^(2-n) w(r) f(r) f'(r)          (boundary form)
    U(r) = E(r) / I(r)

Both routes to E are computed at every evaluation and must agree; a
mismatch signals quadrature or profile inaccuracy and aborts rather than
silently propagating.  The exact logarithmic-derivative identity

    r (log I)'(r) - 2 U(r) = c - n + 1

is checked in this scale-invariant form (the identity divided by 1/r),
against central differences of log I on the scan grid.
"""

import math
from dataclasses import dataclass

import numpy as np

from .artifacts import write_csv
from .errors import ConsistencyError, DomainValidationError
from .geometry import measure_weight_log, sphere_eigenvalue
from .modes import decay_exponent_fit, radial_mode_zero
from .numerics import bessel_j, fit_line, quad_adaptive_err

_KIND_ELLIPTIC = "elliptic"
_KIND_PARABOLIC = "parabolic"


# ---------------------------------------------------------------------------
# Mode states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModeState:
    """One separated solution u = f_i(r) phi_i(theta).

    kind: "profile" (decaying tip branch, i >= 1), "bessel" (bounded radial
    branch, i = 0, mu > 0) or "constant" (f == 1, i = 0, mu = 0).
    domain is the radial window on which the state may be evaluated.
    """

    params: object
    i: int
    mu: float
    kind: str
    profile: object
    domain: tuple

    @property
    def lam(self):
        """Sign convention L u = lam u with lam = -mu."""
        return -self.mu

    @property
    def mu_i(self):
        return sphere_eigenvalue(self.params.n, self.i)

    def radial_log(self, r):
        """(sign, log|f|, d log|f|/dr) at radii r (array)."""
        r = np.asarray(r, dtype=float)
        if self.kind == "constant":
            z = np.zeros_like(r)
            return np.ones_like(r), z, z
        if self.kind == "bessel":
            p = self.params
            nu = (p.c - 1.0) / 2.0
            x = r * math.sqrt(self.mu)
            vals = np.array([radial_mode_zero(p, self.mu, rr) for rr in r])
            sign = np.sign(vals)
            with np.errstate(divide="ignore"):
                lm = np.log(np.abs(vals))
            # f'(r) = -mu^((nu+1)/2) x^-nu J_{nu+1}(x); dlog = f'/f
            der = np.array([
                -math.sqrt(self.mu) * bessel_j(nu + 1.0, xx) /
                bessel_j(nu, xx) if xx > 0 else 0.0 for xx in x])
            return sign, lm, der
        return self.profile.eval_log(r)


def constant_state(p, domain):
    """f == 1, i = 0, mu = 0 (harmonic)."""
    _check_domain(domain)
    return ModeState(params=p, i=0, mu=0.0, kind="constant",
                     profile=None, domain=(float(domain[0]), float(domain[1])))


def bessel_state(p, mu, domain):
    """Bounded radial branch, i = 0, mu > 0."""
    _check_domain(domain)
    if not mu > 0:
        raise DomainValidationError("bessel_state needs mu > 0")
    return ModeState(params=p, i=0, mu=float(mu), kind="bessel",
                     profile=None, domain=(float(domain[0]), float(domain[1])))


def profile_state(profile, domain=None):
    """State carried by a tip RadialProfile (i >= 1)."""
    if domain is None:
        domain = (profile.r_min, profile.r_max)
    _check_domain(domain)
    if domain[0] < profile.r_min * (1 - 1e-12) or \
            domain[1] > profile.r_max * (1 + 1e-12):
        raise DomainValidationError(
            f"domain {domain} not contained in the profile range "
            f"[{profile.r_min}, {profile.r_max}]")
    return ModeState(params=profile.params, i=profile.i, mu=profile.mu,
                     kind="profile", profile=profile,
                     domain=(float(domain[0]), float(domain[1])))


def _check_domain(domain):
    if not (len(domain) == 2 and 0 < domain[0] < domain[1]):
        raise DomainValidationError(f"invalid radial domain {domain}")


# ---------------------------------------------------------------------------
# Frequency scan container
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FrequencyScan:
    """Rows (scale, I, E-or-D, U-or-N) of a frequency scan."""

    kind: str
    scale: np.ndarray
    I: np.ndarray
    ED: np.ndarray
    UN: np.ndarray

    def __post_init__(self):
        sc = np.asarray(self.scale, dtype=float)
        if sc.size < 1 or np.any(np.diff(sc) <= 0):
            raise DomainValidationError("scan scales must be strictly increasing")
        # row-exact ratio invariant: U = E/I (elliptic), N = I/D (parabolic)
        if self.kind == _KIND_ELLIPTIC:
            num, den = self.ED, self.I
        else:
            num, den = self.I, self.ED
        safe = np.where(den == 0, 1.0, den)
        ref = np.where(den == 0, 0.0, num / safe)
        if np.any(np.abs(self.UN - ref) >
                  1e-12 * np.maximum(np.abs(ref), 1e-300)):
            raise ConsistencyError("scan ratio column is not row-exact")

    @property
    def header(self):
        return ["r", "I", "E", "U"] if self.kind == _KIND_ELLIPTIC \
            else ["R", "I", "D", "N"]

    def to_csv(self, path):
        rows = zip(self.scale.tolist(), self.I.tolist(),
                   self.ED.tolist(), self.UN.tolist())
        write_csv(path, self.header, rows)


# ---------------------------------------------------------------------------
# I, E, U
# ---------------------------------------------------------------------------


def elliptic_I(state, r):
    """Boundary mass I(r) = r^(1-n) w(r) f(r)^2 (log-space assembly)."""
    _check_in_domain(state, r)
    p = state.params
    sign, lm, _ = state.radial_log(np.array([r]))
    if sign[0] == 0 or not np.isfinite(lm[0]):
        return 0.0
    return math.exp((1 - p.n) * math.log(r) + measure_weight_log(p, r)
                    + 2.0 * lm[0])


def _energy_density_log(state, r):
    """log of (f'^2 + 4 mu_i r^(-2-2eps) f^2 + lam f^2) w(r), plus its sign."""
    p = state.params
    sign, lm, ld = state.radial_log(r)
    ang = 4.0 * state.mu_i * r ** (-2.0 - 2.0 * p.eps) \
        if state.mu_i > 0 else np.zeros_like(r)
    bracket = ld ** 2 + ang + state.lam
    wlog = (1 - p.n) * math.log(2.0) + p.c * np.log(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        out_log = 2.0 * lm + wlog + np.log(np.abs(bracket))
    out_sign = np.where(bracket == 0, 0.0, np.sign(bracket))
    out_sign = np.where(sign == 0, 0.0, out_sign)
    out_log = np.where(sign == 0, -np.inf, out_log)
    return out_sign, out_log


def _abs_energy_density_log(state, r):
    """Same with |lam|: positive envelope used as the comparison scale."""
    p = state.params
    _, lm, ld = state.radial_log(r)
    ang = 4.0 * state.mu_i * r ** (-2.0 - 2.0 * p.eps) \
        if state.mu_i > 0 else np.zeros_like(r)
    bracket = ld ** 2 + ang + abs(state.lam)
    wlog = (1 - p.n) * math.log(2.0) + p.c * np.log(r)
    return 2.0 * lm + wlog + np.log(bracket)


def _bulk_integral(state, r_lo, r_hi, tol):
    """int_{r_lo}^{r_hi} (f'^2 + V f^2 + lam f^2) w ds, exp-shifted."""
    if r_hi <= r_lo:
        return 0.0
    probe = np.linspace(max(r_lo, 1e-9 * r_hi), r_hi, 65)
    shift = float(np.max(_abs_energy_density_log(state, probe)))
    if not np.isfinite(shift):
        return 0.0

    def fn(r):
        s, L = _energy_density_log(state, np.array([r]))
        if s[0] == 0:
            return 0.0
        return s[0] * math.exp(L[0] - shift)

    val, _ = quad_adaptive_err(fn, r_lo, r_hi, tol)
    return val * math.exp(shift)


def _tip_tail_bound(state):
    """Certified bound on the energy integral below the profile window.

    Uses the fitted decay law of log|f| in r^-eps: below r_min the density
    is dominated by f(r_min)^2 w(r_min) r_min^(1+eps) (dlog^2 + V + |lam|)
    / (2 |slope| eps).
    """
    if state.kind != "profile":
        return 0.0
    prof = state.profile
    fit = decay_exponent_fit(prof)
    if fit.slope >= 0:
        raise ConsistencyError("profile decay fit has non-negative slope")
    r0 = prof.r_min
    env = float(_abs_energy_density_log(state, np.array([r0]))[0])
    return math.exp(env) * r0 ** (1.0 + state.params.eps) \
        / (2.0 * abs(fit.slope) * state.params.eps)


def elliptic_E(state, r, tol=1e-10):
    """Energy E(r), bulk form, cross-validated against the boundary form.

    The two representations must agree to 1e-6 relative to the positive
    energy envelope; disagreement raises ConsistencyError.
    """
    _check_in_domain(state, r)
    E_bulk, E_bdry, scale = _E_both(state, r, tol)
    if abs(E_bulk - E_bdry) > 1e-6 * max(scale, abs(E_bulk), abs(E_bdry)):
        raise ConsistencyError(
            f"bulk/boundary energy mismatch at r={r}: {E_bulk} vs {E_bdry}")
    return E_bulk


def _E_boundary(state, r):
    p = state.params
    sign, lm, ld = state.radial_log(np.array([r]))
    if sign[0] == 0:
        return 0.0
    # r^(2-n) w f f' = r^(2-n) w f^2 dlog
    return ld[0] * math.exp((2 - p.n) * math.log(r)
                            + measure_weight_log(p, r) + 2.0 * lm[0])


def _E_both(state, r, tol):
    p = state.params
    if state.kind == "constant":
        return 0.0, 0.0, 0.0
    r_lo = state.profile.r_min if state.kind == "profile" else 0.0
    tail = _tip_tail_bound(state)
    bulk = _bulk_integral(state, r_lo, r, tol)
    if tail > max(1e-9 * abs(bulk), 1e-300):
        raise ConsistencyError(
            f"uncontrolled tip tail below the profile window: {tail}")
    pref = math.exp((2 - p.n) * math.log(r))
    scale = pref * _bulk_abs_scale(state, r_lo, r)
    return pref * bulk, _E_boundary(state, r), scale


def _bulk_abs_scale(state, r_lo, r_hi):
    probe = np.linspace(max(r_lo, 1e-9 * r_hi), r_hi, 65)
    L = _abs_energy_density_log(state, probe)
    m = float(np.max(L))
    if not np.isfinite(m):
        return 0.0
    return math.exp(m) * (r_hi - r_lo)


def _check_in_domain(state, r):
    lo, hi = state.domain
    if not (lo * (1 - 1e-12) <= r <= hi * (1 + 1e-12)):
        raise DomainValidationError(
            f"radius {r} outside the state domain [{lo}, {hi}]")


def elliptic_scan(state, r_grid, tol=1e-10):
    """Scan rows (r, I, E, U); E accumulated segment-by-segment (bulk form)
    with the boundary form cross-checked at every row.

    A nodal sphere (I = 0) on the grid aborts with the offending radius:
    U is genuinely singular there.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.size < 1 or np.any(np.diff(r_grid) <= 0):
        raise DomainValidationError("r_grid must be strictly increasing")
    _check_in_domain(state, r_grid[0])
    _check_in_domain(state, r_grid[-1])
    p = state.params

    if state.kind == "constant":
        I = np.array([elliptic_I(state, r) for r in r_grid])
        E = np.zeros_like(I)
        U = np.zeros_like(I)
        return FrequencyScan(kind=_KIND_ELLIPTIC, scale=r_grid, I=I, ED=E, UN=U)

    r_lo = state.profile.r_min if state.kind == "profile" else 0.0
    tail = _tip_tail_bound(state)
    segs = np.concatenate([[r_lo], r_grid])
    cum = 0.0
    I_col, E_col, U_col = [], [], []
    seg_tol = tol / max(1, r_grid.size)
    for k, r in enumerate(r_grid):
        cum += _bulk_integral(state, segs[k], segs[k + 1], seg_tol)
        Ir = elliptic_I(state, r)
        sgn, _, ld = state.radial_log(np.array([r]))
        # a grid point within rounding distance of a node: the logarithmic
        # derivative blows up like 1/distance and U is genuinely singular
        if Ir == 0.0 or sgn[0] == 0 or abs(r * ld[0]) > 1e12:
            raise ConsistencyError(f"nodal sphere: I vanishes at r = {r}")
        pref = math.exp((2 - p.n) * math.log(r))
        E_bulk = pref * cum
        E_bdry = _E_boundary(state, r)
        scale = pref * _bulk_abs_scale(state, r_lo, r)
        if abs(E_bulk - E_bdry) > 1e-6 * max(scale, abs(E_bulk), abs(E_bdry)):
            raise ConsistencyError(
                f"bulk/boundary energy mismatch at r={r}: {E_bulk} vs {E_bdry}")
        if tail > max(1e-9 * abs(cum), 1e-300):
            raise ConsistencyError("uncontrolled tip tail in scan")
        I_col.append(Ir)
        E_col.append(E_bulk)
        U_col.append(E_bulk / Ir)
    return FrequencyScan(kind=_KIND_ELLIPTIC, scale=r_grid,
                         I=np.array(I_col), ED=np.array(E_col),
                         UN=np.array(U_col))


# ---------------------------------------------------------------------------
# Identity and bound checks
# ---------------------------------------------------------------------------


def _dlog_central(x, y):
    """3-point first derivative of y(x) at the interior points (order 2)."""
    hm = x[1:-1] - x[:-2]
    hp = x[2:] - x[1:-1]
    return (y[2:] * hm / (hp * (hm + hp))
            + y[1:-1] * (hp - hm) / (hm * hp)
            - y[:-2] * hp / (hm * (hm + hp)))


def check_logI_identity(state, scan):
    """Max defect of the scale-invariant identity r (log I)' - 2U = c - n + 1.

    (log I)' is formed by central differences in log r on the scan grid, so
    the defect is pure differencing error, O(h^2) on smooth scans, and
    vanishes identically for power-law I.
    """
    if scan.scale.size < 3:
        raise DomainValidationError("check_logI_identity needs >= 3 rows")
    p = state.params
    x = np.log(scan.scale)
    logI = np.log(scan.I)
    d = _dlog_central(x, logI)
    defect = np.abs(d - 2.0 * scan.UN[1:-1] - (p.c - p.n + 1.0))
    return float(np.max(defect))


def check_U_growth(state, scan):
    """Discrete check of (r^(2eps) U)' >= lam r^(1+2eps) between rows.

    Returns (defect, C): defect is the largest violation (0 when the
    inequality holds everywhere), C = max U(r) r^(2eps) over rows, the
    empirical constant in U(r) <= C r^(-2eps).
    """
    if scan.scale.size < 3:
        raise DomainValidationError("check_U_growth needs >= 3 rows")
    eps = state.params.eps
    lam = state.lam
    r = scan.scale
    g = r ** (2.0 * eps) * scan.UN
    rhs = lam * np.diff(r ** (2.0 + 2.0 * eps)) / (2.0 + 2.0 * eps)
    defect = float(np.max(np.concatenate([[0.0], rhs - np.diff(g)])))
    C = float(np.max(g))
    return defect, C


def check_I_lower(state, scan):
    """Fit of log I against 1 - (r/r_top)^(-2eps).

    A non-negative slope certifies that I decays no faster than
    exp(-C r^(-2eps)); the top of the scan range stands in as the
    reference scale.
    """
    if scan.scale.size < 8:
        raise DomainValidationError("check_I_lower needs >= 8 rows")
    eps = state.params.eps
    x = 1.0 - (scan.scale / scan.scale[-1]) ** (-2.0 * eps)
    return fit_line(x, np.log(scan.I))

"""Radial mode solutions near the horn tip.

A separated eigenmode u = f_i(r) phi_i(theta) with L u = -mu u satisfies

    f'' + (c/r) f' - 4 mu_i r^(-2-2eps) f + mu f = 0.

Substituting s = r^(-eps) and peeling off the power s^beta with
beta = (c-1-eps)/(2 eps) brings this to normal form on the tip side,

    k''(s) = ( B s^-2 + rho^2/4 * 4 ... ) k(s)
           = ( A s^-2 + 4 mu_i / eps^2 - (mu/eps^2) s^(-2/eps - 2) ) k(s),

with A = beta (beta + 1).  Past the threshold abscissa s = r_mu the bracket
A s^-2 - (mu/eps^2) s^(-2/eps-2) lies in [0, 1], so solutions behave like
exp(+-rho s) with rho = 2 sqrt(mu_i)/eps up to explicit two-sided bounds.
The growing branch k1 is integrated forward from unit Cauchy data at r_mu;
the decaying branch is the reduction-of-order solution

    k2(s) = k1(s) * integral_s^inf k1(t)^-2 dt,

whose tail beyond the integration window is bounded analytically from the
k1 sandwich and added with a certified remainder.  The remaining integral
is accumulated from the far end in log space: evaluating k1 * (J_tot - J(s))
directly would cancel catastrophically once the remaining mass drops below
resolution, about three e-foldings past r_mu.

Everything tip-side is represented as (sign, log-magnitude): the physical
profile f_i(r) = k2(r^-eps) r^(-(c-1-eps)/2) underflows double precision
long before r = 0.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .artifacts import write_csv
from .errors import ConsistencyError, DomainValidationError
from .geometry import measure_weight_log, sphere_eigenvalue
from .numerics import fit_line, integrate_ode, quad_adaptive_err

_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def tip_exponent(p):
    """beta = (c - 1 - eps)/(2 eps), the power split between g and k."""
    return (p.c - 1.0 - p.eps) / (2.0 * p.eps)


def tip_rate(p, i):
    """rho = sqrt(4 mu_i / eps^2), the exponential rate of the tip branches."""
    mu_i = sphere_eigenvalue(p.n, i)
    return 2.0 * math.sqrt(mu_i) / p.eps


def r_mu(p, mu):
    """Threshold abscissa past which the normal-form bracket lies in [0, 1].

    r_mu = max( sqrt(A),  (A eps^2 / mu)^(-eps/2) ),  A = beta (beta + 1);
    mu = 0 drops the second branch.
    """
    if not mu >= 0:
        raise DomainValidationError(f"r_mu needs mu >= 0, got {mu}")
    beta = tip_exponent(p)
    A = beta * (beta + 1.0)
    first = math.sqrt(A)
    if mu == 0.0:
        return first
    return max(first, (A * p.eps * p.eps / mu) ** (-p.eps / 2.0))


def tip_bracket(p, mu, s):
    """A s^-2 - (mu/eps^2) s^(-2/eps-2); in [0, 1] for s >= r_mu."""
    beta = tip_exponent(p)
    A = beta * (beta + 1.0)
    return A * s ** -2.0 - (mu / p.eps ** 2) * s ** (-2.0 / p.eps - 2.0)


def _q_factory(p, i, mu):
    beta = tip_exponent(p)
    A = beta * (beta + 1.0)
    rho2 = 4.0 * sphere_eigenvalue(p.n, i) / p.eps ** 2
    inv2 = mu / p.eps ** 2
    expo = -2.0 / p.eps - 2.0

    def q(s):
        return A * s ** -2.0 + rho2 - inv2 * s ** expo

    return q


def _verify_k1_sandwich(p, i, mu, sol, s_lo, s_hi):
    rho = tip_rate(p, i)
    if rho < 1.0:
        return  # the lower comparison bound requires rho >= 1
    ss = np.linspace(s_lo, s_hi, 65)
    k = sol.states(ss)[0]
    up = np.exp((rho + 1.0) * (ss - s_lo))
    lo = np.exp(rho * (ss - s_lo)) / rho
    slack = 1.0 + 1e-9
    if not (np.all(k <= up * slack) and np.all(k >= lo / slack)):
        raise ConsistencyError(
            "growing tip branch violates its two-sided exponential bounds")


def solve_k1(p, i, mu, s_max, tol=1e-12):
    """Growing branch of the normal-form tip equation on [r_mu, s_max].

    Unit Cauchy data k = k' = 1 at s = r_mu; the solution is verified
    against its two-sided exponential bounds on construction.
    """
    if not i >= 1:
        raise DomainValidationError("solve_k1 needs i >= 1 (mu_i > 0)")
    s_lo = r_mu(p, mu)
    if not s_max > s_lo:
        raise DomainValidationError(
            f"s_max must exceed r_mu = {s_lo}, got {s_max}")
    q = _q_factory(p, i, mu)

    def fld(s, y):
        return [y[1], q(s) * y[0]]

    sol = integrate_ode(fld, (s_lo, s_max), [1.0, 1.0], tol)
    _verify_k1_sandwich(p, i, mu, sol, s_lo, s_max)
    return sol


class TipDecaySolution:
    """Decaying branch k2 on [r_mu, s_max] (DenseSolution-compatible).

    Carries log k2 and its logarithmic derivative on a fine node grid as
    Hermite splines (the Riccati identity provides exact node derivatives),
    plus the certified analytic tail bounds used past the integration
    window.  eval() reproduces linear-space values where they are
    representable.
    """

    def __init__(self, p, i, mu, span, tol, nodes, log_k2, kappa2, q,
                 tail_lo, tail_hi, tail_rel_uncertainty):
        self.params = p
        self.i = i
        self.mu = mu
        self.span = span
        self.tolerance = tol
        self.r_mu = span[0]
        self.rho = tip_rate(p, i)
        self._q = q
        self._nodes = nodes
        self._log_k2 = log_k2
        self._kappa2 = kappa2
        # Hermite data: d/ds log k2 = kappa2, d/ds kappa2 = q - kappa2^2
        self._logspl = CubicHermiteSpline(nodes, log_k2, kappa2)
        self._kapspl = CubicHermiteSpline(nodes, kappa2, q(nodes) - kappa2 ** 2)
        self.tail_lo = tail_lo
        self.tail_hi = tail_hi
        self.tail_rel_uncertainty = tail_rel_uncertainty

    @property
    def value_at_rmu(self):
        return math.exp(self._log_k2[0])

    @property
    def dvalue_at_rmu(self):
        return self._kappa2[0] * math.exp(self._log_k2[0])

    def _check(self, s):
        a, b = self.span
        pad = 1e-12 * max(1.0, abs(b))
        if np.any(np.asarray(s) < a - pad) or np.any(np.asarray(s) > b + pad):
            raise DomainValidationError(
                f"evaluation at s={s} outside span [{a}, {b}]")

    def log_eval(self, s):
        """(log k2, kappa2 = k2'/k2) at s (scalar or array)."""
        self._check(s)
        return self._logspl(s), self._kapspl(s)

    def eval(self, s):
        """((k2, k2'), (k2', k2'')) in linear space."""
        L, kap = self.log_eval(s)
        v = np.exp(L)
        vp = kap * v
        return np.array([v, vp]), np.array([vp, self._q(s) * v])

    def __call__(self, s):
        return self.eval(s)


def solve_k2(p, i, mu, s_max, tol=1e-12, nodes_per_unit=160):
    """Decaying branch on [r_mu, s_max] by reduction of order.

    The k1 integration is extended far enough past s_max that the analytic
    tail bracket contributes a relative uncertainty <= 1e-12 everywhere on
    the returned span; the midpoint of the bracket is added as the tail.
    """
    if not i >= 1:
        raise DomainValidationError("solve_k2 needs i >= 1 (mu_i > 0)")
    s_lo = r_mu(p, mu)
    if not s_max > s_lo:
        raise DomainValidationError(
            f"s_max must exceed r_mu = {s_lo}, got {s_max}")
    rho = tip_rate(p, i)
    span_len = s_max - s_lo
    if rho * span_len > 280.0:
        raise DomainValidationError(
            "requested span exceeds the representable range of the growing "
            f"branch (rho * span = {rho * span_len:.1f} > 280)")
    # extension so the tail bracket is negligible relative to the remaining
    # integral at s_max (worst point of the span)
    delta = (28.0 + math.log(rho * (rho + 1.0)) + 2.0 * span_len) / (2.0 * rho)
    s_ext = s_max + delta
    q = _q_factory(p, i, mu)

    def fld(s, y):
        return [y[1], q(s) * y[0]]

    k1 = integrate_ode(fld, (s_lo, s_ext), [1.0, 1.0], tol)
    _verify_k1_sandwich(p, i, mu, k1, s_lo, s_ext)

    n_nodes = max(400, int(nodes_per_unit * (s_ext - s_lo))) + 1
    nodes = np.linspace(s_lo, s_ext, n_nodes)

    # segment integrals of k1^-2 by fixed Gauss-Legendre, carried as logs
    mids = 0.5 * (nodes[:-1] + nodes[1:])
    halfs = 0.5 * np.diff(nodes)
    pts = mids[:, None] + halfs[:, None] * _GL_X[None, :]
    k1_pts = k1.states(pts.ravel())[0].reshape(pts.shape)
    L = -2.0 * np.log(k1_pts)
    shift = L.max(axis=1)
    seg_log = shift + np.log((np.exp(L - shift[:, None]) * _GL_W[None, :])
                             .sum(axis=1) * halfs)

    # analytic tail bracket past s_ext from the k1 sandwich
    log_tail_hi = math.log(rho / 2.0) - 2.0 * rho * (s_ext - s_lo)
    log_tail_lo = -math.log(2.0 * (rho + 1.0)) - 2.0 * (rho + 1.0) * (s_ext - s_lo)
    log_tail_mid = np.logaddexp(log_tail_hi, log_tail_lo) - math.log(2.0)

    # remaining integral M(s) accumulated from the top: no cancellation
    log_M = np.empty(n_nodes)
    log_M[-1] = log_tail_mid
    for j in range(n_nodes - 2, -1, -1):
        log_M[j] = np.logaddexp(log_M[j + 1], seg_log[j])

    k1_nodes, k1p_nodes = k1.states(nodes)
    log_k1 = np.log(k1_nodes)
    kappa1 = k1p_nodes / k1_nodes
    log_k2 = log_k1 + log_M
    kappa2 = kappa1 - np.exp(-2.0 * log_k1 - log_M)

    keep = nodes <= s_max + 1e-12
    if keep.sum() < 8:
        keep = np.arange(n_nodes) < 8
    # certified relative uncertainty of the added tail at the worst kept node
    idx_top = np.where(keep)[0][-1]
    rel_unc = 0.5 * abs(math.exp(log_tail_hi - log_M[idx_top])
                        - math.exp(log_tail_lo - log_M[idx_top]))
    if rel_unc > 1e-12:
        raise ConsistencyError(
            f"tail bracket uncertainty {rel_unc:.2e} exceeds 1e-12; "
            "extension window too short")

    sol = TipDecaySolution(p, i, mu, (s_lo, s_max), tol,
                           nodes[keep], log_k2[keep], kappa2[keep], q,
                           math.exp(log_tail_lo), math.exp(log_tail_hi),
                           rel_unc)
    _verify_k2_sandwich(sol)
    return sol


def _verify_k2_sandwich(sol):
    rho = sol.rho
    if rho < 1.0:
        return
    s_lo, s_hi = sol.span
    ss = np.linspace(s_lo, s_hi, 65)
    L, _ = sol.log_eval(ss)
    up = math.log(rho / 2.0) + (-rho + 1.0) * (ss - s_lo)
    lo = -math.log(2.0 * (rho ** 2 + rho)) + (-rho - 2.0) * (ss - s_lo)
    slack = 1e-9
    if not (np.all(L <= up + slack) and np.all(L >= lo - slack)):
        raise ConsistencyError(
            "decaying tip branch violates its two-sided exponential bounds")


# ---------------------------------------------------------------------------
# Radial profiles
# ---------------------------------------------------------------------------


@dataclass
class RadialProfile:
    """Underflow-safe radial mode on a grid, with interpolation.

    The grid is carried in the transformed abscissa s = r^-eps (increasing s
    means approaching the tip).  sign / log_mag / log_deriv are per grid
    point; log_deriv is d log|f| / dr.  s_sandwich marks the part of the
    grid (s >= s_sandwich) on which the two-sided tip bounds apply; for
    profiles built from the decaying branch that is the whole grid.
    """

    params: object
    i: int
    mu: float
    s_grid: np.ndarray
    r_grid: np.ndarray
    sign: np.ndarray
    log_mag: np.ndarray
    log_deriv: np.ndarray
    s_sandwich: float
    _eval: object = field(default=None, repr=False)

    @property
    def r_min(self):
        return float(self.r_grid.min())

    @property
    def r_max(self):
        return float(self.r_grid.max())

    def eval_log(self, r):
        """(sign, log|f|, d log|f|/dr) at r, scalar or array."""
        r = np.asarray(r, dtype=float)
        pad = 1e-12 * max(1.0, self.r_max)
        if np.any(r < self.r_min - pad) or np.any(r > self.r_max + pad):
            raise DomainValidationError(
                f"evaluation outside represented range "
                f"[{self.r_min}, {self.r_max}]")
        if self._eval is not None:
            return self._eval(r)
        # fallback: interpolate the stored grid (monotone sign assumed)
        s = r ** (-self.params.eps)
        lm = np.interp(s, self.s_grid, self.log_mag)
        ld = np.interp(s, self.s_grid, self.log_deriv)
        sg = np.interp(s, self.s_grid, self.sign.astype(float))
        return np.sign(sg) + (sg == 0), lm, ld

    def to_csv(self, path):
        order = np.argsort(self.r_grid)
        rows = [(float(self.r_grid[j]), float(self.s_grid[j]),
                 int(self.sign[j]), float(self.log_mag[j]),
                 float(self.log_deriv[j])) for j in order]
        write_csv(path, ["r", "s", "sign", "log_mag", "log_deriv"], rows)


def profile_from_k2(p, i, mu, r_min, n_grid=64, tol=1e-12):
    """Tip profile f_i(r) = k2(r^-eps) r^(-(c-1-eps)/2) on [r_min, r_mu^(-1/eps)].

    Unit overall scale (the free factor cancels in every frequency
    quantity).  Assembled entirely in (sign, log-magnitude) space:

        log f = log k2(s) + beta log s,          s = r^-eps,
        d log f / dr = -(eps s / r) kappa2(s) - (c-1-eps)/(2 r).
    """
    if not i >= 1:
        raise DomainValidationError(
            "the decaying-branch construction needs i >= 1; use the bounded "
            "radial branch radial_mode_zero for i = 0")
    if n_grid < 16:
        raise DomainValidationError("profile_from_k2 needs n_grid >= 16")
    s_lo = r_mu(p, mu)
    r_top = s_lo ** (-1.0 / p.eps)
    if not 0 < r_min < r_top:
        raise DomainValidationError(
            f"r_min must lie in (0, r_mu^(-1/eps)) = (0, {r_top}), got {r_min}")
    beta = tip_exponent(p)
    s_max = r_min ** (-p.eps)
    k2 = solve_k2(p, i, mu, s_max, tol=tol)

    s_grid = np.linspace(s_lo, s_max, n_grid)
    r_grid = s_grid ** (-1.0 / p.eps)
    L, kap = k2.log_eval(s_grid)
    log_mag = L + beta * np.log(s_grid)
    log_der = -(p.eps * s_grid / r_grid) * kap - (p.c - 1.0 - p.eps) / (2.0 * r_grid)

    def _eval(r):
        s = np.asarray(r, dtype=float) ** (-p.eps)
        Ls, ks = k2.log_eval(s)
        lm = Ls + beta * np.log(s)
        ld = -(p.eps * s / r) * ks - (p.c - 1.0 - p.eps) / (2.0 * r)
        return np.ones_like(lm), lm, ld

    return RadialProfile(params=p, i=i, mu=mu, s_grid=s_grid, r_grid=r_grid,
                         sign=np.ones(n_grid, dtype=int), log_mag=log_mag,
                         log_deriv=log_der, s_sandwich=s_lo, _eval=_eval)


def radial_mode_zero(p, mu, r):
    """Bounded radial branch for i = 0: r^((1-c)/2) J_((c-1)/2)(r sqrt(mu)).

    Finite at the tip with limit mu^((c-1)/4) / (2^((c-1)/2) Gamma((c+1)/2)).
    """
    from .numerics import bessel_j, gamma_real
    if not mu > 0:
        raise DomainValidationError("radial_mode_zero needs mu > 0")
    if not r >= 0:
        raise DomainValidationError("radial_mode_zero needs r >= 0")
    nu = (p.c - 1.0) / 2.0
    x = r * math.sqrt(mu)
    limit = mu ** (nu / 2.0) / (2.0 ** nu * gamma_real(nu + 1.0))
    if x < 1e-8:
        return limit * (1.0 - x * x / (4.0 * (nu + 1.0)))
    return bessel_j(nu, x) * r ** (-nu)


def decay_exponent_fit(profile):
    """Least-squares fit of log|f| against r^-eps over the profile grid."""
    if profile.s_grid.size < 8:
        raise DomainValidationError("decay_exponent_fit needs >= 8 grid points")
    return fit_line(profile.s_grid, profile.log_mag)


def normalization_bound(p, i, mu, tol=1e-10):
    """(computed, bound) for the normalizing coefficient 1/||f_i||.

    computed: from log-space quadrature of ||f_i||^2 over the tip region
    (the default window keeps every numerically relevant e-folding).
    bound:    exp((rho + 2) r_mu) * r_mu^((1+eps)/eps), the closed-form
    envelope with its undetermined prefactor set to 1; the ratio of the two
    is reported by callers rather than asserted against a specific constant.
    """
    rho = tip_rate(p, i)
    s_lo = r_mu(p, mu)
    s_hi = s_lo + 10.0 / rho + 5.0
    r_min = s_hi ** (-1.0 / p.eps)
    prof = profile_from_k2(p, i, mu, r_min, n_grid=32, tol=1e-12)

    def log_integrand(r):
        _, lm, _ = prof.eval_log(np.array([r]))
        return float(2.0 * lm[0]) + measure_weight_log(p, r)

    r_top = prof.r_max
    probe = np.linspace(r_min, r_top, 200)
    shift = max(log_integrand(r) for r in probe)

    val, _ = quad_adaptive_err(
        lambda r: math.exp(log_integrand(r) - shift), r_min, r_top, tol)
    norm2 = val * math.exp(shift) if val > 0 else 0.0
    if norm2 <= 0:
        raise ConsistencyError("vanishing norm in normalization_bound")
    computed = 1.0 / math.sqrt(norm2)
    bound = math.exp((rho + 2.0) * s_lo) * s_lo ** ((1.0 + p.eps) / p.eps)
    return computed, bound

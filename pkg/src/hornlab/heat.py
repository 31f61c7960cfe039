"""Dirichlet spectrum of the truncated horn and caloric series built on it.

The horn is capped at r_out with a Dirichlet condition; the radial operator
for spherical index i acts on L^2(w dr) over (0, r_out].  Eigenfunctions
select the decaying branch at the tip (the growing branch is not square
integrable), so shooting anchors the solution with the decaying branch's
logarithmic derivative at the threshold radius and integrates outward.

Eigenvalues are isolated by a parity-corrected oscillation count: the
radial solution starts positive at the tip, so after z sign changes the
boundary value must carry sign (-1)^z; a mismatch means one more zero is
hiding inside the last grid cell.  The corrected count jumps exactly at
the eigenvalues, giving bisection brackets on which the boundary value is
guaranteed to change sign.

Series evaluation, time derivatives and the tail certificate all run in
signed log space; the dropped tail is majorized through the empirical
two-sided eigenvalue growth fit nu_j ~ [C1 j^(2/N), C2 j^2] and a
doubling-block geometric summation (termwise geometric majorants do not
exist for sub-linear exponents j^(2/N); blocks of doubling length are
geometric and certified).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import (ConsistencyError, DomainValidationError,
                     EigenSearchError)
from .geometry import measure_weight_log, sphere_eigenvalue
from .logspace import NEG_INF, logsumexp_signed
from .modes import (RadialProfile, r_mu, solve_k2, tip_exponent, tip_rate)
from .numerics import find_root_bracketed, fit_line, integrate_ode, \
    lgamma_real, quad_adaptive_err


# ---------------------------------------------------------------------------
# Shooting machinery
# ---------------------------------------------------------------------------


def _tip_anchor(p, i, nu, tol):
    """(r_mu, kappa2(r_mu)) for trial eigenvalue nu.

    kappa2(r_mu) = 1 - 1/J_tot with J_tot = int_{r_mu}^inf k1^-2; the short
    integration window plus the analytic tail bracket keeps the relative
    tail error below ~1e-12 of J_tot.
    """
    s_lo = r_mu(p, nu)
    rho = tip_rate(p, i)
    beta = tip_exponent(p)
    A = beta * (beta + 1.0)
    rho2 = 4.0 * sphere_eigenvalue(p.n, i) / p.eps ** 2
    inv2 = nu / p.eps ** 2
    expo = -2.0 / p.eps - 2.0
    s_ext = s_lo + (30.0 + math.log(rho * (rho + 1.0))) / (2.0 * rho) + 0.5

    def fld(s, y):
        q = A * s ** -2.0 + rho2 - inv2 * s ** expo
        return [y[1], q * y[0], 1.0 / (y[0] * y[0])]

    sol = integrate_ode(fld, (s_lo, s_ext), [1.0, 1.0, 0.0], tol)
    _, _, J = sol.eval(s_ext)[0]
    tail_mid = 0.5 * ((rho / 2.0) * math.exp(-2.0 * rho * (s_ext - s_lo))
                      + math.exp(-2.0 * (rho + 1.0) * (s_ext - s_lo))
                      / (2.0 * (rho + 1.0)))
    j_tot = J + tail_mid
    return s_lo, 1.0 - 1.0 / j_tot


def _outer_field(p, i, nu):
    mu_i = sphere_eigenvalue(p.n, i)
    c = p.c
    ee = -2.0 - 2.0 * p.eps

    def fld(r, y):
        return [y[1], -(c / r) * y[1] + (4.0 * mu_i * r ** ee - nu) * y[0]]

    return fld


def _shoot(p, i, nu, r_out, tol):
    """(boundary value, visible zero count, outer dense solution, r_sw)."""
    s_lo, kap2 = _tip_anchor(p, i, nu, tol)
    r_sw = s_lo ** (-1.0 / p.eps)
    dlog = -(p.eps * s_lo / r_sw) * kap2 - (p.c - 1.0 - p.eps) / (2.0 * r_sw)
    sol = integrate_ode(_outer_field(p, i, nu), (r_sw, r_out), [1.0, dlog], tol)
    n_pts = max(400, int(40.0 * math.sqrt(max(nu, 1.0)) * r_out))
    rg = np.linspace(r_sw, r_out, n_pts)[:-1]
    fv = sol.states(rg)[0]
    mx = float(np.max(np.abs(fv)))
    live = fv[np.abs(fv) > 1e-12 * mx]
    zeros = int(np.sum(np.sign(live[:-1]) * np.sign(live[1:]) < 0))
    B = float(sol.states(np.array([r_out]))[0][0])
    return B, zeros, sol, r_sw


def _count_eff(p, i, nu, r_out, tol):
    # parity-corrected zero count; jumps exactly at the eigenvalues
    B, z, _, _ = _shoot(p, i, nu, r_out, tol)
    parity = 1.0 if z % 2 == 0 else -1.0
    return z + (0 if B * parity > 0 else 1)


@dataclass
class EigenPair:
    """One Dirichlet eigenpair on the truncated horn.

    g is L^2(w dr)-normalized over (0, r_out], positive near the tip, and
    satisfies the cap condition |g(r_out)| <= 1e-8 max|g|.
    """

    nu: float
    mode_index: int
    g: RadialProfile
    r_out: float
    zeros: int
    norm_defect: float


def dirichlet_eigenvalues(p, i, r_out, count, tol=1e-12, root_rel=1e-12,
                          budget=400):
    """First `count` eigenvalues of the radial operator, tip-decaying branch
    at 0 and g(r_out) = 0, by oscillation-count bisection plus boundary-value
    root polishing.
    """
    if not i >= 1:
        raise DomainValidationError("dirichlet_eigenvalues needs i >= 1")
    if not count >= 1:
        raise DomainValidationError("dirichlet_eigenvalues needs count >= 1")
    s_lo0 = r_mu(p, 0.0)
    if not r_out > s_lo0 ** (-1.0 / p.eps):
        raise DomainValidationError(
            f"r_out must exceed the tip window top {s_lo0 ** (-1.0 / p.eps)}")
    evals = []
    spent = [0]

    def count_eff(nu):
        spent[0] += 1
        if spent[0] > budget * count:
            raise EigenSearchError(
                f"eigenvalue search exceeded its budget of "
                f"{budget * count} shots while locating index {len(evals) + 1}")
        return _count_eff(p, i, nu, r_out, tol)

    lo = 0.5
    for j in range(1, count + 1):
        hi = max(lo * 1.3, lo + 1.0)
        while count_eff(hi) < j:
            hi *= 1.6
        aa, bb = lo, hi
        while count_eff(aa) != j - 1 or count_eff(bb) != j \
                or (bb - aa) > 0.05 * bb:
            m = 0.5 * (aa + bb)
            if count_eff(m) >= j:
                bb = m
            else:
                aa = m
        nu_j = find_root_bracketed(
            lambda x: _shoot(p, i, x, r_out, tol)[0], aa, bb,
            root_rel * bb)
        evals.append(nu_j)
        lo = nu_j * (1.0 + 1e-9)
    return [_build_pair(p, i, nu, j + 1, r_out, tol)
            for j, nu in enumerate(evals)]


def _build_pair(p, i, nu, j, r_out, tol):
    beta = tip_exponent(p)
    rho = tip_rate(p, i)
    s_lo = r_mu(p, nu)
    r_sw = s_lo ** (-1.0 / p.eps)
    # tip branch over ~40 decay e-foldings; everything below is certified off
    s_tip_max = s_lo + 40.0 / rho + 2.0
    k2 = solve_k2(p, i, nu, s_tip_max, tol=tol)
    log_at_anchor = float(k2.log_eval(s_lo)[0]) + beta * math.log(s_lo)
    kap_anchor = float(k2.log_eval(s_lo)[1])
    dlog_anchor = -(p.eps * s_lo / r_sw) * kap_anchor \
        - (p.c - 1.0 - p.eps) / (2.0 * r_sw)

    sol = integrate_ode(_outer_field(p, i, nu), (r_sw, r_out),
                        [1.0, dlog_anchor], tol)
    n_outer = max(1200, int(120.0 * math.sqrt(max(nu, 1.0)) * r_out))
    r_nodes = np.linspace(r_sw, r_out, n_outer)
    f_nodes, fp_nodes = sol.states(r_nodes)
    fld = _outer_field(p, i, nu)
    fpp_nodes = np.array(fld(r_nodes, [f_nodes, fp_nodes]))[1]

    # L2(w dr) norm: outer part in linear space, tip part in log space
    f_spl = CubicHermiteSpline(r_nodes, f_nodes, fp_nodes)
    fp_spl = CubicHermiteSpline(r_nodes, fp_nodes, fpp_nodes)
    wlog_c = (1 - p.n) * math.log(2.0)

    def outer_sq(r):
        return float(f_spl(r)) ** 2 * math.exp(wlog_c + p.c * math.log(r))

    outer_n, _ = quad_adaptive_err(outer_sq, r_sw, r_out, 1e-12)

    def tip_log_sq(r):
        s = r ** (-p.eps)
        lm = float(k2.log_eval(s)[0]) + beta * math.log(s) - log_at_anchor
        return 2.0 * lm + wlog_c + p.c * math.log(r)

    r_tip_lo = s_tip_max ** (-1.0 / p.eps)
    probe = np.linspace(r_tip_lo, r_sw, 65)
    shift = max(tip_log_sq(r) for r in probe)
    tip_val, _ = quad_adaptive_err(
        lambda r: math.exp(tip_log_sq(r) - shift), r_tip_lo, r_sw, 1e-12)
    tip_n = tip_val * math.exp(shift)
    # below r_tip_lo the density has shed >= 2*40 e-foldings: certified off
    norm = math.sqrt(outer_n + tip_n)
    scale_log = -math.log(norm)

    # assemble the stitched profile
    s_tip_grid = np.linspace(s_lo, s_tip_max, 48)[1:]  # strictly past r_sw
    r_tip_grid = s_tip_grid ** (-1.0 / p.eps)
    Lt, kt = k2.log_eval(s_tip_grid)
    tip_logmag = Lt + beta * np.log(s_tip_grid) - log_at_anchor + scale_log
    tip_dlog = -(p.eps * s_tip_grid / r_tip_grid) * kt \
        - (p.c - 1.0 - p.eps) / (2.0 * r_tip_grid)

    out_sign = np.sign(f_nodes)
    out_sign[-1] = out_sign[-2] if out_sign[-1] == 0 else out_sign[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        out_logmag = np.log(np.abs(f_nodes)) + scale_log
        out_dlog = fp_nodes / f_nodes

    r_grid = np.concatenate([r_tip_grid[::-1], r_nodes[1:]])
    s_grid_all = r_grid ** (-p.eps)
    sign_all = np.concatenate([np.ones(r_tip_grid.size, dtype=int),
                               out_sign[1:].astype(int)])
    logmag_all = np.concatenate([tip_logmag[::-1], out_logmag[1:]])
    dlog_all = np.concatenate([tip_dlog[::-1], out_dlog[1:]])

    order = np.argsort(s_grid_all)

    def _eval(r):
        r = np.atleast_1d(np.asarray(r, dtype=float))
        sgn = np.empty_like(r)
        lm = np.empty_like(r)
        ld = np.empty_like(r)
        tip = r < r_sw
        if np.any(tip):
            s = r[tip] ** (-p.eps)
            L, kap = k2.log_eval(s)
            lm[tip] = L + beta * np.log(s) - log_at_anchor + scale_log
            ld[tip] = -(p.eps * s / r[tip]) * kap \
                - (p.c - 1.0 - p.eps) / (2.0 * r[tip])
            sgn[tip] = 1.0
        if np.any(~tip):
            ro = r[~tip]
            fv = f_spl(ro)
            fpv = fp_spl(ro)
            sgn[~tip] = np.where(fv == 0, 0.0, np.sign(fv))
            with np.errstate(divide="ignore", invalid="ignore"):
                lm[~tip] = np.log(np.abs(fv)) + scale_log
                ld[~tip] = fpv / fv
        return sgn, lm, ld

    g = RadialProfile(params=p, i=i, mu=nu,
                      s_grid=s_grid_all[order], r_grid=r_grid[order],
                      sign=sign_all[order], log_mag=logmag_all[order],
                      log_deriv=dlog_all[order], s_sandwich=s_lo, _eval=_eval)

    mx = float(np.max(np.abs(f_nodes)))
    norm_defect = abs(f_nodes[-1]) / mx
    if norm_defect > 1e-8:
        raise ConsistencyError(
            f"Dirichlet defect {norm_defect} at r_out for nu = {nu}")
    interior = f_nodes[(r_nodes > r_sw) & (r_nodes < r_out * (1 - 1e-3))]
    live = interior[np.abs(interior) > 1e-9 * mx]
    zeros = int(np.sum(np.sign(live[:-1]) * np.sign(live[1:]) < 0))
    return EigenPair(nu=nu, mode_index=i, g=g, r_out=r_out, zeros=zeros,
                     norm_defect=norm_defect)


# ---------------------------------------------------------------------------
# Eigenvalue growth fit and tail certificate
# ---------------------------------------------------------------------------


def weyl_check(eigs, p):
    """(C1, C2): the largest/smallest constants with C1 j^(2/N) <= nu_j <= C2 j^2
    over the computed list."""
    if len(eigs) < 8:
        raise DomainValidationError("weyl_check needs >= 8 eigenvalues")
    js = np.arange(1, len(eigs) + 1, dtype=float)
    nus = np.array([e.nu for e in eigs])
    gamma = 2.0 / p.bigN
    C1 = float(np.min(nus / js ** gamma))
    C2 = float(np.max(nus / js ** 2))
    return C1, C2


def _growth_constants(eigs, p):
    js = np.arange(1, len(eigs) + 1, dtype=float)
    nus = np.array([e.nu for e in eigs])
    gamma = 2.0 / p.bigN
    return float(np.min(nus / js ** gamma)), float(np.max(nus / js ** 2)), gamma


def tail_bound(eigs, k, t, p, coeff_cap=1.0):
    """Certified bound on sum_{j>k} cap * nu_j * exp(-nu_j t).

    Terms with computed eigenvalues (k < j <= len(eigs)) enter exactly;
    beyond the computed range the sum is majorized through
    nu_j >= C1 j^(2/N) in the exponential and nu_j <= C2 j^2 in the
    prefactor, summed over doubling blocks.  Block sums are eventually
    geometric with ratio <= 1/2, which closes the series (a termwise
    geometric majorant does not exist for sub-linear exponents).
    """
    if not t > 0:
        raise DomainValidationError(
            "tail_bound needs t > 0: the tail is not summable uniformly at t = 0")
    if not 1 <= k <= len(eigs):
        raise DomainValidationError("tail_bound needs 1 <= k <= len(eigs)")
    C1, C2, gamma = _growth_constants(eigs, p)
    total = sum(coeff_cap * e.nu * math.exp(-e.nu * t) for e in eigs[k:])
    m0 = len(eigs) + 1

    def block(b):
        lo_j = m0 * 2 ** b
        return lo_j * coeff_cap * C2 * (2 * lo_j) ** 2 \
            * math.exp(-C1 * t * lo_j ** gamma)

    b = 0
    while b < 200:
        cur, nxt = block(b), block(b + 1)
        total += cur
        if nxt <= 0.5 * cur and nxt <= 1e-16 * max(total, 1e-300):
            return total + 2.0 * nxt
        b += 1
    raise EigenSearchError("tail bound blocks failed to close (t too small?)")


# ---------------------------------------------------------------------------
# Caloric series
# ---------------------------------------------------------------------------


@dataclass
class CaloricSeries:
    """Truncated spectral solution sum_j c_j exp(-nu_j t) g_j(r) phi_i."""

    pairs: list
    coeffs: np.ndarray
    truncation: int
    tail_certificate: float

    @property
    def params(self):
        return self.pairs[0].g.params

    @property
    def sphere_index(self):
        return self.pairs[0].mode_index

    @property
    def sphere_factor(self):
        return 1.0

    @property
    def r_support(self):
        lo = max(pair.g.r_min for pair in self.pairs)
        return (lo, self.pairs[0].r_out)

    def slice_log(self, r, t):
        """(sign F, log|F|, sign dF/dr, log|dF/dr|) at time t, array r."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        K = len(self.pairs)
        sF = np.empty((K, r.size))
        lF = np.empty((K, r.size))
        sD = np.empty((K, r.size))
        lD = np.empty((K, r.size))
        for j, (pair, cj) in enumerate(zip(self.pairs, self.coeffs)):
            sgn, lm, ld = pair.g.eval_log(r)
            amp = math.log(abs(cj)) if cj != 0 else -math.inf
            csign = 1.0 if cj >= 0 else -1.0
            sF[j] = csign * sgn
            lF[j] = amp - pair.nu * t + lm
            with np.errstate(divide="ignore", invalid="ignore"):
                lD[j] = lF[j] + np.log(np.abs(ld))
            sD[j] = sF[j] * np.sign(ld)
        return (*_colsum(sF, lF), *_colsum(sD, lD))


def _colsum(signs, logs):
    out_s = np.empty(signs.shape[1])
    out_l = np.empty(signs.shape[1])
    for col in range(signs.shape[1]):
        s, L = logsumexp_signed(signs[:, col], logs[:, col])
        out_s[col] = s
        out_l[col] = L
    return out_s, out_l


def make_caloric_series(pairs, coeffs, t_min):
    """Assemble a series; the tail certificate is computed at the shortest
    evaluation time t_min via tail_bound, never assumed."""
    if not pairs:
        raise DomainValidationError("caloric series needs >= 1 pair")
    nus = [pair.nu for pair in pairs]
    if any(b <= a for a, b in zip(nus, nus[1:])):
        raise DomainValidationError("eigenvalues must be strictly increasing")
    if len({pair.mode_index for pair in pairs}) != 1:
        raise DomainValidationError("all pairs must share the spherical index")
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.size != len(pairs):
        raise DomainValidationError("one coefficient per pair required")
    cap = float(np.max(np.abs(coeffs))) if coeffs.size else 1.0
    cap = cap if cap > 0 else 1.0
    p = pairs[0].g.params
    cert = tail_bound(pairs, len(pairs), t_min, p, coeff_cap=cap)
    return CaloricSeries(pairs=list(pairs), coeffs=coeffs,
                         truncation=len(pairs), tail_certificate=cert)


def coefficients_from_initial(pairs, fn, tol=1e-10):
    """Expansion coefficients <fn, g_j> in L^2(w dr) over (0, r_out]."""
    p = pairs[0].g.params
    out = []
    for pair in pairs:
        lo = pair.g.r_min
        hi = pair.r_out

        def integrand(r):
            sgn, lm, _ = pair.g.eval_log(np.array([r]))
            g = 0.0 if sgn[0] == 0 else sgn[0] * math.exp(lm[0])
            return fn(r) * g * math.exp(measure_weight_log(p, r))

        val, _ = quad_adaptive_err(integrand, lo, hi, tol)
        out.append(val)
    return np.array(out)


def evaluate_caloric(series, r, t):
    """(sign, log-magnitude) of the truncated series at (r, t), t > 0."""
    if not t > 0:
        raise DomainValidationError("evaluate_caloric needs t > 0")
    sF, lF, _, _ = series.slice_log(np.array([float(r)]), t)
    return int(sF[0]), float(lF[0])


def time_derivative(series, k, r, t):
    """(sign, log-magnitude) of d^k/dt^k of the series at (r, t).

    Term j picks up (-nu_j)^k: k log nu_j in magnitude, (-1)^k in sign.
    """
    if not t > 0:
        raise DomainValidationError("time_derivative needs t > 0")
    if not (int(k) == k and k >= 0):
        raise DomainValidationError("time_derivative needs integer k >= 0")
    k = int(k)
    r = float(r)
    signs, logs = [], []
    for pair, cj in zip(series.pairs, series.coeffs):
        sgn, lm, _ = pair.g.eval_log(np.array([r]))
        if cj == 0 or sgn[0] == 0:
            continue
        csign = 1.0 if cj > 0 else -1.0
        signs.append(csign * sgn[0] * (-1.0) ** k)
        logs.append(math.log(abs(cj)) - pair.nu * t + lm[0]
                    + k * math.log(pair.nu))
    s, L = logsumexp_signed(signs, logs)
    return int(s), float(L)


def analyticity_probe(series, r0, t0, kmax):
    """Lower estimate of the Taylor radius of t -> u(r0, t) at t0.

    Taylor coefficients a_k = d^k_t u / k! are formed in log space; the
    radius is 1 / max_{k in [kmax/2, kmax]} |a_k|^(1/k), a conservative
    window estimate of 1/limsup |a_k|^(1/k).  The zero series returns +inf.
    """
    if not kmax >= 8:
        raise DomainValidationError("analyticity_probe needs kmax >= 8")
    log_ak = []
    for k in range(kmax + 1):
        s, L = time_derivative(series, k, r0, t0)
        log_ak.append(NEG_INF if s == 0 else L - lgamma_real(k + 1.0))
    window = [L / k for k, L in enumerate(log_ak)
              if k >= max(1, kmax // 2) and L != NEG_INF]
    if not window:
        return math.inf
    return 1.0 / math.exp(max(window))


def caloric_decay_check(series, r_grid, t):
    """Fit of log|f_i(r, t)| against r^-eps over the tip region.

    Only defined when the series carries no bounded radial part (i >= 1
    for every pair): that component does not vanish at the tip.
    """
    if not t > 0:
        raise DomainValidationError("caloric_decay_check needs t > 0")
    if series.sphere_index == 0:
        raise DomainValidationError(
            "caloric_decay_check excludes series with a bounded radial part "
            "(spherical index 0)")
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.size < 8:
        raise DomainValidationError("caloric_decay_check needs >= 8 radii")
    p = series.params
    sF, lF, _, _ = series.slice_log(r_grid, t)
    if np.any(sF == 0):
        raise ConsistencyError("series vanishes at a fit radius")
    return fit_line(r_grid ** (-p.eps), lF)

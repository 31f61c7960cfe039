"""Shared test oracles.

Brute-force reference values live here, not in the library: extended
precision power series for Bessel/Gamma evaluated with mpmath arithmetic,
2-D product quadrature for the sphere x radius reductions, and
finite-difference stencils for ODE residuals.
"""

import math

import mpmath as mp
import numpy as np

mp.mp.dps = 40


def oracle_gamma(x):
    return float(mp.gamma(x))


def oracle_besselj(nu, x, terms=2000):
    """Ascending power series summed directly; the working precision grows
    with x to absorb the exp(x)-scale cancellation of the series."""
    dps = 50 + int(0.5 * abs(float(x)))
    with mp.workdps(dps):
        nu = mp.mpf(nu)
        x = mp.mpf(x)
        if x == 0:
            return 1.0 if nu == 0 else 0.0
        half = x / 2
        term = half ** nu / mp.gamma(nu + 1)
        total = term
        z = -half * half
        for m in range(1, terms):
            term *= z / (m * (nu + m))
            total += term
            if abs(term) < mp.mpf(10) ** (-dps + 4) * max(
                    abs(total), mp.mpf(10) ** (-320)):
                break
        return float(total)


def oracle_bessely(nu, x):
    return float(mp.bessely(mp.mpf(nu), mp.mpf(x)))


def oracle_j0_first_zero():
    """First positive zero of J_0 located on the series oracle."""
    f = lambda t: mp.besselj(0, t)
    return float(mp.findroot(f, mp.mpf("2.4")))


# frozen from oracle_j0_first_zero(); see test_numerics
J0_FIRST_ZERO = 2.404825557695773


def second_derivative_5pt(f, x, h):
    """O(h^4) central second derivative."""
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x)
            + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h)


def first_derivative_5pt(f, x, h):
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


# ---------------------------------------------------------------------------
# sphere x radius product-quadrature oracles (n = 3, axisymmetric phi_1)
# ---------------------------------------------------------------------------

SPHERE_I1_NORM = math.sqrt(3.0 / (4.0 * math.pi))  # phi_1 = sqrt(3/4pi) cos


def phi1(theta):
    return SPHERE_I1_NORM * math.cos(theta)


def dphi1(theta):
    return -SPHERE_I1_NORM * math.sin(theta)


def sphere_quad(fn, tol=1e-12):
    """integral over S^2 of fn(theta), axisymmetric: 2 pi int fn sin dtheta."""
    from scipy.integrate import quad
    val, _ = quad(lambda th: fn(th) * 2.0 * math.pi * math.sin(th),
                  0.0, math.pi, epsabs=tol, epsrel=tol)
    return val


def radial_value(state_like, r):
    """Linear-space (f, f') from a (sign, log, dlog) radial evaluator."""
    sgn, lm, ld = state_like.radial_log(np.array([float(r)]))
    f = 0.0 if sgn[0] == 0 else sgn[0] * math.exp(lm[0])
    return f, f * ld[0]


def oracle_I_2d(state, r, p):
    """Full product quadrature of r^{1-n} int_{S} u^2 w(r) dS for u = f phi_1."""
    f, _ = radial_value(state, r)
    ang = sphere_quad(lambda th: phi1(th) ** 2)
    w = 2.0 ** (1 - p.n) * r ** p.c
    return r ** (1 - p.n) * w * f * f * ang


def oracle_E_2d(state, r, p, tol=1e-11):
    """Product quadrature of the energy over (radius, polar angle)."""
    from scipy.integrate import quad

    def radial_part(s):
        f, fp = radial_value(state, s)
        w = 2.0 ** (1 - p.n) * s ** p.c
        grad_r = fp * fp * sphere_quad(lambda th: phi1(th) ** 2)
        grad_a = 4.0 * s ** (-2.0 - 2.0 * p.eps) * f * f \
            * sphere_quad(lambda th: dphi1(th) ** 2)
        lam = -state.mu
        zee = lam * f * f * sphere_quad(lambda th: phi1(th) ** 2)
        return (grad_r + grad_a + zee) * w

    lo = state.profile.r_min if state.kind == "profile" else 0.0
    val, _ = quad(radial_part, lo, r, epsabs=tol, epsrel=tol, limit=300)
    return r ** (2 - p.n) * val


def oracle_D_2d(u, R, p, tol=1e-11):
    """Product quadrature of the slice mass for a separated caloric state."""
    from scipy.integrate import quad
    t = -R * R
    expo = (p.c + 1.0) / 2.0

    def radial_part(s):
        sF, lF, _, _ = u.slice_log(np.array([s]), t)
        F = 0.0 if sF[0] == 0 else sF[0] * math.exp(lF[0])
        w = 2.0 ** (1 - p.n) * s ** p.c
        G = math.exp(-expo * math.log(R * R) + s * s / (4.0 * t))
        return F * F * G * w * sphere_quad(lambda th: phi1(th) ** 2)

    lo, hi = u.r_support
    val, _ = quad(radial_part, max(lo, 1e-12), hi, epsabs=tol, epsrel=tol,
                  limit=300)
    return val

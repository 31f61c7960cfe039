"""Horn parameters and closed-form geometric quantities.

The space is a warped product over the round sphere S^{n-1} with warp factor
(1/2) r^(1+eps) and an extra measure weight r^((N-n)(1-eta)).  Folding warp
and weight together, every integral used downstream reduces to a 1-D radial
integral against the density

    w(r) = 2^(1-n) * r^c,      c = (n-1)(1+eps) + (N-n)(1-eta),

taken against the ROUND unit-sphere measure on the angular factor.  The
drift exponent c is the single combination of parameters that the radial
Laplacian

    L f = f'' + (c/r) f' + 4 r^(-2-2eps) * (spherical part)

sees, so it is precomputed and stored.  The distance to the tip is the
radial coordinate itself (|grad r| = 1 away from r = 0, exact for warped
products).
"""

import math
from dataclasses import dataclass

from .errors import DomainValidationError
from .numerics import gamma_real


@dataclass(frozen=True)
class HornParams:
    """Dimensional and shape parameters of the horn.

    n    -- integer topological dimension (>= 2)
    bigN -- synthetic dimension N (real, >= n; integrality is never needed)
    eps  -- cusp sharpness of the warp factor r^(1+eps)/2, > 0
    eta  -- weight softening, in (0, 1)
    c    -- derived drift exponent (always recomputed, never trusted)
    """

    n: int
    bigN: float
    eps: float
    eta: float
    c: float

    def to_json(self):
        return {"n": self.n, "N": self.bigN, "eps": self.eps, "eta": self.eta}

    @staticmethod
    def from_json(obj):
        return make_horn_params(int(obj["n"]), float(obj["N"]),
                                float(obj["eps"]), float(obj["eta"]))


def drift_exponent(n, bigN, eps, eta):
    return (n - 1) * (1.0 + eps) + (bigN - n) * (1.0 - eta)


def make_horn_params(n, bigN, eps, eta):
    """Validate parameter ranges and assemble a HornParams.

    Raises DomainValidationError naming the violated constraint.
    """
    if int(n) != n or n < 2:
        raise DomainValidationError(f"n must be an integer >= 2, got {n}")
    n = int(n)
    if not bigN >= n:
        raise DomainValidationError(f"N must satisfy N >= n, got N={bigN}, n={n}")
    if not eps > 0:
        raise DomainValidationError(f"eps must be > 0, got {eps}")
    if not 0 < eta < 1:
        raise DomainValidationError(f"eta must lie in (0, 1), got {eta}")
    c = drift_exponent(n, bigN, eps, eta)
    # strict positivity with a numerical floor: the tip transform divides
    # by c - 1 - eps, so values at rounding scale are rejected too
    if not c - 1.0 - eps > 1e-12:
        raise DomainValidationError(
            f"c - 1 - eps must be > 0 for the tip threshold radius to exist; "
            f"got c={c}, c - 1 - eps = {c - 1.0 - eps}")
    return HornParams(n=n, bigN=float(bigN), eps=float(eps), eta=float(eta), c=c)


def measure_weight(p, r):
    """Radial density w(r) = 2^(1-n) r^c of the weighted volume measure.

    The measure is dm = w(r) dr dS(theta), dS the round unit-sphere measure;
    the same density also carries the area measure on the level set {r}.
    """
    if not r > 0:
        raise DomainValidationError(f"measure_weight needs r > 0, got {r}")
    return 2.0 ** (1 - p.n) * r ** p.c


def measure_weight_log(p, r):
    """log w(r); valid for r > 0."""
    if not r > 0:
        raise DomainValidationError(f"measure_weight_log needs r > 0, got {r}")
    return (1 - p.n) * math.log(2.0) + p.c * math.log(r)


def laplacian_radial_power(p, alpha):
    """Coefficient q(alpha) with  L r^alpha = q(alpha) * r^(alpha-2).

    q(alpha) = alpha (alpha + c - 1); the roots are 0 and 1 - c.
    """
    return alpha * (alpha + p.c - 1.0)


def hess_r2_multipliers(p):
    """Hessian of r^2: (radial, spherical) multipliers (2, 2(1+eps)).

    Hess(r^2) = 2 dr (x) dr + 2(1+eps) * warp^2 * g_sphere; the spherical
    multiplier exceeds the radial one by exactly 2 eps, which is the whole
    source of the frequency drift on the horn.
    """
    return 2.0, 2.0 * (1.0 + p.eps)


def angular_coupling(p, r):
    """Coefficient 4 r^(-2-2eps) multiplying the spherical Laplacian."""
    if not r > 0:
        raise DomainValidationError(f"angular_coupling needs r > 0, got {r}")
    return 4.0 * r ** (-2.0 - 2.0 * p.eps)


def sphere_eigenvalue(n, i):
    """i-th eigenvalue mu_i = i (n + i - 2) of the round S^{n-1} Laplacian."""
    if int(n) != n or n < 2:
        raise DomainValidationError(f"n must be an integer >= 2, got {n}")
    if int(i) != i or i < 0:
        raise DomainValidationError(f"i must be an integer >= 0, got {i}")
    return float(i * (n + i - 2))


def sphere_area(n):
    """Area of the round unit sphere S^{n-1}: 2 pi^(n/2) / Gamma(n/2)."""
    return 2.0 * math.pi ** (n / 2.0) / gamma_real(n / 2.0)

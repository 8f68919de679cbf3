"""Classical Green functions and Poisson kernels on the disk and the 3-ball.

Normalization: G behaves like log|x-y| near the pole in dimension 2 and like
-|x-y|^(2-n) in dimension n >= 3 (no surface-measure prefactor).  The Riesz
pairing is normalized so a unit point mass at a reproduces G(x, a).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Domain, as_complex
from .utils import rng_for
from .sampling import sample_nodes

BOUNDARY_TOL = 1e-12
FD_STEP = 1e-6  # one-sided second-order stencil for normal derivatives


class GreenEvaluator:
    """Closed-form negative Green function of the unit disk or the unit 3-ball."""

    def __init__(self, domain: Domain):
        if domain.kind not in ("unit-disk", "ball3"):
            raise ValueError("GreenEvaluator supports unit-disk and ball3 only")
        self.domain = domain
        self.dim = domain.ambient_dim

    # -- kernels ------------------------------------------------------------

    def green(self, x, y, validate: bool = True):
        """G(x, y) < 0 for distinct interior points; -inf at x = y."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if validate:
            if not np.all(self.domain.contains(x)) or not np.all(self.domain.contains(y)):
                raise ValueError("green() needs interior points")
        if self.domain.kind == "unit-disk":
            zx, zy = as_complex(x)[..., 0], as_complex(y)[..., 0]
            num = np.abs(zx - zy)
            den = np.abs(1.0 - zx * np.conj(zy))
            with np.errstate(divide="ignore"):
                return np.log(num / den)
        # ball3 via the Kelvin reflection of the pole
        x, y = np.broadcast_arrays(x, y)
        d = np.linalg.norm(x - y, axis=-1)
        ynorm = np.linalg.norm(y, axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            ystar = y / ynorm[..., None] ** 2
            refl = ynorm * np.linalg.norm(x - ystar, axis=-1)
        refl = np.where(ynorm == 0.0, 1.0, refl)  # pole at the origin
        with np.errstate(divide="ignore"):
            return -1.0 / d + 1.0 / refl

    def poisson(self, x, zeta, validate: bool = True):
        """Outward normal derivative of G at the boundary point zeta; positive."""
        x = np.asarray(x, dtype=float)
        zeta = np.asarray(zeta, dtype=float)
        if validate:
            if not np.all(self.domain.contains(x)):
                raise ValueError("poisson() needs an interior first argument")
            if np.any(np.abs(np.linalg.norm(zeta, axis=-1) - 1.0) > BOUNDARY_TOL):
                raise ValueError(f"zeta must lie on the boundary within {BOUNDARY_TOL}")
        x, zeta = np.broadcast_arrays(x, zeta)
        d2 = np.sum((x - zeta) ** 2, axis=-1)
        xx = np.sum(x * x, axis=-1)
        if self.domain.kind == "unit-disk":
            return (1.0 - xx) / d2
        return (1.0 - xx) / d2**1.5

    def poisson_fd(self, x, zeta, h: float = FD_STEP):
        """Finite-difference normal derivative of G (independent check of poisson).

        Uses the one-sided second-order stencil along the inward normal; G
        vanishes on the boundary, so only two interior evaluations enter.
        """
        zeta = np.asarray(zeta, dtype=float)
        n_out = zeta / np.linalg.norm(zeta, axis=-1, keepdims=True)
        q1 = self.green(x, zeta - h * n_out)
        q2 = self.green(x, zeta - 2.0 * h * n_out)
        return -(4.0 * q1 - q2) / (2.0 * h)

    def martin_normalized(self, x, y, x0):
        """Ratio G(x, y)/G(x0, y); positive, equals 1 at x = x0."""
        x0 = np.asarray(x0, dtype=float)
        y = np.asarray(y, dtype=float)
        if np.any(np.all(np.isclose(y, x0), axis=-1)):
            raise ValueError("pole y must differ from the base point x0")
        return self.green(x, y) / self.green(x0, y)


@dataclass
class BoundConstants:
    """Empirical constants for the boundary-distance bounds, with certificates."""

    a_hat: float = np.nan
    b_hat: float = np.nan
    n_pairs: int = 0
    seed: int = 0
    max_violation: float = np.nan
    passed: bool = False

    def report(self, check: str, domain: str) -> dict:
        return {
            "check": check,
            "domain": domain,
            "seed": self.seed,
            "n": self.n_pairs,
            "constants": {"A_hat": self.a_hat, "B_hat": self.b_hat},
            "max_violation": self.max_violation,
            "pass": bool(self.passed),
        }


def _interior_pairs(domain: Domain, n: int, rng_a, rng_b):
    xs = sample_nodes(domain, n, seed=0, strategy="uniform")[0]  # placeholder, replaced below
    return xs


def _green_tightness(g: GreenEvaluator, x, y):
    """Per-pair constant making the Green lower bound an equality."""
    dom = g.domain
    dx = dom.boundary_distance(x)
    dy = dom.boundary_distance(y)
    r = np.linalg.norm(x - y, axis=-1)
    if dom.kind == "unit-disk":
        zx, zy = as_complex(x)[..., 0], as_complex(y)[..., 0]
        excess = np.abs(1.0 - zx * np.conj(zy)) ** 2 - np.abs(zx - zy) ** 2
        return excess / (dx * dy)
    gval = g.green(x, y)
    return -gval * r**3 / (dx * dy)


def _green_bound_rhs(g: GreenEvaluator, x, y, a_const):
    dom = g.domain
    dx = dom.boundary_distance(x)
    dy = dom.boundary_distance(y)
    r2 = np.sum((x - y) ** 2, axis=-1)
    if dom.kind == "unit-disk":
        return -0.5 * np.log1p(a_const * dx * dy / r2)
    return -a_const * dx * dy / r2**1.5


def scan_green_bound(g: GreenEvaluator, n_pairs: int, seed: int, margin: float = 1.01) -> BoundConstants:
    """Tightest A over seeded pairs, certified at margin*A on a fresh sample."""
    dom = g.domain
    rng_pts = rng_for(seed, 10)
    xs = _draw(dom, n_pairs, rng_pts)
    ys = _draw(dom, n_pairs, rng_pts)
    a_hat = float(np.max(_green_tightness(g, xs, ys)))
    # fresh certification sample
    rng2 = rng_for(seed, 11)
    xf = _draw(dom, n_pairs, rng2)
    yf = _draw(dom, n_pairs, rng2)
    lhs = g.green(xf, yf)
    rhs = _green_bound_rhs(g, xf, yf, margin * a_hat)
    max_violation = float(np.max(rhs - lhs))
    return BoundConstants(
        a_hat=a_hat,
        n_pairs=n_pairs,
        seed=seed,
        max_violation=max_violation,
        passed=bool(max_violation <= 1e-12),
    )


def scan_poisson_bound(g: GreenEvaluator, n_pairs: int, seed: int, margin: float = 1.01) -> BoundConstants:
    """Tightest B for P(x, zeta) <= B*delta(x)/|x-zeta|^n, certified at margin*B."""
    dom = g.domain
    n_exp = dom.ambient_dim
    rng_pts = rng_for(seed, 12)
    xs = _draw(dom, n_pairs, rng_pts)
    zs = dom.boundary_points(n_pairs, rng_pts)
    p = g.poisson(xs, zs)
    ratio = p * np.linalg.norm(xs - zs, axis=-1) ** n_exp / dom.boundary_distance(xs)
    b_hat = float(np.max(ratio))
    rng2 = rng_for(seed, 13)
    xf = _draw(dom, n_pairs, rng2)
    zf = dom.boundary_points(n_pairs, rng2)
    pf = g.poisson(xf, zf)
    rhs = margin * b_hat * dom.boundary_distance(xf) / np.linalg.norm(xf - zf, axis=-1) ** n_exp
    max_violation = float(np.max(pf - rhs))
    return BoundConstants(
        b_hat=b_hat,
        n_pairs=n_pairs,
        seed=seed,
        max_violation=max_violation,
        passed=bool(max_violation <= 1e-12),
    )


def _draw(domain: Domain, n: int, rng: np.random.Generator) -> np.ndarray:
    lo, hi = domain.bounding_box()
    out = np.empty((n, domain.ambient_dim))
    filled = 0
    while filled < n:
        cand = rng.uniform(lo, hi, size=(max(4 * (n - filled), 1024), domain.ambient_dim))
        cand = cand[domain.contains(cand)]
        take = min(len(cand), n - filled)
        out[filled : filled + take] = cand[:take]
        filled += take
    return out


@dataclass
class RieszDecomposition:
    """Closed-form data of a negative subharmonic function.

    density:     Riesz density against Lebesgue volume (normalized so that a
                 unit point mass at a reproduces G(x, a)), or None
    point_masses:    [(location, mass)] atoms of the Riesz measure
    boundary_masses: [(boundary point, mass)] realizing the harmonic part as a
                 negated Poisson integral
    majorant:    the least harmonic majorant in closed form (reference only)
    """

    density: object = None
    point_masses: list = field(default_factory=list)
    boundary_masses: list = field(default_factory=list)
    majorant: object = None


def poisson_jensen_eval(g: GreenEvaluator, r: RieszDecomposition, x, nodes) -> float:
    """Quadrature of  integral G(x,.) d(Riesz) - sum P(x, zeta_i) mu_i  at x."""
    pts, wts = nodes
    pts = np.asarray(pts, dtype=float)
    if pts.shape[-1] != g.domain.ambient_dim:
        raise ValueError("nodes come from a domain of mismatched dimension")
    x = np.asarray(x, dtype=float)
    total = 0.0
    if r.density is not None:
        gv = g.green(np.broadcast_to(x, pts.shape), pts, validate=False)
        dv = r.density(pts)
        mask = np.isfinite(gv)  # a node exactly at the pole carries no mass
        total += float(np.sum(gv[mask] * dv[mask] * wts[mask]))
    for loc, mass in r.point_masses:
        total += mass * float(g.green(x, np.asarray(loc, dtype=float)))
    for zeta, mass in r.boundary_masses:
        total -= mass * float(g.poisson(x, np.asarray(zeta, dtype=float)))
    return total


def harmonicity_residual(fn, points, h: float = 1e-3) -> float:
    """Max magnitude of the 5-point (2-D) discrete Laplacian of fn over points."""
    pts = np.asarray(points, dtype=float)
    total = -2.0 * pts.shape[-1] * fn(pts)
    for axis in range(pts.shape[-1]):
        step = np.zeros(pts.shape[-1])
        step[axis] = h
        total += fn(pts + step) + fn(pts - step)
    return float(np.max(np.abs(total / h**2)))

"""Pluricomplex Green functions on the complex 2-ball and the bidisk.

Logarithmic-pole normalization: on the ball g(z, a) = log ||phi_a(z)|| with
phi_a the automorphism exchanging a and 0, so g(z, 0) = log ||z||; on the
bidisk g is the log of the larger coordinatewise Moebius modulus.
"""

from __future__ import annotations

import numpy as np

from .geometry import Domain, as_complex, from_complex
from .utils import rng_for

KOBAYASHI_TOL = 1e-10


def _c2(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != 4:
        raise ValueError("expected points in R^4 (complex coordinate packing)")
    return as_complex(pts)


def _herm(z, w):
    """Hermitian inner product <z, w> = z1*conj(w1) + z2*conj(w2)."""
    return np.sum(z * np.conj(w), axis=-1)


def ball_green(z, a, validate: bool = True):
    """g(z, a) = log ||phi_a(z)|| on the complex 2-ball; -inf at z = a."""
    zc, ac = _c2(z), _c2(a)
    if validate:
        dom = Domain("cball2")
        if not (np.all(dom.contains(np.asarray(z, dtype=float))) and np.all(dom.contains(np.asarray(a, dtype=float)))):
            raise ValueError("ball_green needs points inside the open ball")
    nz2 = np.sum(np.abs(zc) ** 2, axis=-1)
    na2 = np.sum(np.abs(ac) ** 2, axis=-1)
    cross = np.abs(1.0 - _herm(zc, ac)) ** 2
    mod2 = 1.0 - (1.0 - nz2) * (1.0 - na2) / cross
    mod2 = np.maximum(mod2, 0.0)
    with np.errstate(divide="ignore"):
        return 0.5 * np.log(mod2)


def polydisk_green(z, w, validate: bool = True):
    """g(z, w) = log max_k |(z_k - w_k)/(1 - z_k conj(w_k))| on the bidisk."""
    zc, wc = _c2(z), _c2(w)
    if validate:
        dom = Domain("bidisk")
        if not (np.all(dom.contains(np.asarray(z, dtype=float))) and np.all(dom.contains(np.asarray(w, dtype=float)))):
            raise ValueError("polydisk_green needs points inside the open bidisk")
    m = np.abs((zc - wc) / (1.0 - zc * np.conj(wc)))
    with np.errstate(divide="ignore"):
        return np.log(np.max(m, axis=-1))


class PluriGreenEvaluator:
    """Closed-form pluricomplex Green function of the cball2 or bidisk."""

    def __init__(self, domain: Domain):
        if domain.kind not in ("cball2", "bidisk"):
            raise ValueError("PluriGreenEvaluator supports cball2 and bidisk only")
        self.domain = domain

    def green(self, z, w, validate: bool = True):
        if self.domain.kind == "cball2":
            return ball_green(z, w, validate=validate)
        return polydisk_green(z, w, validate=validate)

    def circumscribed_radius(self, w) -> float:
        """Exact radius of the smallest ball about w containing the domain."""
        wc = _c2(w)
        if self.domain.kind == "cball2":
            return float(1.0 + np.sqrt(np.sum(np.abs(wc) ** 2, axis=-1)))
        return float(np.hypot(1.0 + np.abs(wc[..., 0]), 1.0 + np.abs(wc[..., 1])))


class KobayashiOracle:
    """Kobayashi distance of the complex 2-ball (independent arithmetic path)."""

    def distance(self, z, w):
        zc, wc = _c2(z), _c2(w)
        nz2 = np.sum(np.abs(zc) ** 2, axis=-1)
        nw2 = np.sum(np.abs(wc) ** 2, axis=-1)
        arg = np.abs(1.0 - _herm(zc, wc)) / np.sqrt((1.0 - nz2) * (1.0 - nw2))
        return np.arccosh(np.maximum(arg, 1.0))

    def log_tanh_distance(self, z, w):
        with np.errstate(divide="ignore"):
            return np.log(np.tanh(self.distance(z, w)))


def _draw(domain: Domain, n: int, rng) -> np.ndarray:
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


def lower_bound_check(ev: PluriGreenEvaluator, n_pairs: int, seed: int) -> dict:
    """Verify g(z, w) >= log(|z - w|/r_w) with the exact circumscribed radius r_w."""
    rng = rng_for(seed, 20)
    zs = _draw(ev.domain, n_pairs, rng)
    ws = _draw(ev.domain, n_pairs, rng)
    g = ev.green(zs, ws)
    wc = as_complex(ws)
    if ev.domain.kind == "cball2":
        r_w = 1.0 + np.sqrt(np.sum(np.abs(wc) ** 2, axis=-1))
    else:
        r_w = np.hypot(1.0 + np.abs(wc[..., 0]), 1.0 + np.abs(wc[..., 1]))
    dist = np.linalg.norm(zs - ws, axis=-1)
    with np.errstate(divide="ignore"):
        rhs = np.log(dist / r_w)
    viol = rhs - g
    viol = viol[np.isfinite(viol)]
    max_violation = float(np.max(viol)) if viol.size else -np.inf
    return {
        "check": "pluri-green-lower-bound",
        "domain": ev.domain.kind,
        "seed": seed,
        "n": n_pairs,
        "constants": {"radius_rule": "exact circumscribed ball about w"},
        "max_violation": max_violation,
        "pass": bool(max_violation <= 1e-12),
    }


def kl_ratio(ev: PluriGreenEvaluator, w0, x_radius: float, y_radius: float, n_z: int, seed: int):
    """Extremes of g(z, w0)/g(z, w) for w near w0 and z away from w0.

    Samples w in B(w0, y_radius) and z in the domain outside B(w0, x_radius);
    returns (min_ratio, max_ratio).
    """
    if not y_radius < x_radius:
        raise ValueError("need Y_radius < X_radius")
    w0 = np.asarray(w0, dtype=float)
    if float(ev.domain.boundary_distance(w0)) <= x_radius:
        raise ValueError("w0 must have boundary distance greater than X_radius")
    rng = rng_for(seed, 21)
    g = rng.standard_normal((n_z, 4))
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    ws = w0 + g * (rng.uniform(size=(n_z, 1)) ** 0.25) * y_radius
    lo, hi = ev.domain.bounding_box()
    zs = np.empty((n_z, 4))
    filled = 0
    while filled < n_z:
        cand = rng.uniform(lo, hi, size=(max(4 * (n_z - filled), 1024), 4))
        keep = ev.domain.contains(cand) & (np.linalg.norm(cand - w0, axis=-1) > x_radius)
        cand = cand[keep]
        take = min(len(cand), n_z - filled)
        zs[filled : filled + take] = cand[:take]
        filled += take
    ratios = ev.green(zs, np.broadcast_to(w0, zs.shape)) / ev.green(zs, ws)
    return float(np.min(ratios)), float(np.max(ratios))


SINGULARITY_CLEARANCE = 0.8  # the kernel's fourth derivatives grow like |1 - zeta|^-6


def disk_harmonicity_check(c_param: complex, n_zeta: int, h: float, seed: int = 0) -> float:
    """Max 5-point Laplacian of the normalized ball limit kernel along an analytic disk.

    The disk is zeta -> (zeta, C(1 - zeta)) into the ball, the kernel has
    parameter a = (1, 0); returns the max residual over admissible zeta, kept
    clear of the boundary point zeta = 1 so the O(h^2) truncation error of the
    stencil stays resolvable.
    """
    rng = rng_for(seed, 22)
    pts = []
    while len(pts) < n_zeta:
        cand = rng.uniform(-1, 1, size=(4 * n_zeta, 2))
        zeta = cand[..., 0] + 1j * cand[..., 1]
        ball_ok = np.abs(zeta) ** 2 + abs(c_param) ** 2 * np.abs(1 - zeta) ** 2 < (1.0 - 4 * h) ** 2
        keep = ball_ok & (np.abs(zeta) < 1.0 - 4 * h) & (np.abs(1 - zeta) > SINGULARITY_CLEARANCE)
        cand = cand[keep]
        pts.extend(cand[: n_zeta - len(pts)])
    pts = np.asarray(pts)
    if len(pts) == 0:
        raise ValueError("no admissible zeta points for this C")

    def kernel_on_disk(p):
        zeta = p[..., 0] + 1j * p[..., 1]
        z1 = zeta
        z2 = c_param * (1 - zeta)
        nz2 = np.abs(z1) ** 2 + np.abs(z2) ** 2
        return (nz2 - 1.0) / np.abs(1.0 - z1) ** 2

    total = -4.0 * kernel_on_disk(pts)
    for axis in range(2):
        step = np.zeros(2)
        step[axis] = h
        total += kernel_on_disk(pts + step) + kernel_on_disk(pts - step)
    return float(np.max(np.abs(total / h**2)))


def ball_automorphism(b, unitary=None):
    """Moebius automorphism of the 2-ball sending b to 0, composed with a unitary."""
    bc = _c2(np.asarray(b, dtype=float))
    nb2 = float(np.sum(np.abs(bc) ** 2))
    if nb2 >= 1.0:
        raise ValueError("automorphism parameter must be inside the ball")
    s = np.sqrt(1.0 - nb2)

    def apply(z):
        zc = _c2(z)
        if nb2 == 0.0:
            out = zc
        else:
            zb = _herm(zc, np.broadcast_to(bc, zc.shape))
            proj = (zb / nb2)[..., None] * bc
            orth = zc - proj
            out = (bc - proj - s * orth) / (1.0 - zb[..., None])
        if unitary is not None:
            out = out @ np.asarray(unitary, dtype=complex).T
        return from_complex(out)

    return apply


def random_unitary(seed: int) -> np.ndarray:
    rng = rng_for(seed, 23)
    m = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    q, r = np.linalg.qr(m)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def automorphism_invariance_check(n_pairs: int, seed: int, tol: float = KOBAYASHI_TOL) -> dict:
    """Verify g(F(z), F(w)) = g(z, w) for seeded Moebius-unitary ball automorphisms."""
    dom = Domain("cball2")
    rng = rng_for(seed, 24)
    zs = _draw(dom, n_pairs, rng)
    ws = _draw(dom, n_pairs, rng)
    worst = 0.0
    for k in range(3):
        b = 0.6 * _draw(dom, 1, rng_for(seed, 25, k))[0]
        f = ball_automorphism(b, unitary=random_unitary(seed + k))
        g0 = ball_green(zs, ws)
        g1 = ball_green(f(zs), f(ws), validate=False)
        worst = max(worst, float(np.max(np.abs(g1 - g0))))
    return {
        "check": "ball-automorphism-invariance",
        "domain": "cball2",
        "seed": seed,
        "n": n_pairs,
        "constants": {},
        "max_violation": worst,
        "pass": bool(worst < tol),
    }

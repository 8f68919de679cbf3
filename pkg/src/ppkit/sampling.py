"""Seeded quadrature node generation on the model domains.

Strategies:
  uniform             equal-weight rejection sampling, weight = volume/n
  pole-refined        half the nodes in geometrically shrinking shells around
                      a pole, half in the complement; exact stratum volumes
  boundary-stratified half the nodes in dyadic boundary-distance collars

Every strategy is deterministic given (n, seed) and its weights sum to the
domain volume exactly (up to roundoff), since each stratum volume is exact.
"""

from __future__ import annotations

import numpy as np

from .geometry import Domain
from .utils import rng_for

_UNIT_BALL_VOL = {1: 2.0, 2: np.pi, 3: 4.0 * np.pi / 3.0, 4: np.pi**2 / 2.0}

POLE_R_CAP = 0.5  # refinement shells never extend past this radius
COLLAR_STRATA = 8
COLLAR_WIDTH = 0.25


def pole_shell_count(n: int) -> int:
    """Dyadic refinement depth grows with the node count, so node doubling
    deepens the resolved scale; this is what lets norm scans distinguish
    log-divergent integrands from convergent ones."""
    return max(12, int(round(np.log2(max(n, 2)))))


def ball_volume(dim: int, r: float) -> float:
    return _UNIT_BALL_VOL[dim] * r**dim


def _uniform_in_domain(domain: Domain, n: int, rng: np.random.Generator, reject=None) -> np.ndarray:
    """n uniform points in the domain (minus an optional rejection region)."""
    lo, hi = domain.bounding_box()
    out = np.empty((n, domain.ambient_dim))
    filled = 0
    while filled < n:
        m = max(4 * (n - filled), 1024)
        cand = rng.uniform(lo, hi, size=(m, domain.ambient_dim))
        keep = domain.contains(cand)
        if reject is not None:
            keep &= ~reject(cand)
        cand = cand[keep]
        take = min(len(cand), n - filled)
        out[filled : filled + take] = cand[:take]
        filled += take
    return out


def _uniform_in_shell(dim: int, center: np.ndarray, r_lo: float, r_hi: float, n: int, rng) -> np.ndarray:
    """Uniform points in the spherical shell r_lo < |x - center| <= r_hi."""
    g = rng.standard_normal((n, dim))
    g /= np.linalg.norm(g, axis=-1, keepdims=True)
    u = rng.uniform(size=(n, 1))
    r = (r_lo**dim + u * (r_hi**dim - r_lo**dim)) ** (1.0 / dim)
    return center + g * r


def _uniform_in_sector_shell(r_lo: float, r_hi: float, n: int, rng) -> np.ndarray:
    """Uniform points in the quarter-plane sector shell (quarter-disk corner)."""
    th = rng.uniform(0.0, np.pi / 2.0, size=n)
    u = rng.uniform(size=n)
    r = np.sqrt(r_lo**2 + u * (r_hi**2 - r_lo**2))
    return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)


def _pole_cap(domain: Domain, pole: np.ndarray):
    """(R0, shell volume fn, shell sampler) for refinement around the pole."""
    pole = np.asarray(pole, dtype=float)
    dim = domain.ambient_dim
    if domain.kind == "quarter-disk" and np.allclose(pole, 0.0):
        # corner refinement: B(0, r) meets the domain in a quarter disk
        r0 = POLE_R_CAP

        def vol(a, b):
            return np.pi / 4.0 * (b**2 - a**2)

        def sample(a, b, n, rng):
            return _uniform_in_sector_shell(a, b, n, rng)

        return r0, vol, sample
    if not domain.contains(pole):
        raise ValueError("pole-refined strategy needs an interior pole (or the quarter-disk corner)")
    r0 = min(0.99 * float(domain.boundary_distance(pole)), POLE_R_CAP)

    def vol(a, b):
        return ball_volume(dim, b) - ball_volume(dim, a)

    def sample(a, b, n, rng):
        return _uniform_in_shell(dim, pole, a, b, n, rng)

    return r0, vol, sample


def _split_counts(total: int, k: int) -> np.ndarray:
    """Split total into k near-equal positive counts (first buckets get the remainder)."""
    base = total // k
    counts = np.full(k, base, dtype=int)
    counts[: total - base * k] += 1
    if np.any(counts == 0):
        raise ValueError(f"too few nodes ({total}) for {k} strata")
    return counts


def sample_nodes(domain: Domain, n: int, seed: int, strategy: str = "uniform", pole=None):
    """Deterministic quadrature nodes; returns (points (n,d), weights (n,)).

    The weights of each stratum are stratum_volume/stratum_count, so the total
    weight equals the domain volume exactly.
    """
    if n < 1:
        raise ValueError("need n >= 1 nodes")
    if strategy == "uniform":
        rng = rng_for(seed, 0)
        pts = _uniform_in_domain(domain, n, rng)
        wts = np.full(n, domain.volume / n)
        return pts, wts

    if strategy == "pole-refined":
        if pole is None:
            raise ValueError("pole-refined strategy needs a pole")
        pole = np.asarray(pole, dtype=float)
        r0, shell_vol, shell_sample = _pole_cap(domain, pole)
        n_shells = pole_shell_count(n)
        n_near = n // 2
        n_far = n - n_near
        radii = r0 * 0.5 ** np.arange(n_shells + 1)  # shell k: (radii[k+1], radii[k]]
        counts = _split_counts(n_near, n_shells + 1)
        pts_list, wts_list = [], []
        for k in range(n_shells + 1):
            lo = radii[k + 1] if k < n_shells else 0.0
            hi = radii[k]
            m = counts[k]
            rng = rng_for(seed, 1, k)
            pts_list.append(shell_sample(lo, hi, m, rng))
            wts_list.append(np.full(m, shell_vol(lo, hi) / m))
        rng = rng_for(seed, 2)
        d2 = None

        def in_cap(c):
            return np.sum((c - pole) ** 2, axis=-1) <= r0**2

        far = _uniform_in_domain(domain, n_far, rng, reject=in_cap)
        far_vol = domain.volume - shell_vol(0.0, r0)
        pts = np.concatenate(pts_list + [far])
        wts = np.concatenate(wts_list + [np.full(n_far, far_vol / n_far)])
        return pts, wts

    if strategy == "boundary-stratified":
        eps0 = COLLAR_WIDTH
        n_deep = n // 2
        n_collar = n - n_deep
        cuts = eps0 * 0.5 ** np.arange(COLLAR_STRATA + 1)  # stratum k: delta in [cuts[k+1], cuts[k])
        counts = _split_counts(n_collar, COLLAR_STRATA + 1)
        rng = rng_for(seed, 0)
        deep = _uniform_in_domain(domain, n_deep, rng, reject=lambda c: domain.boundary_distance(c, validate=False) < eps0)
        deep_vol = domain.volume - domain.collar_volume(eps0)
        pts_list = [deep]
        wts_list = [np.full(n_deep, deep_vol / n_deep)]
        for k in range(COLLAR_STRATA + 1):
            lo = cuts[k + 1] if k < COLLAR_STRATA else 0.0
            hi = cuts[k]
            m = counts[k]
            rng = rng_for(seed, 3, k)

            def outside(c, lo=lo, hi=hi):
                d = domain.boundary_distance(c, validate=False)
                return (d < lo) | (d >= hi)

            pts_list.append(_uniform_in_domain(domain, m, rng, reject=outside))
            wts_list.append(np.full(m, (domain.collar_volume(hi) - domain.collar_volume(lo)) / m))
        return np.concatenate(pts_list), np.concatenate(wts_list)

    raise ValueError(f"unknown sampling strategy {strategy!r}")


def save_nodes_csv(path, domain: Domain, seed: int, strategy: str, points, weights):
    """Write a node list in the ppkit-nodes v1 format (17 significant digits)."""
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    with open(path, "w") as fh:
        fh.write(f"# ppkit-nodes v1 {domain.kind} {seed} {strategy}\n")
        for row, w in zip(points, weights):
            fields = [f"{c:.17g}" for c in row] + [f"{w:.17g}"]
            fh.write(",".join(fields) + "\n")


def load_nodes_csv(path):
    """Read a ppkit-nodes v1 file; returns (domain, seed, strategy, points, weights)."""
    with open(path) as fh:
        header = fh.readline().strip()
        parts = header.split()
        if len(parts) < 5 or parts[0] != "#" or parts[1] != "ppkit-nodes" or parts[2] != "v1":
            raise ValueError(f"not a ppkit-nodes v1 file: {header!r}")
        kind, seed, strategy = parts[3], int(parts[4]), parts[5]
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return Domain(kind), seed, strategy, data[:, :-1], data[:, -1]

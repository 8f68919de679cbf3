"""Concrete realization of L1(M, V) on a fixed seeded discretization.

A Discretization carries quadrature nodes together with the values of the
weight function (the density of V against Lebesgue volume); all norms and
distances of samples bound to it are exact linear-algebra reductions.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .geometry import Domain
from .sampling import sample_nodes
from .utils import pairwise_sum

MIN_NORM_NODES = 1000
UNIT_NORM_TOL = 1e-9
INFTY_BUDGET = 1  # nodes allowed to carry -inf before a sample is rejected


@dataclass
class Discretization:
    """Fixed node set realizing the measure V = weight * Lebesgue volume."""

    domain: Domain
    points: np.ndarray
    quad_weights: np.ndarray
    weight_values: np.ndarray
    seed: int = 0
    strategy: str = "uniform"
    disc_id: str = ""

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        self.quad_weights = np.asarray(self.quad_weights, dtype=float)
        self.weight_values = np.asarray(self.weight_values, dtype=float)
        if not np.all(self.weight_values > 0.0):
            raise ValueError("weight values must be positive everywhere")
        if len(self.points) < MIN_NORM_NODES:
            raise ValueError(f"norm-bearing discretizations need at least {MIN_NORM_NODES} nodes")
        if not self.disc_id:
            h = hashlib.sha256()
            h.update(f"{self.domain.kind}|{self.seed}|{len(self.points)}|{self.strategy}".encode())
            self.disc_id = h.hexdigest()[:12]

    @classmethod
    def build(cls, domain: Domain, n: int, seed: int, strategy: str = "uniform",
              weight_fn=None, normalized: bool = False, pole=None) -> "Discretization":
        """Sample nodes and evaluate the weight; weight_fn = None means V = Lebesgue."""
        pts, wts = sample_nodes(domain, n, seed, strategy=strategy, pole=pole)
        wv = np.ones(n) if weight_fn is None else np.asarray(weight_fn(pts), dtype=float)
        if normalized:
            wv = wv / float(np.sum(wts * wv))
        return cls(domain, pts, wts, wv, seed=seed, strategy=strategy)

    @property
    def measure(self) -> np.ndarray:
        return self.quad_weights * self.weight_values

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.measure))

    def __len__(self):
        return len(self.points)


@dataclass
class KernelSample:
    """A function known through its values on a Discretization."""

    disc: Discretization
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.disc),):
            raise ValueError("sample values do not match the discretization")
        bad = ~np.isfinite(self.values)
        if np.sum(bad) > INFTY_BUDGET:
            raise ValueError(f"more than {INFTY_BUDGET} node value(s) non-finite")

    def _effective(self):
        """(values, measure) with at most one non-finite node omitted.

        The omitted node's share of the measure is redistributed
        proportionally, keeping the total mass exact.
        """
        mask = np.isfinite(self.values)
        mu = self.disc.measure
        if mask.all():
            return self.values, mu
        kept = float(np.sum(mu[mask]))
        return self.values[mask], mu[mask] * (float(np.sum(mu)) / kept)


def l1_norm(s: KernelSample) -> float:
    """Integral of |s| against the discretization's measure."""
    v, mu = s._effective()
    return pairwise_sum(np.abs(v) * mu)


def l1_distance(s1: KernelSample, s2: KernelSample) -> float:
    """L1 distance of two samples bound to the same discretization."""
    if s1.disc.disc_id != s2.disc.disc_id:
        raise ValueError("samples live on different discretizations")
    mask = np.isfinite(s1.values) & np.isfinite(s2.values)
    mu = s1.disc.measure
    if mask.all():
        return pairwise_sum(np.abs(s1.values - s2.values) * mu)
    if np.sum(~mask) > INFTY_BUDGET:
        raise ValueError("too many non-finite nodes in the difference")
    scale = float(np.sum(mu)) / float(np.sum(mu[mask]))
    return pairwise_sum(np.abs(s1.values[mask] - s2.values[mask]) * mu[mask] * scale)


@dataclass
class NormalizedKernel:
    """Unit-L1-norm sample together with the normalizer that produced it."""

    sample: KernelSample
    tag: str = ""
    normalizer: float = 1.0

    def __post_init__(self):
        nrm = l1_norm(self.sample)
        if abs(nrm - 1.0) > UNIT_NORM_TOL:
            raise ValueError(f"normalized kernel has norm {nrm}, outside 1 +/- {UNIT_NORM_TOL}")


def normalize(sample: KernelSample, tag: str = "") -> NormalizedKernel:
    nrm = l1_norm(sample)
    if nrm <= 0.0 or not np.isfinite(nrm):
        raise ValueError("cannot normalize a sample with zero or non-finite norm")
    return NormalizedKernel(KernelSample(sample.disc, sample.values / nrm), tag=tag, normalizer=nrm)


def green_sample(ev, disc: Discretization, w) -> KernelSample:
    """Sample of the pluricomplex Green function with pole w on the nodes."""
    w = np.asarray(w, dtype=float)
    vals = ev.green(np.broadcast_to(w, disc.points.shape), disc.points, validate=False)
    # argument order is immaterial: both closed forms are symmetric
    return KernelSample(disc, vals)


def c_v(ev, disc: Discretization, w) -> float:
    """Normalizer c_V(w): the L1(M, V) norm of the Green function with pole w."""
    if not ev.domain.contains(np.asarray(w, dtype=float)):
        raise ValueError("pole must be interior")
    return l1_norm(green_sample(ev, disc, w))


def embed(ev, disc: Discretization, w, tag: str = "") -> NormalizedKernel:
    """The point w as the unit-norm normalized Green sample with pole w."""
    s = green_sample(ev, disc, w)
    return normalize(s, tag=tag or f"pole {np.asarray(w).tolist()}")


def compactness_probe(samples, tol: float):
    """Greedy Cauchy subsequence extraction at tolerance tol.

    Walks the sequence keeping every sample within tol of the last kept one;
    returns (indices, limit sample, report).  Failure to find a subsequence of
    at least 4 terms is reported as inconclusive, not as a counterexample.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("empty sequence")
    best = None
    for start in range(len(samples)):
        idx = [start]
        for j in range(start + 1, len(samples)):
            if l1_distance(samples[idx[-1]], samples[j]) < tol:
                idx.append(j)
        key = (idx[-1] == len(samples) - 1, len(idx))
        if best is None or key > best[0]:
            best = (key, idx)
    best = best[1]
    ok = len(best) >= min(4, len(samples))
    limit = samples[best[-1]]
    report = {
        "check": "compactness-probe",
        "tol": tol,
        "n_sequence": len(samples),
        "subsequence": best,
        "limit_norm": l1_norm(limit),
        "pass": bool(ok and l1_norm(limit) <= 1.0 + UNIT_NORM_TOL),
        "inconclusive": not ok,
    }
    return best, limit, report


def save_sample_csv(path, s: KernelSample):
    """Write a sample in the ppkit-sample v1 format (node index, value)."""
    with open(path, "w") as fh:
        fh.write(f"# ppkit-sample v1 {s.disc.disc_id}\n")
        for i, v in enumerate(s.values):
            fh.write(f"{i},{v:.17g}\n")


def load_sample_csv(path, disc: Discretization) -> KernelSample:
    with open(path) as fh:
        header = fh.readline().split()
        if header[:3] != ["#", "ppkit-sample", "v1"]:
            raise ValueError("not a ppkit-sample v1 file")
        if header[3] != disc.disc_id:
            raise ValueError(f"sample was taken on discretization {header[3]}, not {disc.disc_id}")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    values = np.full(len(disc), np.nan)
    values[data[:, 0].astype(int)] = data[:, 1]
    return KernelSample(disc, values)

"""Model domains, their boundary geometry, and concentric exhaustions.

Five analytically tractable domains are supported; every geometric quantity
(membership, boundary distance, volume, collar volume, Minkowski gauge) has a
closed form.  Complex coordinates are carried by the packing convention that
complex coordinate z_k occupies real slots (2k-2, 2k-1) of a point vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DOMAIN_KINDS = ("unit-disk", "quarter-disk", "ball3", "cball2", "bidisk")

_ALIASES = {"disk": "unit-disk", "unit_disk": "unit-disk", "quarter_disk": "quarter-disk"}


def as_complex(points: np.ndarray) -> np.ndarray:
    """View an (..., 2m) real array as an (..., m) complex array."""
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] % 2:
        raise ValueError("complex packing needs an even number of real slots")
    return pts[..., 0::2] + 1j * pts[..., 1::2]


def from_complex(z: np.ndarray) -> np.ndarray:
    """Inverse of as_complex."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


_INV_SQRT2P1 = 1.0 / (1.0 + np.sqrt(2.0))  # quarter-disk inradius


class Domain:
    """One of the model domains, with exact boundary geometry."""

    def __init__(self, kind: str):
        kind = _ALIASES.get(kind, kind)
        if kind not in DOMAIN_KINDS:
            raise ValueError(f"unknown domain kind {kind!r}; expected one of {DOMAIN_KINDS}")
        self.kind = kind
        self.ambient_dim = {"unit-disk": 2, "quarter-disk": 2, "ball3": 3, "cball2": 4, "bidisk": 4}[kind]
        self.smooth_boundary = kind in ("unit-disk", "ball3", "cball2")
        self.volume = {
            "unit-disk": np.pi,
            "quarter-disk": np.pi / 4.0,
            "ball3": 4.0 * np.pi / 3.0,
            "cball2": np.pi**2 / 2.0,
            "bidisk": np.pi**2,
        }[kind]

    def __repr__(self):
        return f"Domain({self.kind!r})"

    def __eq__(self, other):
        return isinstance(other, Domain) and other.kind == self.kind

    def __hash__(self):
        return hash(self.kind)

    # -- membership and distance ------------------------------------------

    def _check_dim(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if pts.shape[-1] != self.ambient_dim:
            raise ValueError(
                f"point dimension {pts.shape[-1]} does not match {self.kind} (dim {self.ambient_dim})"
            )
        return pts

    def contains(self, points: np.ndarray) -> np.ndarray:
        """True where the point lies in the open domain."""
        pts = self._check_dim(points)
        if self.kind == "unit-disk":
            return np.sum(pts**2, axis=-1) < 1.0
        if self.kind == "quarter-disk":
            x, y = pts[..., 0], pts[..., 1]
            return (x > 0.0) & (y > 0.0) & (x**2 + y**2 < 1.0)
        if self.kind in ("ball3", "cball2"):
            return np.sum(pts**2, axis=-1) < 1.0
        # bidisk
        z = as_complex(pts)
        return (np.abs(z[..., 0]) < 1.0) & (np.abs(z[..., 1]) < 1.0)

    def boundary_distance(self, points: np.ndarray, validate: bool = True) -> np.ndarray:
        """Exact Euclidean distance to the boundary for interior points."""
        pts = self._check_dim(points)
        if validate and not np.all(self.contains(pts)):
            raise ValueError(f"point outside the open {self.kind}")
        if self.kind in ("unit-disk", "ball3", "cball2"):
            return 1.0 - np.sqrt(np.sum(pts**2, axis=-1))
        if self.kind == "quarter-disk":
            x, y = pts[..., 0], pts[..., 1]
            return np.minimum(np.minimum(x, y), 1.0 - np.hypot(x, y))
        z = as_complex(pts)
        return np.minimum(1.0 - np.abs(z[..., 0]), 1.0 - np.abs(z[..., 1]))

    # -- bulk geometry ------------------------------------------------------

    def bounding_box(self):
        lo = {
            "unit-disk": [-1.0, -1.0],
            "quarter-disk": [0.0, 0.0],
            "ball3": [-1.0] * 3,
            "cball2": [-1.0] * 4,
            "bidisk": [-1.0] * 4,
        }[self.kind]
        return np.array(lo), np.ones(self.ambient_dim)

    @property
    def incenter(self) -> np.ndarray:
        if self.kind == "quarter-disk":
            return np.array([_INV_SQRT2P1, _INV_SQRT2P1])
        return np.zeros(self.ambient_dim)

    @property
    def inradius(self) -> float:
        return _INV_SQRT2P1 if self.kind == "quarter-disk" else 1.0

    def default_anchor(self) -> np.ndarray:
        """Scaling anchor for exhaustions (interior point)."""
        if self.kind == "quarter-disk":
            return np.array([0.3, 0.3])
        return np.zeros(self.ambient_dim)

    def collar_volume(self, t: float) -> float:
        """Volume of the boundary collar {x in D : boundary_distance(x) < t}."""
        if t <= 0.0:
            return 0.0
        if t >= self.inradius:
            return self.volume
        s = 1.0 - t
        if self.kind == "unit-disk":
            return np.pi * (1.0 - s**2)
        if self.kind == "ball3":
            return (4.0 * np.pi / 3.0) * (1.0 - s**3)
        if self.kind == "cball2":
            return (np.pi**2 / 2.0) * (1.0 - s**4)
        if self.kind == "bidisk":
            return np.pi**2 * (1.0 - s**4)
        # quarter-disk: pi/4 minus area{x>=t, y>=t, r<=1-t}
        a, big_r = t, 1.0 - t
        b = np.sqrt(big_r**2 - a**2)
        inner = big_r**2 * (np.arcsin(b / big_r) - np.arcsin(a / big_r)) / 2.0 - a * b + a**2
        return np.pi / 4.0 - inner

    # -- Minkowski gauge about an anchor -------------------------------------

    def gauge(self, points: np.ndarray, anchor: np.ndarray | None = None) -> np.ndarray:
        """Gauge t(x) = inf{t>0 : x in anchor + t*(D - anchor)}.

        x lies in the scaled copy anchor + t*(D - anchor) iff gauge(x) < t.
        """
        pts = self._check_dim(points)
        a = self.default_anchor() if anchor is None else np.asarray(anchor, dtype=float)
        v = pts - a
        if self.kind in ("unit-disk", "ball3", "cball2"):
            return _ball_gauge(v, a)
        if self.kind == "bidisk":
            za, zv = as_complex(np.broadcast_to(a, pts.shape).copy()), as_complex(v)
            g1 = _ball_gauge_c(zv[..., 0], za[..., 0])
            g2 = _ball_gauge_c(zv[..., 1], za[..., 1])
            return np.maximum(g1, g2)
        # quarter-disk: intersection of {x>0}, {y>0}, unit disk
        tx = _halfplane_gauge(v[..., 0], a[0])
        ty = _halfplane_gauge(v[..., 1], a[1])
        tarc = _ball_gauge(v, a)
        return np.maximum(np.maximum(tx, ty), tarc)

    def max_extent(self, x: np.ndarray, t: float, anchor: np.ndarray | None = None) -> float:
        """sup of |x - q| over the closure of the scaled copy anchor + t*(D - anchor)."""
        a = self.default_anchor() if anchor is None else np.asarray(anchor, dtype=float)
        x = np.asarray(x, dtype=float)
        c = x - a + t * a  # x - q = c - t*u over u in closure(D)
        if self.kind in ("unit-disk", "ball3", "cball2"):
            return float(np.linalg.norm(c) + t)
        if self.kind == "bidisk":
            zc = as_complex(c[None, :])[0]
            return float(np.hypot(np.abs(zc[0]) + t, np.abs(zc[1]) + t))
        # quarter-disk: extreme points are the corner and the arc
        best = float(np.linalg.norm(c))
        for th in _arc_candidates(c):
            best = max(best, float(np.linalg.norm(c - t * np.array([np.cos(th), np.sin(th)]))))
        return best

    # -- boundary sampling ----------------------------------------------------

    def boundary_points(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """n points sampled on the boundary (uniform per stratum)."""
        if self.kind == "unit-disk":
            th = rng.uniform(0.0, 2.0 * np.pi, n)
            return np.stack([np.cos(th), np.sin(th)], axis=-1)
        if self.kind == "ball3":
            g = rng.standard_normal((n, 3))
            return g / np.linalg.norm(g, axis=-1, keepdims=True)
        if self.kind == "cball2":
            g = rng.standard_normal((n, 4))
            return g / np.linalg.norm(g, axis=-1, keepdims=True)
        if self.kind == "quarter-disk":
            # perimeter-proportional mixture of two edges and the arc
            per = np.array([1.0, 1.0, np.pi / 2.0])
            which = rng.choice(3, size=n, p=per / per.sum())
            u = rng.uniform(size=n)
            pts = np.empty((n, 2))
            pts[which == 0] = np.stack([u[which == 0], np.zeros((which == 0).sum())], axis=-1)
            pts[which == 1] = np.stack([np.zeros((which == 1).sum()), u[which == 1]], axis=-1)
            th = u[which == 2] * np.pi / 2.0
            pts[which == 2] = np.stack([np.cos(th), np.sin(th)], axis=-1)
            return pts
        # bidisk: torus and the two faces, by 3-volume of each stratum
        th1 = rng.uniform(0.0, 2.0 * np.pi, n)
        pts = np.empty((n, 4))
        which = rng.choice(3, size=n, p=[0.25, 0.25, 0.5])  # face1, face2, torus-ish mix
        r = np.sqrt(rng.uniform(size=n))
        th2 = rng.uniform(0.0, 2.0 * np.pi, n)
        z1 = np.exp(1j * th1)
        z2 = r * np.exp(1j * th2)
        face1 = np.stack([z1.real, z1.imag, z2.real, z2.imag], axis=-1)
        face2 = np.stack([z2.real, z2.imag, z1.real, z1.imag], axis=-1)
        torus = np.stack([z1.real, z1.imag, np.cos(th2), np.sin(th2)], axis=-1)
        pts[which == 0] = face1[which == 0]
        pts[which == 1] = face2[which == 1]
        pts[which == 2] = torus[which == 2]
        return pts


def _halfplane_gauge(v, a_coord):
    """Gauge of the constraint {coordinate > 0} about an anchor with a_coord > 0."""
    v = np.asarray(v, dtype=float)
    return np.where(v >= 0.0, 0.0, -v / a_coord)


def _ball_gauge(v, a):
    """Gauge of the unit ball about interior anchor a, for offsets v = x - a."""
    v = np.asarray(v, dtype=float)
    vv = np.sum(v**2, axis=-1)
    av = np.sum(v * a, axis=-1)
    disc = av**2 + vv * (1.0 - np.sum(a * a))
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = vv / (-av + np.sqrt(disc))
    return np.where(vv == 0.0, 0.0, tau)


def _ball_gauge_c(vz, az):
    v = np.stack([vz.real, vz.imag], axis=-1)
    a2 = np.stack([np.broadcast_to(az.real, vz.shape), np.broadcast_to(az.imag, vz.shape)], axis=-1)
    vv = np.sum(v**2, axis=-1)
    av = np.sum(v * a2, axis=-1)
    disc = av**2 + vv * (1.0 - np.sum(a2 * a2, axis=-1))
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = vv / (-av + np.sqrt(disc))
    return np.where(vv == 0.0, 0.0, tau)


def _arc_candidates(c):
    """Angles on [0, pi/2] that can maximize |c - t e^{i theta}|."""
    cands = [0.0, np.pi / 2.0]
    th = np.arctan2(c[1], c[0])
    # the near/far critical angles of the distance to the arc, clamped
    for cand in (th, th + np.pi):
        cand = np.mod(cand, 2.0 * np.pi)
        if 0.0 <= cand <= np.pi / 2.0:
            cands.append(cand)
    return cands


def dyadic_levels(n: int) -> np.ndarray:
    """Scale schedule t_j = 1 - 2^-j, j = 1..n."""
    j = np.arange(1, n + 1)
    return 1.0 - 0.5**j


@dataclass(frozen=True)
class Exhaustion:
    """Concentric exhaustion D_j = anchor + t_j*(D - anchor), t_1 < ... < t_J < 1."""

    domain: Domain
    levels: tuple = ()
    anchor: tuple = None
    _anchor_arr: np.ndarray = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        if levels.ndim != 1 or len(levels) < 1:
            raise ValueError("need at least one level")
        if not (np.all(np.diff(levels) > 0) and levels[0] > 0 and levels[-1] < 1):
            raise ValueError("levels must be strictly increasing in (0, 1)")
        object.__setattr__(self, "levels", tuple(levels))
        anchor = self.domain.default_anchor() if self.anchor is None else np.asarray(self.anchor, dtype=float)
        if not self.domain.contains(anchor):
            raise ValueError("anchor must be interior")
        object.__setattr__(self, "anchor", tuple(anchor))
        object.__setattr__(self, "_anchor_arr", anchor)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def _check_level(self, j: int):
        if not 1 <= j <= self.n_levels:
            raise ValueError(f"level {j} out of range 1..{self.n_levels}")

    def scale(self, j: int) -> float:
        self._check_level(j)
        return self.levels[j - 1]

    def level_member(self, j: int, points: np.ndarray) -> np.ndarray:
        """Membership predicate of the open subdomain D_j."""
        self._check_level(j)
        return self.domain.gauge(points, self._anchor_arr) < self.levels[j - 1]

    def gap(self, j: int) -> float:
        """Exact gap dist(D_j, boundary of D_{j+1}); D_{J+1} is the domain itself.

        For a convex domain scaled about an interior anchor the gap equals
        (t_{j+1} - t_j) * boundary_distance(anchor).
        """
        self._check_level(j)
        t_next = self.levels[j] if j < self.n_levels else 1.0
        delta_a = float(self.domain.boundary_distance(self._anchor_arr))
        return (t_next - self.levels[j - 1]) * delta_a

    def inner_gap(self, j: int) -> float:
        """Exact distance from the closure of D_j to the boundary of D."""
        self._check_level(j)
        delta_a = float(self.domain.boundary_distance(self._anchor_arr))
        return (1.0 - self.levels[j - 1]) * delta_a

    def annulus_member(self, j: int, points: np.ndarray) -> np.ndarray:
        """Membership in the annulus G_j between D_j and D_{j+1} (or D for j = J)."""
        self._check_level(j)
        g = self.domain.gauge(points, self._anchor_arr)
        hi = self.levels[j] if j < self.n_levels else 1.0
        return (g >= self.levels[j - 1]) & (g < hi)


def exhaustion_level(e: Exhaustion, j: int):
    """(membership predicate of D_j, exact gap r_j = dist(D_j, boundary D_{j+1}))."""
    e._check_level(j)
    return (lambda pts: e.level_member(j, pts)), e.gap(j)

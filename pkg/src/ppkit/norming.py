"""Norming weights: construction over an exhaustion and verification.

A positive continuous weight phi is norming when (1) every negative
subharmonic function has a finite weighted L1 norm, (2) compact sets carry a
uniform pointwise bound against the norm and (3) the boundary tails are
uniformly small.  The construction rests on the certified mass-transport
constants of the exhaustion: the weight is capped by 2^-j * d_{j+1} on the
j-th annulus, which makes the annulus contributions sum geometrically.

Verification quantifies over a closed-form family of negative subharmonic
test functions, which includes the corner-singular harmonic function on the
quarter disk whose unweighted integral diverges.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .chains import CompactSet, MassCertificate, pointwise_mass_constant, reference_ball
from .geometry import Domain, Exhaustion, as_complex
from .sampling import sample_nodes
from .utils import rng_for

BLEND = 0.25        # fraction of t_1 over which phi blends down from 1
EXT_POWER = 2.0     # decay power of (1 - tau) past the last configured level
CAP = 1.0 - 1e-6    # upper cap on the certified mass ratios b_j
LOG_FLOOR = -744.0  # exp threshold; below this a weight value cannot float
STABLE_RTOL = 0.02  # node-doubling stability threshold for "finite norm"


# -- closed-form negative subharmonic test family ------------------------------


def _disk_green_c(z, w):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(np.abs(z - w) / np.abs(1.0 - z * np.conj(w)))


def _disk_poisson_c(z, zeta):
    return (1.0 - np.abs(z) ** 2) / np.abs(z - zeta) ** 2


def quarter_to_disk(z):
    """Conformal map of the quarter disk onto the unit disk (corner to 1)."""
    w = z * z
    phi = -(w + 1.0 / w) / 2.0
    return (phi - 1j) / (phi + 1j)


@dataclass(frozen=True)
class FamilyMember:
    tag: str
    fn: object  # vectorized points -> values <= 0

    def __call__(self, pts):
        return self.fn(np.asarray(pts, dtype=float))


def test_family(domain: Domain) -> list:
    """Closed-form negative subharmonic functions on the disk or quarter disk."""
    if domain.kind == "unit-disk":
        y1 = 0.25 + 0.15j
        y2, y3 = -0.4 + 0.2j, 0.3 - 0.35j
        return [
            FamilyMember("green-pole", lambda p: _disk_green_c(as_complex(p)[..., 0], y1)),
            FamilyMember(
                "green-max-pair",
                lambda p: np.maximum(
                    _disk_green_c(as_complex(p)[..., 0], y2),
                    _disk_green_c(as_complex(p)[..., 0], y3),
                ),
            ),
            FamilyMember("neg-poisson-mass", lambda p: -_disk_poisson_c(as_complex(p)[..., 0], 1.0 + 0j)),
            FamilyMember("const-minus-one", lambda p: np.full(p.shape[:-1], -1.0)),
        ]
    if domain.kind == "quarter-disk":
        w1 = quarter_to_disk(0.45 + 0.35j)
        w2 = quarter_to_disk(0.25 + 0.55j)
        w3 = quarter_to_disk(0.6 + 0.2j)
        zeta0 = quarter_to_disk(np.exp(1j * np.pi / 4.0))
        zeta0 = zeta0 / abs(zeta0)

        def zc(p):
            return as_complex(p)[..., 0]

        def corner_singular(p):
            z = zc(p)
            return np.imag(1.0 / z**2)

        return [
            FamilyMember("green-pole", lambda p: _disk_green_c(quarter_to_disk(zc(p)), w1)),
            FamilyMember(
                "green-max-pair",
                lambda p: np.maximum(
                    _disk_green_c(quarter_to_disk(zc(p)), w2),
                    _disk_green_c(quarter_to_disk(zc(p)), w3),
                ),
            ),
            FamilyMember("neg-poisson-mass", lambda p: -_disk_poisson_c(quarter_to_disk(zc(p)), zeta0)),
            FamilyMember("const-minus-one", lambda p: np.full(p.shape[:-1], -1.0)),
            FamilyMember("Im(1/z^2)", corner_singular),
        ]
    raise ValueError(f"test family available for planar domains only, not {domain.kind}")


# -- the constructed weight ----------------------------------------------------


@dataclass
class NormingWeight:
    """Certified weight built over an exhaustion.

    Constants are carried in natural log; the weight itself is evaluated as
    exp of a piecewise-linear profile in the scale parameter (power-law decay
    in 1 - tau past the last level), floored only at the float limit.
    """

    exhaustion: Exhaustion
    log_c: np.ndarray      # certified pointwise-mass constants c_j, j = 1..J-1
    log_b: np.ndarray      # certified mass ratios b_j, j = 1..J-1
    log_d: np.ndarray      # running products d_j = b_1...b_{j-1}, j = 1..J
    knot_tau: np.ndarray
    knot_log: np.ndarray
    cf_table: list = field(default_factory=list)
    epsilon_schedule: np.ndarray = None

    @property
    def domain(self) -> Domain:
        return self.exhaustion.domain

    def log_phi(self, points) -> np.ndarray:
        tau = self.domain.gauge(points, np.asarray(self.exhaustion.anchor))
        t_last = self.knot_tau[-1]
        out = np.interp(tau, self.knot_tau, self.knot_log)
        ext = tau > t_last
        if np.any(ext):
            out = np.where(
                ext,
                self.knot_log[-1] + EXT_POWER * (np.log1p(-tau) - np.log1p(-t_last)),
                out,
            )
        return np.maximum(out, LOG_FLOOR)

    def phi(self, points) -> np.ndarray:
        return np.exp(self.log_phi(points))

    def annulus_ceiling_log(self, j: int) -> float:
        """log of the certified ceiling 2^-j * d_{j+1} of phi on the annulus G_j."""
        if not 1 <= j < self.exhaustion.n_levels:
            raise ValueError("annulus index out of range")
        return -j * np.log(2.0) + self.log_d[j]

    def report(self) -> dict:
        ln10 = np.log(10.0)
        return {
            "schema": "ppkit-weight-cert v1",
            "domain": self.domain.kind,
            "anchor": list(self.exhaustion.anchor),
            "levels": list(self.exhaustion.levels),
            "c_j": [float(np.exp(v)) for v in self.log_c],
            "b_j": [float(np.exp(v)) for v in self.log_b],
            "d_j": [float(np.exp(v)) for v in self.log_d],
            "log10_c_j": [float(v / ln10) for v in self.log_c],
            "log10_b_j": [float(v / ln10) for v in self.log_b],
            "log10_d_j": [float(v / ln10) for v in self.log_d],
            "CF_table": [
                {"F": desc, "log10_C": float(v / ln10), "valid_for": "norm truncated at the last level"}
                for desc, v in self.cf_table
            ],
            "epsilon_schedule": [float(e) for e in self.epsilon_schedule],
        }


def build_weight(exh: Exhaustion) -> NormingWeight:
    """Construct the certified weight for the exhaustion (needs >= 3 levels).

    c_j are the pointwise-mass constants of the level closures, b_j come from
    the fixed reference ball, and the weight profile interpolates the annulus
    ceilings 2^-j * d_{j+1} continuously in the scale parameter.
    """
    if exh.n_levels < 3:
        raise ValueError("weight construction needs an exhaustion with at least 3 levels")
    dom = exh.domain
    levels = np.asarray(exh.levels)
    n_lv = exh.n_levels
    b0 = reference_ball(dom)
    _assert_inside_first_level(exh, b0)

    vol_b0 = np.pi * b0.radius**2
    log_b, log_c = [], []
    for j in range(1, n_lv):
        cert_b = pointwise_mass_constant(exh, j, b0)
        log_b.append(min(np.log(vol_b0) + cert_b.log_c, np.log(CAP)))
        cert_c = pointwise_mass_constant(exh, j, CompactSet.level_closure(j))
        log_c.append(cert_c.log_c)
    log_b = np.asarray(log_b)
    log_c = np.asarray(log_c)
    log_d = np.concatenate([[0.0], np.cumsum(log_b)])  # d_1 = 1, d_j for j = 1..J

    # knots: phi = 1 on most of D_1, then the annulus ceilings v_j = 2^-j d_{j+1}
    v_log = np.array([-j * np.log(2.0) + log_d[j] for j in range(1, n_lv)])
    knot_tau = np.concatenate([[0.0, levels[0] * (1.0 - BLEND)], levels])
    knot_log = np.concatenate([[0.0, 0.0], v_log, [v_log[-1] - np.log(2.0)]])
    if knot_log[-1] < LOG_FLOOR + 40.0:
        raise ValueError(
            f"level {n_lv} fails to certify: the weight profile would leave "
            "float range; use fewer levels"
        )
    cf_table = [(CompactSet.level_closure(j).describe(), log_c[j - 1] - np.log(2.0)) for j in range(1, n_lv)]
    # certified tail constants 2^{-j+1} / inf phi over D_1; pessimistic, capped at 1
    inf_d1 = np.exp(v_log[0])
    eps = np.minimum(1.0, 2.0 ** (-np.arange(1, n_lv) + 1.0) / inf_d1)
    return NormingWeight(
        exhaustion=exh,
        log_c=log_c,
        log_b=log_b,
        log_d=log_d,
        knot_tau=knot_tau,
        knot_log=knot_log,
        cf_table=cf_table,
        epsilon_schedule=eps,
    )


def _assert_inside_first_level(exh: Exhaustion, b0: CompactSet):
    th = np.linspace(0.0, 2.0 * np.pi, 720, endpoint=False)
    ring = np.asarray(b0.center) + b0.radius * np.stack([np.cos(th), np.sin(th)], axis=-1)
    g = exh.domain.gauge(ring, np.asarray(exh.anchor))
    if not np.all(g < exh.scale(1) - 0.01):
        raise ValueError("reference ball is not safely inside the first level")


# -- verification ----------------------------------------------------------------


def _norm_on_nodes(member, pts, wts, phi_vals) -> float:
    vals = member(pts)
    mask = np.isfinite(vals)
    return float(np.sum(np.abs(vals[mask]) * wts[mask] * phi_vals[mask]))


def _default_nodes(domain: Domain, n: int, seed: int):
    if domain.kind == "quarter-disk":
        return sample_nodes(domain, n, seed, strategy="pole-refined", pole=np.zeros(2))
    return sample_nodes(domain, n, seed, strategy="pole-refined", pole=domain.incenter)


def _as_weight_fn(weight):
    if weight is None or (isinstance(weight, str) and weight == "uniform"):
        return lambda pts: np.ones(len(pts)), "uniform"
    if isinstance(weight, NormingWeight):
        return weight.phi, "built"
    return weight, "custom"


def verify_norming(
    weight,
    family,
    exh: Exhaustion,
    n_nodes: int = 200000,
    seed: int = 0,
    eps_target: float = 0.05,
    compacts=None,
) -> dict:
    """Check the three norming properties of the weight on the test family.

    (1) each member's weighted norm is stable under node doubling,
    (2) each configured compact set has max u strictly controlled by the norm
        (the empirical constant is the min achieved ratio over the family),
    (3) tail mass ratios decrease across levels, ending below eps_target.
    """
    dom = exh.domain
    weight_fn, weight_tag = _as_weight_fn(weight)
    if compacts is None:
        compacts = [CompactSet.level_closure(1), reference_ball(dom)]
    # same seed: the smaller set shares leading stratum draws with the larger,
    # so the comparison sees added resolution rather than independent noise
    pts1, wts1 = _default_nodes(dom, n_nodes, seed)
    pts2, wts2 = _default_nodes(dom, 2 * n_nodes, seed)
    phi1 = np.asarray(weight_fn(pts1), dtype=float)
    phi2 = np.asarray(weight_fn(pts2), dtype=float)
    if not (np.all(phi1 > 0.0) and np.all(phi2 > 0.0)):
        raise ValueError("weight must be positive on all nodes")
    tau2 = dom.gauge(pts2, np.asarray(exh.anchor))
    meshes = [(f, f.mesh(exh, 4000, seed + 7)) for f in compacts]

    members, failures = [], []
    cf_emp = {f.describe(): np.inf for f in compacts}
    for member in family:
        norm1 = _norm_on_nodes(member, pts1, wts1, phi1)
        norm2 = _norm_on_nodes(member, pts2, wts2, phi2)
        rel_change = abs(norm2 - norm1) / max(norm2, 1e-300)
        finite_ok = rel_change <= STABLE_RTOL
        rec = {
            "member": member.tag,
            "norm": norm2,
            "norm_half_nodes": norm1,
            "rel_change": rel_change,
            "finite": bool(finite_ok),
        }
        if not finite_ok:
            failures.append((member.tag, "finiteness"))
        comp_ok = True
        rec["compacts"] = {}
        for f, mesh in meshes:
            vals = member(mesh)
            max_u = float(np.max(vals[np.isfinite(vals)]))
            ratio = -max_u / norm2 if norm2 > 0 else np.nan
            rec["compacts"][f.describe()] = {"max_u": max_u, "ratio": ratio}
            if not max_u < 0.0:
                comp_ok = False
            else:
                cf_emp[f.describe()] = min(cf_emp[f.describe()], ratio)
        if not comp_ok:
            failures.append((member.tag, "compact-bound"))
        rec["compact_bound"] = bool(comp_ok)
        tails = []
        for j in range(1, exh.n_levels + 1):
            t = exh.scale(j)
            sel = tau2 >= t
            vals = member(pts2[sel])
            mask = np.isfinite(vals)
            tail = float(np.sum(np.abs(vals[mask]) * wts2[sel][mask] * phi2[sel][mask]))
            tails.append(tail / max(norm2, 1e-300))
        increases = np.diff(tails) > 1e-3
        tail_ok = finite_ok and (not np.any(increases)) and tails[-1] <= eps_target
        rec["tail_ratios"] = tails
        rec["tail"] = bool(tail_ok)
        if finite_ok and not tail_ok:
            failures.append((member.tag, "tail"))
        members.append(rec)

    return {
        "schema": "ppkit-report v1",
        "check": "norming-verify",
        "domain": dom.kind,
        "weight": weight_tag,
        "seed": seed,
        "n": n_nodes,
        "levels": list(exh.levels),
        "eps_target": eps_target,
        "family_results": members,
        "empirical_CF": {k: (None if not np.isfinite(v) else v) for k, v in cf_emp.items()},
        "failures": [{"member": m, "property": p} for m, p in failures],
        "pass": not failures,
    }


def equivalence_ratio(weight1, weight2, family, domain: Domain, n_nodes: int = 100000, seed: int = 3):
    """(min, max) of the norm ratios ||u||_w2 / ||u||_w1 over the family."""
    fn1, _ = _as_weight_fn(weight1)
    fn2, _ = _as_weight_fn(weight2)
    pts, wts = _default_nodes(domain, n_nodes, seed)
    w1 = np.asarray(fn1(pts), dtype=float)
    w2 = np.asarray(fn2(pts), dtype=float)
    ratios = []
    for member in family:
        n1 = _norm_on_nodes(member, pts, wts, w1)
        n2 = _norm_on_nodes(member, pts, wts, w2)
        ratios.append(n2 / n1)
    return float(np.min(ratios)), float(np.max(ratios))


def compact_lower_bound(weight, f: CompactSet, family, exh: Exhaustion,
                        n_nodes: int = 100000, seed: int = 4) -> float:
    """Largest c with c*||chi_F||_phi*||u||_phi <= -integral_F u phi over the family."""
    if f.kind == "point":
        raise ValueError("compact set of zero measure")
    dom = exh.domain
    fn, _ = _as_weight_fn(weight)
    pts, wts = _default_nodes(dom, n_nodes, seed)
    phi = np.asarray(fn(pts), dtype=float)
    if f.kind == "ball":
        inside = np.linalg.norm(pts - np.asarray(f.center), axis=-1) <= f.radius
    else:
        inside = dom.gauge(pts, np.asarray(exh.anchor)) <= exh.scale(f.level)
    chi_norm = float(np.sum(wts[inside] * phi[inside]))
    if chi_norm <= 0.0:
        raise ValueError("compact set carries no quadrature mass")
    best = np.inf
    for member in family:
        norm = _norm_on_nodes(member, pts, wts, phi)
        vals = member(pts[inside])
        mask = np.isfinite(vals)
        f_mass = -float(np.sum(vals[mask] * wts[inside][mask] * phi[inside][mask]))
        best = min(best, f_mass / (chi_norm * norm))
    return float(best)


def save_weight_csv(path, domain: Domain, points, quad_weights, phi_values):
    """Write a weight table in the ppkit-weight v1 format."""
    points = np.asarray(points, dtype=float)
    with open(path, "w") as fh:
        fh.write("# ppkit-weight v1\n")
        for row, w, p in zip(points, np.asarray(quad_weights), np.asarray(phi_values)):
            fields = [f"{c:.17g}" for c in row] + [f"{w:.17g}", f"{p:.17g}"]
            fh.write(",".join(fields) + "\n")

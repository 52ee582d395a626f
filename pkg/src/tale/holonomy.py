"""Geodesic loops, their rotational and translational parts, holonomy conditions.

A loop at q is encoded by a deck word w: it is the geodesic in the chart from
a lift q~ to w(q~).  Its rotation r is parallel transport around the loop,
pulled back to q~ by the differential of w, written in an orthonormal frame.
Its translation is t = r(gamma'(0)), which equals the pulled-back end velocity.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import NoDeckGroup, NoLoops, RadiusTooLarge, ConfigError
from .geodesics import (DEFAULT_TOL, CurvePath, integrate_geodesic, log_map, norm,
                        orthonormal_frame, check_frame)
from .metrics import MetricModel, curvature_norm

ANGLE_CLAMP = 1e-12


# ---------------------------------------------------------------------------
# rotation norms


def rotation_angles(R: np.ndarray) -> np.ndarray:
    """Rotation angles in [0, pi] read from the real Schur form of an orthogonal matrix."""
    T, _ = scipy.linalg.schur(np.asarray(R, dtype=float), output="real")
    n = T.shape[0]
    angles = []
    i = 0
    while i < n:
        if i + 1 < n and abs(T[i + 1, i]) > 1e-14:
            blk = T[i:i + 2, i:i + 2]
            c = 0.5 * (blk[0, 0] + blk[1, 1])
            s = math.sqrt(abs(blk[0, 1] * blk[1, 0]))
            angles.append(math.atan2(s, c))
            i += 2
        else:
            angles.append(math.atan2(0.0, T[i, i]))  # 0 for +1, pi for -1
            i += 1
    out = np.array(angles)
    out[out < ANGLE_CLAMP] = 0.0
    return out


def rotation_angle_norm(R: np.ndarray) -> float:
    """||r||: the largest rotation angle of an orthogonal matrix."""
    return float(np.max(rotation_angles(R)))


def matrix_deviation(R: np.ndarray) -> float:
    """|r - I| as an operator norm; equals 2 sin(||r|| / 2) for orthogonal r."""
    return float(np.linalg.norm(np.asarray(R) - np.eye(len(R)), 2))


def isoclinic_defect(R: np.ndarray) -> float:
    """Spread of |(r - I) v| over unit v; zero for r in a copy of SU(2) acting on R^4."""
    s = np.linalg.svd(np.asarray(R) - np.eye(len(R)), compute_uv=False)
    return float(s.max() - s.min())


# ---------------------------------------------------------------------------
# loops


@dataclass
class GeodesicLoop:
    base: np.ndarray
    word: tuple
    velocity: np.ndarray
    length: float
    rotation: np.ndarray
    translation: np.ndarray
    frame: np.ndarray
    end_frame: np.ndarray | None = field(default=None, repr=False)
    path: CurvePath | None = field(default=None, repr=False)

    @property
    def rot_norm(self) -> float:
        return rotation_angle_norm(self.rotation)

    @property
    def deviation(self) -> float:
        return matrix_deviation(self.rotation)

    def summary(self) -> dict:
        return {
            "word": list(self.word),
            "length": self.length,
            "rot_norm": self.rot_norm,
            "deviation": self.deviation,
            "translation": self.translation.tolist(),
        }


def loop_from_deck(model: MetricModel, q, word: Sequence[int], frame=None, tol: float = DEFAULT_TOL,
                   guess=None, starts: int = 1, keep_path: bool = False, jacobian=None) -> GeodesicLoop:
    """The short geodesic loop at q in the class of the deck word."""
    if model.deck is None:
        raise NoDeckGroup(f"{model.name} has no deck group")
    q = np.asarray(q, dtype=float)
    word = tuple(int(w) for w in word)
    E0 = orthonormal_frame(model, q) if frame is None else np.asarray(frame, dtype=float)
    check_frame(model, q, E0)
    A, b = model.deck.affine(word)
    target = A @ q + b
    sol = log_map(model, q, target, tol=tol, starts=starts, guess=guess, jacobian=jacobian)
    path = integrate_geodesic(model, q, sol.v, 1.0, tol, frame=E0)
    E1 = path.frames[-1]
    A_inv = np.linalg.inv(A)
    g = model.metric(q)
    R = E0.T @ g @ (A_inv @ E1)
    t_vec = E0.T @ g @ (A_inv @ path.velocities[-1])
    loop = GeodesicLoop(q, word, sol.v, norm(model, q, sol.v), R, t_vec, E0, E1, path if keep_path else None)
    loop._jacobian = sol.jacobian
    return loop


@dataclass
class LoopSearchConfig:
    directions: int = 64
    length_seeds: int = 16
    capture: float = 0.25


@dataclass
class LoopSearch:
    loops: list[GeodesicLoop]
    misses: int = 0
    strategy: str = "deck"


def _check_radius(model: MetricModel, q, radius: float):
    margin = model.domain_margin(q)
    if math.isfinite(margin) and radius / 2 >= margin:
        raise RadiusTooLarge(f"loops of length {radius} may leave the valid domain (margin {margin:.3g})")


def _deck_words_flat(model: MetricModel, q, radius: float):
    """Words whose chart displacement is below radius (flat models: exact lengths)."""
    deck = model.deck
    if model.name == "screw":
        K = int(math.ceil(radius))
        return [(k,) for k in range(-K, K + 1) if k]
    # lattice of translations: bound exponents through the Gram matrix
    T = np.array([g.power(1)[1] for g in deck.generators]).T
    G = T.T @ T
    bounds = np.ceil(radius * np.sqrt(np.diag(np.linalg.inv(G)))).astype(int)
    ranges = [range(-b, b + 1) for b in bounds]
    return [w for w in itertools.product(*ranges) if any(w) and np.linalg.norm(T @ np.array(w)) < radius]


def find_loops(model: MetricModel, q, radius: float, strategy: str = "deck", tol: float = DEFAULT_TOL,
               frame=None, config: LoopSearchConfig | None = None) -> LoopSearch:
    """All geodesic loops at q of length below radius, sorted by length."""
    if model.deck is None:
        raise NoDeckGroup(f"{model.name} has no deck group, so it has no geodesic loops")
    q = np.asarray(q, dtype=float)
    _check_radius(model, q, radius)
    E0 = orthonormal_frame(model, q) if frame is None else frame
    if strategy == "deck":
        loops = _deck_enumeration(model, q, radius, tol, E0)
        misses = 0
    elif strategy == "shooting":
        loops, misses = _shooting(model, q, radius, tol, E0, config or LoopSearchConfig())
    else:
        raise ConfigError(f"unknown loop search strategy {strategy!r}")
    loops.sort(key=lambda lp: (round(lp.length, 12), lp.word))
    if not loops:
        raise NoLoops(f"no geodesic loops of length < {radius} at {q.tolist()}")
    return LoopSearch(loops, misses, strategy)


def _deck_enumeration(model, q, radius, tol, E0):
    if model.is_flat:
        return [lp for w in _deck_words_flat(model, q, radius)
                for lp in [loop_from_deck(model, q, w, E0, tol)] if lp.length < radius]
    if model.deck.rank != 1:
        raise ConfigError("deck enumeration on curved models supports cyclic deck groups")
    loops = []
    for sign in (1, -1):
        k, guess = 1, None
        while True:
            lp = loop_from_deck(model, q, (sign * k,), E0, tol, guess=guess)
            if lp.length >= radius:
                break
            loops.append(lp)
            # lengths grow almost linearly in k, which also gives the next guess
            guess = lp.velocity * (k + 1) / k
            k += 1
    return loops


def _fibonacci_sphere(n_points: int, dim: int, seed: int = 0) -> np.ndarray:
    if dim == 3:
        i = np.arange(n_points) + 0.5
        phi = np.arccos(1 - 2 * i / n_points)
        th = math.pi * (1 + 5 ** 0.5) * i
        return np.stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)], axis=1)
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((n_points, dim))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def _shooting(model, q, radius, tol, E0, cfg: LoopSearchConfig):
    dirs = _fibonacci_sphere(cfg.directions, model.dim)
    lengths = np.linspace(radius / cfg.length_seeds, radius, cfg.length_seeds, endpoint=False)
    if model.is_flat:
        cand = _deck_words_flat(model, q, 2 * radius)
    else:
        cand = [(k,) for k in range(-int(2 * radius) - 1, int(2 * radius) + 2) if k]
    images = np.array([model.deck.apply(w, q) for w in cand])
    found: dict[tuple, GeodesicLoop] = {}
    misses = 0
    for u in dirs:
        v_unit = E0 @ u
        for L in lengths:
            try:
                end = integrate_geodesic(model, q, L * v_unit, 1.0, tol).end
            except Exception:
                misses += 1
                continue
            d = np.linalg.norm(images - end, axis=1)
            j = int(np.argmin(d))
            if d[j] > cfg.capture * L:
                misses += 1
                continue
            w = cand[j]
            if w in found:
                continue
            lp = loop_from_deck(model, q, w, E0, tol)
            if lp.length < radius:
                found[w] = lp
    return list(found.values()), misses


def power_loop_norms(model: MetricModel, q, word: Sequence[int], powers: Sequence[int], tol=DEFAULT_TOL):
    """(k, ||r(gamma^k)||, folded k * angle) for the loops in the classes of word^k."""
    base_angles = rotation_angles(loop_from_deck(model, q, word).rotation)
    out = []
    for k in powers:
        lp = loop_from_deck(model, q, tuple(k * w for w in word))
        folded = max(abs(math.remainder(k * a, 2 * math.pi)) for a in base_angles)
        out.append((k, lp.rot_norm, folded))
    return out


# ---------------------------------------------------------------------------
# holonomy conditions


@dataclass
class HolonomyConfig:
    kappa: float = 0.4
    theta_H: float = math.pi / 100  # default epsilon_0
    C_H: float = math.pi / 2
    epsilon: Callable[[float], float] = field(default=lambda r: r ** -0.5)


def check_holonomy_conditions(model: MetricModel, radii: Sequence[float],
                              config: HolonomyConfig | None = None, tol: float = DEFAULT_TOL) -> list[dict]:
    """Evaluate the three holonomy conditions at points of the model's radial ray."""
    cfg = config or HolonomyConfig()
    report = []
    for r in radii:
        q = model.radial_point(r)
        rad = cfg.kappa * model.radius_of(q)
        try:
            loops = find_loops(model, q, rad, tol=tol).loops
        except NoLoops:
            loops = []
        sup_rot = max((lp.rot_norm for lp in loops), default=0.0)
        sup_scaled = max((model.radius_of(q) * lp.rot_norm / lp.length for lp in loops), default=0.0)
        report.append({
            "radius": float(r),
            "loops": len(loops),
            "sup_rot_norm": sup_rot,
            "sup_scaled": sup_scaled,
            "hc_pass": bool(sup_rot <= cfg.theta_H),
            "hcprime_pass": bool(sup_scaled <= cfg.C_H),
            "shc_pass": bool(sup_rot <= cfg.epsilon(float(r))),
        })
    return report


def loop_curvature_sup(model: MetricModel, loop: GeodesicLoop, samples: int = 5) -> float:
    """max |Rm| sampled along a loop."""
    if model.is_flat:
        return 0.0
    ts = np.linspace(0.0, 1.0, samples)
    path = integrate_geodesic(model, loop.base, loop.velocity, 1.0, t_eval=ts)
    return max(curvature_norm(model, x) for x in path.points)

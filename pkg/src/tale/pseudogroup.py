"""Short-loop pseudo-groups and sliding of loops along curves.

On quotient models the pseudo-group at q is the set of deck words whose loop
at q is shorter than rho; the product is word composition.  Sliding follows a
loop continuously along a curve: in the chart cover the slid loop at alpha(t)
is the geodesic from alpha(t) to w(alpha(t)) on the branch continued from the
previous sample.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (LeftDomain, NoConvergence, NoDeckGroup, NotInDomain, SlideFailed,
                     StepUnderflow)
from .geodesics import DEFAULT_TOL, CurvePath, orthonormal_frame
from .holonomy import (GeodesicLoop, find_loops, loop_curvature_sup, loop_from_deck,
                       matrix_deviation, rotation_angle_norm)
from .metrics import MetricModel


@dataclass
class PseudoGroup:
    model: MetricModel
    base: np.ndarray
    rho: float
    loops: list[GeodesicLoop]
    frame: np.ndarray

    def __post_init__(self):
        self._by_word = {lp.word: lp for lp in self.loops}

    @property
    def identity(self) -> tuple:
        return self.model.deck.identity()

    def __contains__(self, word) -> bool:
        return tuple(word) in self._by_word or not any(word)

    def element(self, word) -> GeodesicLoop | None:
        return self._by_word.get(tuple(word))

    def translation(self, word) -> np.ndarray:
        if not any(word):
            return np.zeros(self.model.dim)
        return self._by_word[tuple(word)].translation

    def product(self, a, b) -> tuple | None:
        """a * b as a word, or None when the product leaves the pseudo-group."""
        w = self.model.deck.compose(a, b)
        return w if w in self else None

    def inverse(self, a) -> tuple:
        return self.model.deck.inverse(a)

    def commutator(self, a, b) -> tuple | None:
        deck = self.model.deck
        ab = self.product(a, b)
        if ab is None:
            return None
        aba = self.product(ab, deck.inverse(a))
        if aba is None:
            return None
        return self.product(aba, deck.inverse(b))

    def words(self) -> list[tuple]:
        return [lp.word for lp in self.loops]

    def almost_translation_theta(self) -> float:
        """Smallest theta with ||r(a)|| <= (theta / rho) |t(a)| on the pseudo-group."""
        return max((self.rho * lp.rot_norm / lp.length for lp in self.loops), default=0.0)

    def product_defects(self) -> list[dict]:
        """|t(a*b) - t(a) - t(b)| and the commutator translation for all defined pairs."""
        out = []
        for a in self.words():
            for b in self.words():
                ab = self.product(a, b)
                if ab is None:
                    continue
                ta, tb = self.translation(a), self.translation(b)
                defect = float(np.linalg.norm(self.translation(ab) - ta - tb))
                c = self.commutator(a, b)
                comm = None if c is None else float(np.linalg.norm(self.translation(c)))
                out.append({"a": a, "b": b, "defect": defect, "commutator": comm,
                            "scale": float(np.linalg.norm(ta) * np.linalg.norm(tb)) / self.rho})
        return out

    def abelian_report(self, theta: float | None = None) -> dict:
        theta = self.almost_translation_theta() if theta is None else theta
        rows = self.product_defects()
        worst_prod = max((r["defect"] / r["scale"] for r in rows if r["scale"] > 0), default=0.0)
        worst_comm = max((r["commutator"] / r["scale"] for r in rows
                          if r["commutator"] is not None and r["scale"] > 0), default=0.0)
        return {
            "theta": theta,
            "pairs": len(rows),
            "max_product_ratio": worst_prod,
            "max_commutator_ratio": worst_comm,
            "product_bound_holds": bool(worst_prod <= 2 * theta + 1e-9),
            "commutator_bound_holds": bool(worst_comm <= 3 * theta + 1e-9),
        }


def build_pseudo_group(model: MetricModel, q, rho: float, strategy: str = "deck",
                       tol: float = DEFAULT_TOL) -> PseudoGroup:
    q = np.asarray(q, dtype=float)
    E0 = orthonormal_frame(model, q)
    loops = find_loops(model, q, rho, strategy=strategy, tol=tol, frame=E0).loops
    return PseudoGroup(model, q, rho, loops, E0)


# ---------------------------------------------------------------------------
# sliding


@dataclass
class SlidingTrace:
    words: list[tuple]
    t: np.ndarray
    points: np.ndarray
    radii: np.ndarray
    lengths: np.ndarray        # (loops, samples)
    rot_norms: np.ndarray
    deviations: np.ndarray
    rotations: np.ndarray      # (loops, samples, n, n) in the transported frame
    translations: np.ndarray   # (loops, samples, n)
    curvature_sup: np.ndarray | None = None

    def angle(self, i: int, j: int) -> np.ndarray:
        a, b = self.translations[i], self.translations[j]
        c = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        return np.arccos(np.clip(c, -1.0, 1.0))

    def pairwise_angles(self) -> dict:
        m = len(self.words)
        return {(i, j): self.angle(i, j) for i in range(m) for j in range(i + 1, m)}

    def to_rows(self) -> list[dict]:
        rows = []
        for i, w in enumerate(self.words):
            for k in range(len(self.t)):
                rows.append({"word": " ".join(map(str, w)), "t": float(self.t[k]),
                             "radius": float(self.radii[k]), "length": float(self.lengths[i, k]),
                             "rot_norm": float(self.rot_norms[i, k]),
                             "deviation": float(self.deviations[i, k])})
        return rows


def _reorthonormalise(model, x, E):
    G = E.T @ model.metric(x) @ E
    w, U = np.linalg.eigh(G)
    return E @ (U @ np.diag(w ** -0.5) @ U.T)


def slide(model: MetricModel, words: Sequence[Sequence[int]], curve: CurvePath, tol: float = DEFAULT_TOL,
          with_curvature: bool = False, jump_tol: float = 0.25) -> SlidingTrace:
    """Slide the loops of the given deck words along a curve carrying a transported frame."""
    if model.deck is None:
        raise NoDeckGroup("sliding without a deck group is not supported: such models have no loops")
    if curve.frames is None:
        raise SlideFailed(0.0, "curve must carry a transported frame")
    words = [tuple(int(x) for x in w) for w in words]
    N, n = len(curve.t), model.dim
    m = len(words)
    lengths = np.zeros((m, N))
    rot = np.zeros((m, N))
    dev = np.zeros((m, N))
    rots = np.zeros((m, N, n, n))
    trans = np.zeros((m, N, n))
    curv = np.zeros((m, N)) if with_curvature else None
    state: list[dict] = [{} for _ in words]
    for k in range(N):
        x = curve.points[k]
        if not model.domain_margin(x) > 0:
            raise NotInDomain(f"curve leaves the domain at t={curve.t[k]:.6g}")
        E = _reorthonormalise(model, x, curve.frames[k])
        for i, w in enumerate(words):
            st = state[i]
            guess = st.get("v")
            if "v_prev" in st and "v" in st:
                guess = 2 * st["v"] - st["v_prev"]  # linear continuation in the chart
            try:
                lp = loop_from_deck(model, x, w, E, tol, guess=guess, jacobian=st.get("J"))
            except (NoConvergence, LeftDomain, StepUnderflow) as exc:
                raise SlideFailed(float(curve.t[k]), f"loop {w} lost at t={curve.t[k]:.6g}: {exc}") from exc
            if "L" in st and abs(lp.length - st["L"]) > jump_tol * st["L"]:
                raise SlideFailed(float(curve.t[k]), f"loop {w} jumped branch at t={curve.t[k]:.6g}")
            st["v_prev"], st["v"], st["L"], st["J"] = st.get("v"), lp.velocity, lp.length, lp._jacobian
            if st["v_prev"] is None:
                del st["v_prev"]
            lengths[i, k] = lp.length
            rots[i, k] = lp.rotation
            rot[i, k] = rotation_angle_norm(lp.rotation)
            dev[i, k] = matrix_deviation(lp.rotation)
            trans[i, k] = lp.translation
            if with_curvature:
                curv[i, k] = loop_curvature_sup(model, lp)
    radii = np.array([model.radius_of(x) for x in curve.points])
    return SlidingTrace(words, curve.t.copy(), curve.points.copy(), radii, lengths, rot, dev, rots, trans, curv)


# ---------------------------------------------------------------------------
# discrete forms of the sliding estimates


def length_step_check(trace: SlidingTrace, i: int = 0) -> dict:
    """|l(t+h) - l(t)| <= h * max |r - I| + 10 h^2 at every step."""
    h = np.diff(trace.t)
    dl = np.abs(np.diff(trace.lengths[i]))
    dmax = np.maximum(trace.deviations[i][:-1], trace.deviations[i][1:])
    rhs = h * dmax + 10 * h**2
    sharp = h * dmax
    return {
        "steps": int(len(h)),
        "passes": bool(np.all(dl <= rhs)),
        "max_ratio": float(np.max(dl / rhs)) if len(h) else 0.0,
        "max_sharp_ratio": float(np.max(dl / np.maximum(sharp, 1e-300))) if len(h) else 0.0,
    }


def rotation_step_check(trace: SlidingTrace, i: int = 0) -> dict:
    """Change of |r(t) X - X| per step against h * l(t) * max|Rm| + 10 h^2, X in the transported frame."""
    if trace.curvature_sup is None:
        raise ValueError("trace was computed without curvature samples")
    n = trace.rotations.shape[-1]
    h = np.diff(trace.t)
    f = np.linalg.norm(trace.rotations[i] - np.eye(n)[None], axis=1)  # (samples, n): |(r - I) e_j|
    df = np.max(np.abs(np.diff(f, axis=0)), axis=1)
    lK = np.maximum(trace.lengths[i] * trace.curvature_sup[i], 0.0)
    rhs = h * np.maximum(lK[:-1], lK[1:]) + 10 * h**2
    return {"steps": int(len(h)), "passes": bool(np.all(df <= rhs)),
            "max_ratio": float(np.max(df / rhs)) if len(h) else 0.0}


def ray_rotation_constant(trace: SlidingTrace, K1: Callable[[float], float], i: int = 0) -> float:
    """sup ||r(t)|| / (l(t) K1(t / 2)) along the trace, with t the radius."""
    vals = [rn / (L * K1(r / 2)) for rn, L, r in zip(trace.rot_norms[i], trace.lengths[i], trace.radii)]
    return float(max(vals))


def angle_drift(trace: SlidingTrace, i: int, j: int, K0: Callable[[float], float]) -> dict:
    """|angle(t) - Theta| against K0(t / 4) with Theta the angle at the last sample."""
    ang = trace.angle(i, j)
    theta_inf = float(ang[-1])
    ratios = [abs(a - theta_inf) / max(K0(r / 4), 1e-300) for a, r in zip(ang[:-1], trace.radii[:-1])]
    return {"theta_inf": theta_inf, "max_drift": float(np.max(np.abs(ang - theta_inf))),
            "constant": float(max(ratios, default=0.0))}


def product_consistency(model: MetricModel, trace: SlidingTrace, a: int, b: int, tol=DEFAULT_TOL) -> float:
    """Compare the slid loop of a*b with the product loop recomputed from a cold start.

    The trace must contain the composed word.  Returns the worst difference in
    length and rotation norm over all samples.
    """
    w = model.deck.compose(trace.words[a], trace.words[b])
    if w not in trace.words:
        raise ValueError(f"trace does not contain the product word {w}")
    c = trace.words.index(w)
    worst = 0.0
    for k in range(len(trace.t)):
        lp = loop_from_deck(model, trace.points[k], w, None, tol)
        worst = max(worst, abs(lp.length - trace.lengths[c, k]), abs(lp.rot_norm - trace.rot_norms[c, k]))
    return float(worst)

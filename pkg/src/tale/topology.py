"""End topology of four-dimensional ends: Hitchin-Thorpe slack, boundaries, G(A), torus at infinity."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Sequence

import numpy as np

from .errors import (BoundTooSmall, ConfigError, InconsistentInvariants, InfiniteOrder, InvalidParameter,
                     MissingEta, NotConverged, NotFinite, UnknownEndType)
from .exact import parse_exact

END_TYPES = ("ALE", "ALF-cyclic", "ALF-dihedral", "ALG", "ALH")
MONODROMIES = ("1", "Z2", "Z3", "Z4", "Z6")


def load_tables() -> dict:
    with resources.files("tale").joinpath("data/tables.json").open(encoding="utf-8") as fh:
        return json.load(fh)


TABLES = load_tables()


def _sgn(x) -> int:
    # sgn 0 = 0, so the trivial bundle gets eta = 0
    return (x > 0) - (x < 0)


def _to_int(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        if isinstance(value, float) and value.is_integer():
            return int(value)
        raise InvalidParameter(f"{name} must be an integer, got {value!r}")
    return int(value)


@dataclass
class EndDescriptor:
    end_type: str
    chi: int
    tau: int
    gamma_order: int | None = None
    eta_ale: Fraction | None = None
    euler_number: int | None = None
    monodromy: str | None = None

    def __post_init__(self):
        if self.end_type not in END_TYPES:
            raise UnknownEndType(f"unknown end type {self.end_type!r}; expected one of {', '.join(END_TYPES)}")
        self.chi = _to_int("chi", self.chi)
        self.tau = _to_int("tau", self.tau)
        spec = TABLES["end_types"][self.end_type]
        allowed = set(spec["fields"]) | set(spec["optional"])
        present = {k for k in ("gamma_order", "eta_ale", "euler_number", "monodromy")
                   if getattr(self, k) is not None}
        for k in spec["fields"]:
            if k not in ("chi", "tau") and getattr(self, k) is None:
                raise InconsistentInvariants(f"{self.end_type} ends need {k}")
        extra = present - allowed
        if extra:
            raise InconsistentInvariants(f"{self.end_type} ends do not take {', '.join(sorted(extra))}")
        if self.gamma_order is not None:
            self.gamma_order = _to_int("gamma_order", self.gamma_order)
            if self.gamma_order < 1:
                raise InconsistentInvariants("|Gamma| must be at least 1")
        if self.euler_number is not None:
            self.euler_number = _to_int("euler_number", self.euler_number)
        if self.monodromy is not None:
            self.monodromy = str(self.monodromy)
            if self.monodromy not in MONODROMIES:
                raise InconsistentInvariants(f"monodromy must be one of {', '.join(MONODROMIES)}")
        if self.eta_ale is not None:
            try:
                self.eta_ale = parse_exact(self.eta_ale)
            except (ValueError, TypeError) as exc:
                raise InvalidParameter(f"cannot read eta {self.eta_ale!r}") from exc
            if not isinstance(self.eta_ale, Fraction):
                raise NotFinite("eta must be rational")

    @classmethod
    def from_dict(cls, d: dict) -> "EndDescriptor":
        d = dict(d)
        known = {"end_type", "chi", "tau", "gamma_order", "eta_ale", "euler_number", "monodromy"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown descriptor keys {sorted(unknown)}")
        if "end_type" not in d:
            raise ConfigError("descriptor needs end_type")
        for k in ("chi", "tau"):
            if k not in d:
                raise ConfigError(f"descriptor needs {k}")
            if isinstance(d[k], float) and not math.isfinite(d[k]):
                raise NotFinite(f"{k} is not finite")
        return cls(**d)

    def to_dict(self) -> dict:
        out = {"end_type": self.end_type, "chi": self.chi, "tau": self.tau}
        for k in ("gamma_order", "euler_number", "monodromy"):
            if getattr(self, k) is not None:
                out[k] = getattr(self, k)
        if self.eta_ale is not None:
            out["eta_ale"] = str(self.eta_ale)
        return out


def eta_lambda(d: EndDescriptor) -> tuple[Fraction, Fraction]:
    """(eta, lambda) for the end type."""
    t = d.end_type
    if t == "ALE":
        if d.eta_ale is None:
            raise MissingEta("ALE ends need eta(S^3/Gamma); see ale_eta_from_equality")
        return d.eta_ale, Fraction(1, d.gamma_order)
    if t == "ALF-cyclic":
        e = d.euler_number
        return Fraction(-e, 3) + _sgn(e), Fraction(0)
    if t == "ALF-dihedral":
        return Fraction(-d.euler_number, 3), Fraction(0)
    if t == "ALG":
        return Fraction(TABLES["alg_eta"][d.monodromy]), Fraction(0)
    return Fraction(0), Fraction(0)


@dataclass
class HTReport:
    descriptor: EndDescriptor
    lam: Fraction
    eta: Fraction
    slack: Fraction

    @property
    def equality(self) -> bool:
        return abs(self.slack) <= 1e-12

    def to_dict(self) -> dict:
        return {"descriptor": self.descriptor.to_dict(), "lambda": str(self.lam), "eta": str(self.eta),
                "slack": str(self.slack), "slack_value": float(self.slack), "equality": self.equality,
                "boundary": classify_boundary(self.descriptor)}


def hitchin_thorpe(d: EndDescriptor) -> HTReport:
    """slack = 2(chi - lambda) - 3|tau + eta|."""
    eta, lam = eta_lambda(d)
    slack = 2 * (d.chi - lam) - 3 * abs(d.tau + eta)
    return HTReport(d, lam, eta, slack)


def ale_eta_from_equality(chi: int, tau: int, gamma_order: int) -> Fraction:
    """eta solving 2(chi - 1/|Gamma|) + 3(tau + eta) = 0.

    The sign depends on the orientation convention for eta.
    """
    return -Fraction(tau) - Fraction(2, 3) * (chi - Fraction(1, gamma_order))


def kronheimer(k: int) -> dict:
    """chi, tau, |Gamma| of the A_k ALE family (|Gamma| = k + 1)."""
    return {"chi": k + 1, "tau": -k, "gamma_order": k + 1}


def alf_a(k: int) -> dict:
    """chi, tau, e of the ALF-A_k family; k = -1 is the flat R^3 x S^1."""
    if k < -1:
        raise InvalidParameter("ALF-A_k needs k >= -1")
    if k == -1:
        return {"chi": 0, "tau": 0, "euler_number": 0}
    return {"chi": k + 1, "tau": -k, "euler_number": -k - 1}


def alf_d(k: int) -> dict:
    """chi, tau, e of the ALF-D_k family (e = 2 - k)."""
    return {"chi": k + 1, "tau": -k, "euler_number": 2 - k}


# ---------------------------------------------------------------------------
# boundaries and monodromy


def classify_boundary(d: EndDescriptor) -> str:
    b = TABLES["boundary"]
    t = d.end_type
    if t == "ALH":
        return b["ALH"]
    if t == "ALG":
        return b["ALG"].format(name=TABLES["monodromy"][d.monodromy]["name"])
    if t == "ALF-cyclic":
        e = abs(d.euler_number)
        if e == 0:
            return b[t]["zero"]
        return b[t]["one"] if e == 1 else b[t]["general"].format(n=e)
    if t == "ALF-dihedral":
        e = abs(d.euler_number)
        return b[t]["zero"] if e == 0 else b[t]["general"].format(n=4 * e)
    return b["ALE"]["trivial"] if d.gamma_order == 1 else b["ALE"]["general"].format(n=d.gamma_order)


def monodromy_class(L) -> dict:
    """Order and conjugacy representative of a finite-order element of SL(2, Z)."""
    L = np.asarray(L)
    if L.shape != (2, 2) or not np.all(np.equal(np.mod(L, 1), 0)):
        raise InvalidParameter("monodromy must be a 2x2 integer matrix")
    L = L.astype(np.int64)
    det = int(round(np.linalg.det(L)))
    if det != 1:
        raise InvalidParameter(f"monodromy must have determinant 1, got {det}")
    tr = int(np.trace(L))
    table = {v["trace"]: k for k, v in TABLES["monodromy"].items()}
    if tr not in table:
        raise InfiniteOrder(f"trace {tr} gives an element of infinite order")
    key = table[tr]
    order = TABLES["monodromy"][key]["order"]
    # trace +-2 is also the trace of parabolic elements, so check the power
    P = np.eye(2, dtype=np.int64)
    for _ in range(order):
        P = P @ L
    if not np.array_equal(P, np.eye(2, dtype=np.int64)):
        raise InfiniteOrder(f"{L.tolist()} has trace {tr} but L^{order} is not the identity")
    rep = TABLES["monodromy"][key]
    return {"order": order, "group": key, "representative": rep["name"], "matrix": rep["matrix"]}


# ---------------------------------------------------------------------------
# G(A)


def _orthogonality_defect(A, W) -> float:
    A = np.asarray(A, dtype=float)
    M = A @ W @ np.linalg.inv(A)
    return float(np.max(np.abs(M.T @ M - np.eye(len(A)))))


def enumerate_G(A, entry_bound: int | None = None, tol: float = 1e-10) -> list[np.ndarray]:
    """All W in GL(m, Z) with A W A^-1 orthogonal, found column by column from W^T G W = G."""
    A = np.asarray(A, dtype=float)
    m = A.shape[0]
    if A.shape != (m, m) or m > 3:
        raise InvalidParameter("enumerate_G takes an invertible m x m matrix with m <= 3")
    if abs(np.linalg.det(A)) < 1e-12:
        raise InvalidParameter("A is singular")
    if entry_bound is None:
        entry_bound = int(math.ceil(np.linalg.cond(A) - 1e-9))
    G = A.T @ A
    scale = np.max(np.abs(G))
    box = np.array(list(itertools.product(range(-entry_bound, entry_bound + 1), repeat=m)), dtype=np.int64)
    norms = np.einsum("ij,jk,ik->i", box, G, box)
    cols = [box[np.abs(norms - G[j, j]) <= tol * scale] for j in range(m)]
    found = []

    def extend(chosen):
        j = len(chosen)
        if j == m:
            W = np.stack(chosen, axis=1)
            if abs(round(np.linalg.det(W))) == 1:
                found.append(W)
            return
        for w in cols[j]:
            if all(abs(float(c @ G @ w) - G[i, j]) <= tol * scale for i, c in enumerate(chosen)):
                extend(chosen + [w])

    extend([])
    # closure under products and inverses
    keys = {W.tobytes() for W in found}
    for U in found:
        Ui = np.rint(np.linalg.inv(U)).astype(np.int64)
        if Ui.tobytes() not in keys:
            raise BoundTooSmall(f"entry bound {entry_bound}: inverse of an element is missing")
        for V in found:
            if (U @ V).tobytes() not in keys:
                raise BoundTooSmall(f"entry bound {entry_bound}: the set is not closed under products")
    found.sort(key=lambda W: tuple(W.ravel()))
    return found


def group_closure(elements: Sequence[np.ndarray]) -> bool:
    keys = {np.asarray(W, dtype=np.int64).tobytes() for W in elements}
    return all((np.asarray(U) @ np.asarray(V)).astype(np.int64).tobytes() in keys
               for U in elements for V in elements)


# ---------------------------------------------------------------------------
# flat torus at infinity


@dataclass
class FlatTorusAtInfinity:
    m: int
    lengths: list[float]
    angles: dict
    gram: np.ndarray
    A_matrix: np.ndarray
    G_infinity: list[np.ndarray] = field(repr=False)
    fit: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"m": self.m, "lengths": self.lengths,
                "angles": {f"{i + 1},{j + 1}": a for (i, j), a in self.angles.items()},
                "gram": self.gram.tolist(), "A_matrix": self.A_matrix.tolist(),
                "G_infinity_order": len(self.G_infinity),
                "G_infinity": [W.tolist() for W in self.G_infinity], "fit": self.fit}


def fit_limit(t: Sequence[float], y: Sequence[float], tol: float) -> dict:
    """Fit y = L + a/t + b/t^2 on the samples and on their second half; NotConverged if they disagree."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(t) < 2:
        raise NotConverged("need at least two samples to fit a limit")

    def _fit(tt, yy):
        k = min(3, len(tt))
        X = np.stack([tt ** -i for i in range(k)], axis=1)
        c, *_ = np.linalg.lstsq(X, yy, rcond=None)
        return float(c[0])

    full = _fit(t, y)
    half = _fit(t[len(t) // 2:], y[len(t) // 2:])
    change = abs(full - half)
    if change > tol:
        raise NotConverged(f"limit estimate moves by {change:.3g} between windows (tolerance {tol:.3g})")
    return {"limit": full, "window_change": change, "last": float(y[-1])}


def torus_from_gram(gram, entry_bound: int | None = None):
    gram = np.asarray(gram, dtype=float)
    if np.any(np.linalg.eigvalsh(gram) <= 0):
        raise NotConverged("Gram matrix is not positive definite")
    A = np.linalg.cholesky(gram).T  # columns c_i with A^T A = gram
    return A, enumerate_G(A, entry_bound)


def torus_at_infinity(trace, indices: Sequence[int] | None = None, tol: float = 1e-3) -> FlatTorusAtInfinity:
    """Limits of lengths and angles of slid basis loops along a ray."""
    idx = list(range(len(trace.words))) if indices is None else list(indices)
    m = len(idx)
    t = np.asarray(trace.radii, dtype=float)
    fits = {}
    L = []
    for a, i in enumerate(idx):
        f = fit_limit(t, trace.lengths[i], tol * max(1.0, float(np.abs(trace.lengths[i]).max())))
        fits[f"L{a + 1}"] = f
        L.append(f["limit"])
    angles = {}
    for a in range(m):
        for b in range(a + 1, m):
            f = fit_limit(t, trace.angle(idx[a], idx[b]), tol)
            fits[f"theta{a + 1}{b + 1}"] = f
            angles[(a, b)] = f["limit"]
    gram = np.zeros((m, m))
    for a in range(m):
        gram[a, a] = L[a] ** 2
        for b in range(a + 1, m):
            gram[a, b] = gram[b, a] = L[a] * L[b] * math.cos(angles[(a, b)])
    A, G = torus_from_gram(gram)
    return FlatTorusAtInfinity(m, L, angles, gram, A, G, fits)

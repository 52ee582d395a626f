"""Metric models in a global chart together with their deck groups.

Every model works on a simply connected chart (a cover of the manifold) and
carries the deck group as a set of commuting affine isometries of that chart.
Derivatives of the metric come from sympy and are compiled once per parameter
set.  The finite-difference path exists as a fallback and as a cross-check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np
import sympy

from .errors import FDUnstable, InvalidParameter, OutOfDomain

EXACT_PERIOD_TOL = 1e-12


# ---------------------------------------------------------------------------
# deck groups


class AffineIsometry:
    """x -> A x + b in chart coordinates."""

    def __init__(self, linear, translation, name: str = ""):
        self.linear = np.asarray(linear, dtype=float)
        self.translation = np.asarray(translation, dtype=float)
        self.name = name

    def power(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        n = len(self.translation)
        A, b = np.eye(n), np.zeros(n)
        if k == 0:
            return A, b
        M, c = (self.linear, self.translation)
        if k < 0:
            M_inv = np.linalg.inv(M)
            M, c = M_inv, -M_inv @ c
            k = -k
        for _ in range(k):
            A, b = M @ A, M @ b + c
        return A, b


class Translation(AffineIsometry):
    def power(self, k: int):
        n = len(self.translation)
        return np.eye(n), k * self.translation


class ScrewMotion(AffineIsometry):
    """Rotation by 2*pi*theta in the (x, y) plane combined with a unit shift in t."""

    def __init__(self, theta):
        self.theta = theta
        super().__init__(_rot3(2 * math.pi * float(theta)), [0.0, 0.0, 1.0], name="tau")

    def angle(self, k: int) -> float:
        # reduce k*theta mod 1 exactly when theta is rational
        if isinstance(self.theta, Fraction):
            frac = (k * self.theta) % 1
            return 2 * math.pi * float(frac)
        return 2 * math.pi * math.fmod(k * float(self.theta), 1.0)

    def power(self, k: int):
        return _rot3(self.angle(k)), np.array([0.0, 0.0, float(k)])


def _rot3(w: float) -> np.ndarray:
    c, s = math.cos(w), math.sin(w)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass
class DeckPresentation:
    """Finitely generated abelian deck group; words are exponent vectors."""

    generators: list[AffineIsometry]
    relations: str = "abelian"

    @property
    def rank(self) -> int:
        return len(self.generators)

    def affine(self, word: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        word = tuple(int(w) for w in word)
        if len(word) != self.rank:
            raise InvalidParameter(f"word {word} has wrong length for rank {self.rank}")
        n = len(self.generators[0].translation)
        A, b = np.eye(n), np.zeros(n)
        for gen, k in zip(self.generators, word):
            Ak, bk = gen.power(k)
            A, b = Ak @ A, Ak @ b + bk
        return A, b

    def apply(self, word: Sequence[int], x) -> np.ndarray:
        A, b = self.affine(word)
        return A @ np.asarray(x, dtype=float) + b

    def differential(self, word: Sequence[int]) -> np.ndarray:
        return self.affine(word)[0]

    @staticmethod
    def compose(w1: Sequence[int], w2: Sequence[int]) -> tuple[int, ...]:
        return tuple(a + b for a, b in zip(w1, w2))

    @staticmethod
    def inverse(w: Sequence[int]) -> tuple[int, ...]:
        return tuple(-a for a in w)

    def identity(self) -> tuple[int, ...]:
        return (0,) * self.rank

    def words(self, bound: int) -> Iterator[tuple[int, ...]]:
        """All nontrivial words with every exponent in [-bound, bound]."""
        for w in itertools.product(range(-bound, bound + 1), repeat=self.rank):
            if any(w):
                yield w


# ---------------------------------------------------------------------------
# compiled symbolic metric


class _Compiled:
    """Lambdified g, dg, ddg for a symbolic metric matrix."""

    def __init__(self, coords: Sequence[sympy.Symbol], g: sympy.Matrix):
        n = len(coords)
        self.n = n
        pairs = [(i, j) for i in range(n) for j in range(i, n)]
        g_exprs = [g[i, j] for i, j in pairs]
        dg_exprs = [sympy.diff(e, c) for e in g_exprs for c in coords]
        ddg_exprs = []
        ddg_index = []
        for p, e in enumerate(g_exprs):
            for a in range(n):
                de = dg_exprs[p * n + a]
                for b in range(a, n):
                    ddg_exprs.append(sympy.diff(de, coords[b]))
                    ddg_index.append((p, a, b))
        self._g = sympy.lambdify(coords, g_exprs, modules="math", cse=True)
        self._g_dg = sympy.lambdify(coords, g_exprs + dg_exprs, modules="math", cse=True)
        self._all = sympy.lambdify(coords, g_exprs + dg_exprs + ddg_exprs, modules="math", cse=True)
        iu = np.array(pairs)
        self._pi, self._pj = iu[:, 0], iu[:, 1]
        self._np = len(pairs)
        self._ddg_index = np.array(ddg_index)

    def g(self, x) -> np.ndarray:
        vals = np.array(self._g(*x), dtype=float)
        out = np.empty((self.n, self.n))
        out[self._pi, self._pj] = vals
        out[self._pj, self._pi] = vals
        return out

    def g_dg(self, x) -> tuple[np.ndarray, np.ndarray]:
        n, npairs = self.n, self._np
        vals = np.array(self._g_dg(*x), dtype=float)
        g = np.empty((n, n))
        g[self._pi, self._pj] = vals[:npairs]
        g[self._pj, self._pi] = vals[:npairs]
        d = vals[npairs:].reshape(npairs, n)
        dg = np.empty((n, n, n))
        dg[self._pi, self._pj, :] = d
        dg[self._pj, self._pi, :] = d
        return g, dg

    def all(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        n, npairs = self.n, self._np
        vals = np.array(self._all(*x), dtype=float)
        g = np.empty((n, n))
        g[self._pi, self._pj] = vals[:npairs]
        g[self._pj, self._pi] = vals[:npairs]
        d = vals[npairs:npairs + npairs * n].reshape(npairs, n)
        dg = np.empty((n, n, n))
        dg[self._pi, self._pj, :] = d
        dg[self._pj, self._pi, :] = d
        dd = vals[npairs + npairs * n:]
        ddg = np.empty((n, n, n, n))
        p, a, b = self._ddg_index.T
        i, j = self._pi[p], self._pj[p]
        ddg[i, j, a, b] = dd
        ddg[j, i, a, b] = dd
        ddg[i, j, b, a] = dd
        ddg[j, i, b, a] = dd
        return g, dg, ddg


def christoffel_from(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """Gamma[k, i, j] from g and dg[a, b, c] = d_c g_ab."""
    ginv = np.linalg.inv(g)
    first = 0.5 * (np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg) - dg.transpose(2, 0, 1))
    return np.einsum("kl,lij->kij", ginv, first)


def christoffel_derivative_from(g, dg, ddg) -> tuple[np.ndarray, np.ndarray]:
    """Gamma[k,i,j] and dGamma[k,i,j,m] = d_m Gamma^k_ij."""
    ginv = np.linalg.inv(g)
    first = 0.5 * (np.einsum("jli->lij", dg) + np.einsum("ilj->lij", dg) - dg.transpose(2, 0, 1))
    gamma = np.einsum("kl,lij->kij", ginv, first)
    dfirst = 0.5 * (
        np.einsum("jlim->lijm", ddg) + np.einsum("iljm->lijm", ddg) - np.einsum("ijlm->lijm", ddg)
    )
    dginv = -np.einsum("ka,abm,bl->klm", ginv, dg, ginv)
    dgamma = np.einsum("klm,lij->kijm", dginv, first) + np.einsum("kl,lijm->kijm", ginv, dfirst)
    return gamma, dgamma


def riemann_from(g, gamma, dgamma) -> np.ndarray:
    """Fully covariant R_abcd = <R(d_c, d_d) d_b, d_a>; the round sphere has R_abab > 0."""
    upper = (
        np.einsum("adbc->abcd", dgamma)
        - np.einsum("acbd->abcd", dgamma)
        + np.einsum("ace,edb->abcd", gamma, gamma)
        - np.einsum("ade,ecb->abcd", gamma, gamma)
    )
    return np.einsum("ae,ebcd->abcd", g, upper)


# ---------------------------------------------------------------------------
# model base


class MetricModel:
    """Riemannian metric on a chart, optionally with a deck group."""

    name = "model"
    is_flat = False

    def __init__(self, dim: int, params: dict, deck: DeckPresentation | None):
        self.dim = dim
        self.params = params
        self.deck = deck

    # metric data
    def metric(self, x) -> np.ndarray:
        return self._compiled.g(np.asarray(x, dtype=float))

    def christoffel(self, x) -> np.ndarray:
        if self.is_flat:
            return np.zeros((self.dim,) * 3)
        g, dg = self._compiled.g_dg(np.asarray(x, dtype=float))
        return christoffel_from(g, dg)

    def christoffel_and_derivative(self, x) -> tuple[np.ndarray, np.ndarray]:
        n = self.dim
        if self.is_flat:
            return np.zeros((n,) * 3), np.zeros((n,) * 4)
        g, dg, ddg = self._compiled.all(np.asarray(x, dtype=float))
        return christoffel_derivative_from(g, dg, ddg)

    # domain
    def domain_margin(self, x) -> float:
        """Positive inside the trusted domain."""
        return math.inf

    def check_domain(self, x) -> None:
        m = self.domain_margin(x)
        if not m > 0:
            raise OutOfDomain(f"{self.name}: point {np.asarray(x).tolist()} outside the valid domain")

    # geometry of ends
    def radius_of(self, x) -> float:
        return float(np.linalg.norm(np.asarray(x, dtype=float)))

    def radial_point(self, r: float) -> np.ndarray:
        p = np.zeros(self.dim)
        p[0] = r
        return p

    def radial_direction(self, x) -> np.ndarray:
        """Chart direction of increasing radius (not normalised)."""
        e = np.zeros(self.dim)
        e[0] = 1.0
        return e

    def describe(self) -> dict:
        return {"name": self.name, "dim": self.dim, **{k: _jsonable(v) for k, v in self.params.items()}}


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(u) for u in v]
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


class _Symbolic(MetricModel):
    def __init__(self, dim, params, deck, coords, g_expr):
        super().__init__(dim, params, deck)
        self._compiled = _compile_cached(self.name, _freeze(params), coords, g_expr)


_COMPILE_CACHE: dict = {}


def _freeze(params: dict):
    return tuple(sorted((k, tuple(v) if isinstance(v, list) else v) for k, v in params.items()))


def _compile_cached(name, key, coords, g_expr):
    k = (name, key)
    if k not in _COMPILE_CACHE:
        _COMPILE_CACHE[k] = _Compiled(coords, g_expr)
    return _COMPILE_CACHE[k]


# ---------------------------------------------------------------------------
# flat models


class _FlatBase(MetricModel):
    is_flat = True

    def metric(self, x) -> np.ndarray:
        return np.eye(self.dim)


class Euclidean(_FlatBase):
    name = "euclidean"

    def __init__(self, n: int = 3):
        if n < 1:
            raise InvalidParameter("dimension must be positive")
        super().__init__(n, {"n": n}, None)


class FlatTorus(_FlatBase):
    """R^a x T^b; the lattice acts on the last b coordinates (columns are generators)."""

    name = "flat_torus"

    def __init__(self, a: int, lattice):
        B = np.atleast_2d(np.asarray(lattice, dtype=float))
        if B.shape[0] != B.shape[1]:
            raise InvalidParameter("lattice must be a square matrix of column generators")
        b = B.shape[0]
        if abs(np.linalg.det(B)) < 1e-12:
            raise InvalidParameter("lattice generators are degenerate")
        n = a + b
        gens = []
        for j in range(b):
            t = np.zeros(n)
            t[a:] = B[:, j]
            gens.append(Translation(np.eye(n), t, name=f"e{j + 1}"))
        super().__init__(n, {"a": a, "lattice": B.tolist()}, DeckPresentation(gens))
        self.a, self.b, self.lattice = a, b, B

    def radius_of(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.linalg.norm(x[: self.a]))


class Screw(_FlatBase):
    """R^3 modulo (z, t) -> (exp(2 pi i theta) z, t + 1); coordinates (x, y, t)."""

    name = "screw"

    def __init__(self, theta):
        if isinstance(theta, float) and theta.is_integer():
            theta = Fraction(int(theta))
        if isinstance(theta, int):
            theta = Fraction(theta)
        self.theta = theta
        super().__init__(3, {"theta": theta}, DeckPresentation([ScrewMotion(theta)], relations="cyclic"))

    def radius_of(self, x) -> float:
        return float(math.hypot(x[0], x[1]))

    # closed forms used as oracles elsewhere
    def loop_length(self, k: int, r: float) -> float:
        return math.sqrt(k * k + 4 * r * r * math.sin(math.pi * k * float(self.theta)) ** 2)

    def rotation_norm(self, k: int) -> float:
        w = self.deck.generators[0].angle(k) % (2 * math.pi)
        return min(w, 2 * math.pi - w)


# ---------------------------------------------------------------------------
# Euclidean Schwarzschild


class Schwarzschild(_Symbolic):
    """f dtheta^2 + f^{-1} dr^2 + r^2 ds^2_{n-2} with f = 1 - 2m / r^{n-3}.

    Chart: (theta, x_1, ..., x_{n-1}) with r = |x|, so the round part is
    absorbed into a Cartesian factor and no angular coordinate is singular.
    The circle has period L_inf (smooth at the horizon by default).
    """

    name = "schwarzschild"

    def __init__(self, n: int = 4, m: float = 1.0, L_inf: float | None = None, margin: float = 1.05):
        if n < 4:
            raise InvalidParameter("Schwarzschild needs n >= 4")
        if not m > 0:
            raise InvalidParameter("mass must be positive")
        self.n, self.m = int(n), float(m)
        self.r_h = (2 * self.m) ** (1.0 / (self.n - 3))
        self.L_inf = float(L_inf) if L_inf is not None else 4 * math.pi * self.r_h / (self.n - 3)
        self.margin = float(margin)
        coords = sympy.symbols(f"th x1:{self.n}", real=True)
        xs = coords[1:]
        r2 = sum(c**2 for c in xs)
        r = sympy.sqrt(r2)
        f = 1 - 2 * sympy.Float(self.m) / r ** (self.n - 3)
        G = sympy.zeros(self.n, self.n)
        G[0, 0] = f
        for i, xi in enumerate(xs, start=1):
            for j, xj in enumerate(xs, start=1):
                G[i, j] = (1 if i == j else 0) + (1 / f - 1) * xi * xj / r2
        t = np.zeros(self.n)
        t[0] = self.L_inf
        deck = DeckPresentation([Translation(np.eye(self.n), t, name="circle")])
        params = {"n": self.n, "m": self.m, "L_inf": self.L_inf}
        super().__init__(self.n, params, deck, coords, G)

    def r_of(self, x) -> float:
        return float(np.linalg.norm(np.asarray(x, dtype=float)[1:]))

    radius_of = r_of

    def domain_margin(self, x) -> float:
        return self.r_of(x) - self.margin * self.r_h

    def radial_point(self, r: float) -> np.ndarray:
        p = np.zeros(self.dim)
        p[1] = r
        return p

    def radial_direction(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        e = np.zeros(self.dim)
        e[1:] = x[1:] / np.linalg.norm(x[1:])
        return e

    def kretschmann_closed_form(self, r: float) -> float:
        n, mu = self.n, 2 * self.m
        return (n - 1) * (n - 2) ** 2 * (n - 3) * mu**2 / r ** (2 * (n - 1))


# ---------------------------------------------------------------------------
# Gibbons-Hawking: (multi-)Taub-NUT


class MultiTaubNUT(_Symbolic):
    """V dx^2 + V^{-1} (dtau + omega)^2 with V = 1 + sum 2m / |x - x_j|.

    Centres sit on the x_3 axis, so omega = sum 2m cos(theta_j) dphi, and the
    fibre coordinate tau has period 8 pi m.  The chart is singular on the axis,
    which is kept out of the valid domain.
    """

    name = "multi_taub_nut"

    def __init__(self, m: float = 1.0, centers: Sequence[float] = (0.0,), center_margin: float = 0.5,
                 axis_margin: float = 0.5):
        if not m > 0:
            raise InvalidParameter("mass must be positive")
        if len(centers) < 1:
            raise InvalidParameter("need at least one centre")
        self.m = float(m)
        self.centers = [float(c) for c in centers]
        self.center_margin, self.axis_margin = float(center_margin), float(axis_margin)
        x, y, z, tau = coords = sympy.symbols("x y z tau", real=True)
        M = sympy.Float(self.m)
        V = sympy.Integer(1)
        w_phi = sympy.Integer(0)  # coefficient of (x dy - y dx) / (x^2 + y^2)
        for c in self.centers:
            R = sympy.sqrt(x**2 + y**2 + (z - c) ** 2)
            V = V + 2 * M / R
            w_phi = w_phi + 2 * M * (z - c) / R
        s2 = x**2 + y**2
        omega = [-w_phi * y / s2, w_phi * x / s2, sympy.Integer(0)]
        G = sympy.zeros(4, 4)
        X = [x, y, z]
        for i in range(3):
            for j in range(3):
                G[i, j] = (V if i == j else 0) + omega[i] * omega[j] / V
            G[i, 3] = G[3, i] = omega[i] / V
        G[3, 3] = 1 / V
        self._V = sympy.lambdify(X, V, modules="math")
        period = 8 * math.pi * self.m
        t = np.array([0.0, 0.0, 0.0, period])
        deck = DeckPresentation([Translation(np.eye(4), t, name="fibre")])
        params = {"m": self.m, "centers": list(self.centers)}
        super().__init__(4, params, deck, coords, G)
        self.period = period

    def V(self, x) -> float:
        return float(self._V(*np.asarray(x, dtype=float)[:3]))

    def domain_margin(self, x) -> float:
        x = np.asarray(x, dtype=float)
        d_center = min(math.sqrt(x[0] ** 2 + x[1] ** 2 + (x[2] - c) ** 2) for c in self.centers)
        d_axis = math.hypot(x[0], x[1])
        return min(d_center - self.center_margin, d_axis - self.axis_margin)

    def radius_of(self, x) -> float:
        return float(np.linalg.norm(np.asarray(x, dtype=float)[:3]))

    def radial_direction(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        e = np.zeros(4)
        e[:3] = x[:3] / np.linalg.norm(x[:3])
        return e

    def fibre_orbit_length(self, x) -> float:
        return self.period / math.sqrt(self.V(x))


def TaubNUT(m: float = 1.0, **kw) -> MultiTaubNUT:
    model = MultiTaubNUT(m=m, centers=(0.0,), **kw)
    model.name = "taub_nut"
    return model


# ---------------------------------------------------------------------------
# finite-difference path

_FD4 = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))


def fd_step(x) -> float:
    return max(1e-4, 1e-4 * float(np.linalg.norm(x)))


def _stencil_points(model: MetricModel, x, h):
    x = np.asarray(x, dtype=float)
    for a in range(model.dim):
        for s, _ in _FD4:
            p = x.copy()
            p[a] += s * h
            if not model.domain_margin(p) > 0:
                raise FDUnstable(f"finite-difference stencil leaves the domain at {p.tolist()}")


def christoffel_fd(model: MetricModel, x, h: float | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    h = fd_step(x) if h is None else h
    _stencil_points(model, x, h)
    n = model.dim
    dg = np.zeros((n, n, n))
    for c in range(n):
        for s, w in _FD4:
            p = x.copy()
            p[c] += s * h
            dg[:, :, c] += w * model.metric(p)
        dg[:, :, c] /= h
    return christoffel_from(model.metric(x), dg)


def riemann_fd(model: MetricModel, x, h: float | None = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    h = fd_step(x) if h is None else h
    _stencil_points(model, x, 2 * h)
    n = model.dim
    dgamma = np.zeros((n, n, n, n))
    for m_ in range(n):
        for s, w in _FD4:
            p = x.copy()
            p[m_] += s * h
            dgamma[..., m_] += w * christoffel_fd(model, p, h)
        dgamma[..., m_] /= h
    return riemann_from(model.metric(x), christoffel_fd(model, x, h), dgamma)


# ---------------------------------------------------------------------------
# curvature


def riemann_at(model: MetricModel, x, method: str = "analytic") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    model.check_domain(x)
    n = model.dim
    if model.is_flat:
        return np.zeros((n,) * 4)
    if method == "fd":
        return riemann_fd(model, x)
    gamma, dgamma = model.christoffel_and_derivative(x)
    return riemann_from(model.metric(x), gamma, dgamma)


def _raise_all(R, ginv):
    return np.einsum("ai,bj,ck,dl,ijkl->abcd", ginv, ginv, ginv, ginv, R, optimize=True)


def curvature_norm(model: MetricModel, x, method: str = "analytic") -> float:
    """Tensor norm |Rm| = (R_abcd R^abcd)^(1/2)."""
    R = riemann_at(model, x, method)
    if not R.any():
        return 0.0
    ginv = np.linalg.inv(model.metric(x))
    return float(math.sqrt(max(np.einsum("abcd,abcd->", R, _raise_all(R, ginv)), 0.0)))


def curvature_operator(model: MetricModel, x, method: str = "analytic") -> np.ndarray:
    """Matrix of the curvature operator on 2-forms in an orthonormal frame."""
    R = riemann_at(model, x, method)
    g = model.metric(x)
    L = np.linalg.cholesky(g)
    E = np.linalg.inv(L).T
    Rf = np.einsum("ai,bj,ck,dl,abcd->ijkl", E, E, E, E, R, optimize=True)
    pairs = [(i, j) for i in range(model.dim) for j in range(i + 1, model.dim)]
    return np.array([[Rf[i, j, k, l] for k, l in pairs] for i, j in pairs])


def curvature_operator_norm(model: MetricModel, x, method: str = "analytic") -> float:
    op = curvature_operator(model, x, method)
    if op.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (op + op.T)))))


def ricci_at(model: MetricModel, x, method: str = "analytic") -> np.ndarray:
    R = riemann_at(model, x, method)
    ginv = np.linalg.inv(model.metric(x))
    return np.einsum("ac,abcd->bd", ginv, R)


def ricci_norm(model: MetricModel, x, method: str = "analytic") -> float:
    Ric = ricci_at(model, x, method)
    ginv = np.linalg.inv(model.metric(x))
    return float(math.sqrt(max(np.einsum("ab,ac,bd,cd->", Ric, ginv, ginv, Ric), 0.0)))


def symmetry_residual(R: np.ndarray) -> float:
    """Largest relative violation of the algebraic Riemann symmetries."""
    scale = max(float(np.max(np.abs(R))), 1e-300)
    anti1 = np.max(np.abs(R + R.transpose(1, 0, 2, 3)))
    anti2 = np.max(np.abs(R + R.transpose(0, 1, 3, 2)))
    pair = np.max(np.abs(R - R.transpose(2, 3, 0, 1)))
    bianchi = np.max(np.abs(R + R.transpose(0, 2, 3, 1) + R.transpose(0, 3, 1, 2)))
    return float(max(anti1, anti2, pair, bianchi) / scale)


# ---------------------------------------------------------------------------
# registry


def _parse_theta(value):
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        return value
    s = str(value).strip()
    if s in ("golden", "(sqrt5-1)/2"):
        return (math.sqrt(5) - 1) / 2
    try:
        return Fraction(s)
    except ValueError as exc:
        raise InvalidParameter(f"cannot parse theta={value!r}") from exc


def make_model(name: str, **params) -> MetricModel:
    """Build a model from its registry name and keyword parameters."""
    key = name.lower().replace("-", "_")
    try:
        if key in ("euclidean", "flat"):
            return Euclidean(int(params.get("n", 3)))
        if key in ("flat_torus", "torus"):
            return FlatTorus(int(params.get("a", 1)), params.get("lattice", [[1.0]]))
        if key == "screw":
            return Screw(_parse_theta(params.get("theta", Fraction(1, 2))))
        if key == "schwarzschild":
            return Schwarzschild(int(params.get("n", 4)), float(params.get("m", 1.0)), params.get("L_inf"))
        if key in ("taub_nut", "taubnut"):
            return TaubNUT(float(params.get("m", 1.0)))
        if key in ("multi_taub_nut", "multitaubnut"):
            return MultiTaubNUT(float(params.get("m", 1.0)), params.get("centers", (-5.0, 5.0)))
    except (TypeError, ValueError) as exc:
        raise InvalidParameter(f"bad parameters for {name}: {exc}") from exc
    raise InvalidParameter(f"unknown model {name!r}")


MODEL_NAMES = ("euclidean", "flat_torus", "screw", "schwarzschild", "taub_nut", "multi_taub_nut")

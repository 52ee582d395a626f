"""Theta-translational subsets and their standard short bases.

A subset is indexed by labels in Z^r with an abelian label law: the product of
the elements labelled z1 and z2 is the element labelled z1 + z2 whenever that
element lies in the ball of radius rho.  Three sources provide labels:

* exact lattices (vectors with entries in Q or Q(sqrt d)), enumerated on demand,
* lattices whose products are nudged by a seeded quadratic perturbation,
* pseudo-groups of geodesic loops (labels are deck words).

All decisions in exact mode (lengths, slabs, floors, ties) are exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import AxiomViolation, DegenerateSet, NotCertified, OutOfRange
from .exact import QSqrt, dot, norm2, parse_exact

Label = tuple
ENUMERATION_LIMIT = 4_000_000


# ---------------------------------------------------------------------------
# sources


class LatticeSource:
    """Integer combinations of column generators (exact or float entries)."""

    def __init__(self, generators: Sequence[Sequence], exact: bool = True):
        gens = [tuple(parse_exact(x) if exact else float(x) for x in g) for g in generators]
        if not gens:
            raise DegenerateSet("lattice needs at least one generator")
        self.gens = gens
        self.rank = len(gens)
        self.dim = len(gens[0])
        self.exact = exact
        self._G = np.array([[float(x) for x in g] for g in gens]).T  # dim x rank
        gram = self._G.T @ self._G
        if abs(np.linalg.det(gram)) < 1e-14 * max(1.0, np.max(np.abs(gram))) ** self.rank:
            raise DegenerateSet("lattice generators are linearly dependent")
        self._gram_inv_diag = np.sqrt(np.diag(np.linalg.inv(gram)))

    def vector(self, z: Label) -> tuple:
        zero = Fraction(0) if self.exact else 0.0
        out = [zero] * self.dim
        for zi, g in zip(z, self.gens):
            if zi:
                for a in range(self.dim):
                    out[a] = out[a] + zi * g[a]
        return tuple(out)

    def float_matrix(self) -> np.ndarray:
        return self._G

    def candidates(self, R: float) -> np.ndarray:
        """Labels (rows) whose vector has float length <= R (slightly generous)."""
        bounds = np.floor(R * self._gram_inv_diag + 1e-9).astype(int)
        if float(np.prod(2.0 * bounds + 1)) > ENUMERATION_LIMIT:
            raise DegenerateSet(f"enumeration of radius {R:.4g} is too large for this lattice")
        grids = np.meshgrid(*[np.arange(-b, b + 1) for b in bounds], indexing="ij")
        Z = np.stack([g.ravel() for g in grids], axis=1)
        X = Z @ self._G.T
        keep = np.einsum("ij,ij->i", X, X) <= (R * (1 + 1e-9) + 1e-12) ** 2
        return Z[keep]


class PerturbedSource:
    """phi(z) = x + (c / rho) Q(x) with x = B z and a seeded vector-valued quadratic form Q.

    The product defect phi(z1 + z2) - phi(z1) - phi(z2) = (2c / rho) beta(x1, x2)
    is then at most (2c / rho)|x1||x2|, and the label law stays associative.
    """

    def __init__(self, base: LatticeSource, amplitude: float, rho: float, tensor: np.ndarray):
        self.base = base
        self.rank, self.dim, self.exact = base.rank, base.dim, False
        self.amplitude, self.rho = float(amplitude), float(rho)
        self.tensor = tensor  # (dim, dim, dim), symmetric in the last two slots

    def vector(self, z: Label) -> tuple:
        x = self.base.float_matrix() @ np.asarray(z, dtype=float)
        q = np.einsum("kij,i,j->k", self.tensor, x, x)
        return tuple((x + (self.amplitude / self.rho) * q).tolist())

    def batch(self, Z: np.ndarray) -> np.ndarray:
        X = np.asarray(Z, dtype=float) @ self.base.float_matrix().T
        return X + (self.amplitude / self.rho) * np.einsum("kij,ni,nj->nk", self.tensor, X, X)

    def candidates(self, R: float) -> np.ndarray:
        return self.base.candidates(R / (1 - self.amplitude) + 1e-9)


class ExplicitSource:
    """A finite table of labels and vectors."""

    def __init__(self, table: dict, exact: bool = False):
        if not table:
            raise DegenerateSet("empty subset")
        self.table = {tuple(k): tuple(v) for k, v in table.items()}
        some = next(iter(self.table))
        self.rank = len(some)
        self.dim = len(self.table[some])
        self.exact = exact

    def vector(self, z: Label) -> tuple:
        z = tuple(z)
        if z in self.table:
            return self.table[z]
        if not any(z):
            return (0.0,) * self.dim
        raise KeyError(z)

    def candidates(self, R: float) -> np.ndarray:
        rows = [k for k, v in self.table.items() if math.sqrt(sum(float(x) ** 2 for x in v)) <= R * (1 + 1e-9)]
        rows.append((0,) * self.rank)
        return np.array(sorted(set(rows)), dtype=int).reshape(-1, self.rank)


# ---------------------------------------------------------------------------
# subsets


def _sq(x):
    return x * x


@dataclass
class AxiomReport:
    elements: int
    pairs: int
    max_product_ratio: float
    max_commutator_ratio: float
    violations: list[str] = field(default_factory=list)

    @property
    def passes(self) -> bool:
        return not self.violations


class TranslationalSubset:
    """A theta-translational subset of radius rho in R^n."""

    def __init__(self, source, theta, rho, name: str = "subset"):
        self.source = source
        self.exact = bool(source.exact)
        self.theta = parse_exact(theta) if self.exact else float(theta)
        self.rho = parse_exact(rho) if self.exact else float(rho)
        if self.exact and isinstance(self.rho, QSqrt):
            raise DegenerateSet("radius must be rational in exact mode")
        self.rho_sq = self.rho * self.rho
        self.dim = source.dim
        self.rank = source.rank
        self.name = name
        self._vec_cache: dict = {}
        self._n2_cache: dict = {}
        self._float_cache: dict = {}
        self.axiom_report: AxiomReport | None = None

    # element access
    def vector(self, z: Label) -> tuple:
        z = tuple(int(a) for a in z)
        v = self._vec_cache.get(z)
        if v is None:
            v = self.source.vector(z)
            self._vec_cache[z] = v
        return v

    def norm2(self, z: Label):
        z = tuple(int(a) for a in z)
        s = self._n2_cache.get(z)
        if s is None:
            s = norm2(self.vector(z))
            self._n2_cache[z] = s
        return s

    def contains(self, z: Label) -> bool:
        try:
            return self.norm2(z) <= self.rho_sq
        except KeyError:
            return False

    def zero(self) -> Label:
        return (0,) * self.rank

    def product(self, a: Label, b: Label) -> Label | None:
        c = tuple(x + y for x, y in zip(a, b))
        return c if self.contains(c) else None

    def inverse(self, a: Label) -> Label | None:
        c = tuple(-x for x in a)
        return c if self.contains(c) else None

    def elements_within(self, R_sq) -> list[Label]:
        """Labels with |c|^2 <= R_sq (capped at rho^2), sorted by length."""
        if R_sq > self.rho_sq:
            R_sq = self.rho_sq
        R = math.sqrt(float(R_sq))
        out = [tuple(int(a) for a in z) for z in self.source.candidates(R)]
        out = [z for z in out if self.contains(z) and self.norm2(z) <= R_sq]
        out.sort(key=lambda z: (float(self.norm2(z)), z))
        return out

    @property
    def elements(self) -> list[Label]:
        return self.elements_within(self.rho_sq)

    def float_batch(self, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Float vectors of the label rows of Z and whether each label lies in T."""
        Z = np.asarray(Z, dtype=np.int64).reshape(-1, self.rank)
        if not self.exact and hasattr(self.source, "batch"):
            V = self.source.batch(Z)
            return V, np.einsum("ij,ij->i", V, V) <= self.rho_sq
        rows = [tuple(int(a) for a in z) for z in Z]
        inside = np.array([self.contains(z) for z in rows], dtype=bool)
        V = np.array([self.float_vector(z) if ok else np.full(self.dim, np.nan) for z, ok in zip(rows, inside)])
        return V.reshape(len(rows), self.dim), inside

    def float_vector(self, z) -> np.ndarray:
        z = tuple(int(a) for a in z)
        v = self._float_cache.get(z)
        if v is None:
            v = np.array([float(x) for x in self.vector(z)])
            self._float_cache[z] = v
        return v

    def verify_axioms(self, max_elements: int = 200, max_exact_pairs: int = 4000) -> AxiomReport:
        """Check the four subset axioms on the shortest ``max_elements`` elements."""
        elems = self._shortest(max_elements)
        th, rho = self.theta, self.rho
        violations: list[str] = []
        if not self.contains(self.zero()):
            violations.append("0 not in T")
        inner_sq = _sq(rho * (1 - th))
        X = np.array([self.float_vector(z) for z in elems])
        nrm = np.linalg.norm(X, axis=1)
        worst_prod = worst_comm = 0.0
        pairs = 0
        exact_pairs = 0
        Lab = np.array(elems, dtype=np.int64).reshape(len(elems), self.rank)
        bound = 2 * float(th)
        for ia, a in enumerate(elems):
            if self.norm2(a) <= inner_sq and self.inverse(a) is None:
                violations.append(f"inverse of {a} missing")
            SL = Lab + Lab[ia]
            Sall, inside = self.float_batch(SL)
            V = X[ia] + X
            close = np.einsum("ij,ij->i", V, V) <= float(inner_sq) * (1 + 1e-12)
            for ib in np.nonzero(close & ~inside)[0]:
                b = elems[ib]
                if not self.exact or norm2(tuple(x + y for x, y in zip(self.vector(a), self.vector(b)))) <= inner_sq:
                    violations.append(f"product {a}*{b} undefined")
            idx = np.nonzero(inside)[0]
            pairs += len(idx)
            if not len(idx):
                continue
            S = Sall[idx]
            d = np.linalg.norm(S - X[ia] - X[idx], axis=1)
            scale = nrm[ia] * nrm[idx]
            # float rounding in the three vectors
            slack = 1e-12 * (nrm[ia] + nrm[idx] + np.linalg.norm(S, axis=1) + 1.0)
            pos = scale > 0
            if np.any(pos):
                worst_prod = max(worst_prod, float(np.max(np.maximum(d[pos] - slack[pos], 0) * float(rho) / scale[pos])))
            for k, ib in enumerate(idx):
                if not pos[k]:
                    continue
                b = elems[ib]
                if self.exact and exact_pairs < max_exact_pairs:
                    # exact squared comparison |d|^2 <= (2 th / rho)^2 |a|^2 |b|^2
                    exact_pairs += 1
                    dv = tuple(x - y - w for x, y, w in zip(self.vector(tuple(int(q) for q in SL[ib])),
                                                            self.vector(a), self.vector(b)))
                    if norm2(dv) * self.rho_sq > 4 * th * th * self.norm2(a) * self.norm2(b):
                        violations.append(f"product defect at {a},{b}")
                elif d[k] > bound * scale[k] / float(rho) * (1 + 1e-9) + slack[k]:
                    violations.append(f"product defect at {a},{b}: {d[k] * float(rho) / scale[k]:.4g} > {bound:.4g}")
            # labels commute, so every commutator is the identity element
            worst_comm = max(worst_comm, float(np.linalg.norm(self.float_vector(self.zero()))))
        # associativity of the label law on a few triples
        for a, b, c in itertools.islice(itertools.product(elems[:12], repeat=3), 1728):
            ab, bc = self.product(a, b), self.product(b, c)
            if ab is not None and bc is not None:
                l, r = self.product(ab, c), self.product(a, bc)
                if (l is None) != (r is None) or (l is not None and l != r):
                    violations.append(f"associativity at {a},{b},{c}")
        rep = AxiomReport(len(elems), pairs, worst_prod, worst_comm, violations)
        self.axiom_report = rep
        return rep

    def _shortest(self, count: int) -> list[Label]:
        R = None
        # grow a search radius until enough elements are seen
        base = min(math.sqrt(float(self.norm2(e))) for e in _unit_labels(self.rank) if self.contains(e)) \
            if any(self.contains(e) for e in _unit_labels(self.rank)) else float(self.rho)
        R = min(float(self.rho), base)
        while True:
            elems = self.elements_within(_as_sq(R, self.exact))
            if len(elems) >= count or R >= float(self.rho):
                return elems[:count]
            R = min(float(self.rho), 1.5 * R)


def _as_sq(R: float, exact: bool):
    if exact:
        return Fraction(R * R).limit_denominator(10**12) * (1 + Fraction(1, 10**9))
    return R * R


def _unit_labels(rank):
    for i in range(rank):
        for s in (1, -1):
            z = [0] * rank
            z[i] = s
            yield tuple(z)


def make_translational_subset(source, theta, rho, name: str = "subset", verify: bool = True,
                              max_elements: int = 200) -> TranslationalSubset:
    T = TranslationalSubset(source, theta, rho, name)
    if verify:
        rep = T.verify_axioms(max_elements=max_elements)
        if not rep.passes:
            raise AxiomViolation(rep.violations)
    return T


def lattice_subset(generators, rho, theta=0, exact: bool = True, verify: bool = True) -> TranslationalSubset:
    return make_translational_subset(LatticeSource(generators, exact), theta, rho, "lattice", verify)


def perturbed_lattice_subset(generators, theta: float, rho: float, seed: int, adversarial: bool = False,
                             verify: bool = True) -> TranslationalSubset:
    """Lattice whose products are nudged by a seeded quadratic perturbation.

    Each product is moved by at most theta / rho |a||b|.  The adversarial variant
    pushes the defect up to 3 theta / rho |a||b| along one direction, which breaks
    the product axiom.
    """
    base = LatticeSource(generators, exact=False)
    n = base.dim
    rng = np.random.default_rng(seed)
    if adversarial:
        u = rng.standard_normal(n)
        u /= np.linalg.norm(u)
        S = np.einsum("k,i,j->kij", u, u, u)
        amp = 1.5 * theta
    else:
        S = rng.standard_normal((n, n, n))
        S = 0.5 * (S + S.transpose(0, 2, 1))
        # normalise so that |beta(x, y)| <= |x||y|
        op = math.sqrt(sum(np.linalg.norm(S[k], 2) ** 2 for k in range(n)))
        S /= op
        # product defect (2 amp / rho)|beta| stays below theta / rho |a||b|
        amp = 0.5 * theta * rng.uniform(0.5, 1.0)
    src = PerturbedSource(base, amp, rho, S)
    return make_translational_subset(src, theta, rho, "perturbed", verify)


def pseudogroup_subset(G, theta: float, rho1: float, verify: bool = True) -> TranslationalSubset:
    """Translational parts of the loops of length <= rho1 in a pseudo-group of radius rho0 = 3 rho1."""
    rho0 = 3 * rho1
    bad = [f"||r({lp.word})|| = {lp.rot_norm:.3g} > theta |t| / rho0"
           for lp in G.loops if lp.length <= rho1 and lp.rot_norm > theta * lp.length / rho0 + 1e-12]
    if bad:
        raise AxiomViolation(bad)
    table = {lp.word: tuple(lp.translation.tolist()) for lp in G.loops if lp.length <= rho1}
    if not table:
        raise DegenerateSet("no loops of length <= rho1")
    table[G.identity] = (0.0,) * G.model.dim
    return make_translational_subset(ExplicitSource(table), theta, rho1, "pseudo-group", verify)


# ---------------------------------------------------------------------------
# standard short bases


def radius_schedule(rho1, theta, n: int, steps: int, exact: bool):
    """Squares of rho_i = 12^(1-i) rho_1 and of rho_bar."""
    rho_sq = Fraction(rho1) * rho1 if exact else float(rho1) ** 2
    sched = [rho_sq / (Fraction(144) ** i if exact else 144.0 ** i) for i in range(steps + 1)]
    if exact:
        bar = rho_sq * Fraction(1) / ((1 + theta) ** (2 * n + 2) * Fraction(144) ** n * Fraction(2) ** (n * n))
    else:
        bar = rho_sq / ((1 + theta) ** (2 * n + 2) * 144.0 ** n * 2.0 ** (n * n))
    return sched, bar


@dataclass
class ShortBasis:
    subset: TranslationalSubset
    labels: list[Label]
    projections: list[tuple]     # c_i^(i)
    sigmas_sq: list
    slab: str
    rho_sq: list                 # rho_1^2, rho_2^2, ...
    rho_bar_sq: object

    @property
    def m(self) -> int:
        return len(self.labels)

    @property
    def vectors(self) -> list[tuple]:
        return [self.subset.vector(z) for z in self.labels]

    @property
    def lambda_sq(self):
        """Smallest lambda^2 for which the basis is lambda-normal: the worst one-step projection ratio."""
        st = _Stages(self.subset, self.slab)
        for z in self.labels:
            st.push(z)
        best = Fraction(1) if self.subset.exact else 1.0
        for i, z in enumerate(self.labels):
            prev = self.subset.norm2(z)
            for k in range(1, i + 1):
                cur = norm2(st.stage_vector(z, k))
                if prev / cur > best:
                    best = prev / cur
                prev = cur
        return best

    @property
    def lambda_value(self) -> float:
        return math.sqrt(float(self.lambda_sq))

    def describe(self) -> dict:
        return {
            "m": self.m,
            "labels": [list(z) for z in self.labels],
            "vectors": [[str(x) if self.subset.exact else float(x) for x in v] for v in self.vectors],
            "lengths": [math.sqrt(float(self.subset.norm2(z))) for z in self.labels],
            "lambda": self.lambda_value,
            "lambda_sq": str(self.lambda_sq) if self.subset.exact else float(self.lambda_sq),
            "rho_bar": math.sqrt(float(self.rho_bar_sq)),
            "slab": self.slab,
        }


class _Stages:
    """Iterated reductions Q_j and projections P_j for a growing basis."""

    def __init__(self, T: TranslationalSubset, slab: str):
        if slab not in ("upper", "lower"):
            raise ValueError("slab must be 'upper' or 'lower'")
        self.T, self.slab = T, slab
        self.labels: list[Label] = []
        self.us: list[tuple] = []
        self.us_sq: list = []

    def project(self, v: tuple, k: int) -> tuple:
        """Orthogonal projection of v away from the first k stage vectors."""
        for u, u2 in zip(self.us[:k], self.us_sq[:k]):
            c = dot(v, u) / u2
            v = tuple(a - c * b for a, b in zip(v, u))
        return v

    def stage_vector(self, z: Label, k: int) -> tuple:
        return self.project(self.T.vector(z), k)

    def _in_slab(self, s, u2) -> tuple[bool, bool]:
        """(too low, too high) for the slab of the chosen convention."""
        if self.slab == "upper":
            return s <= 0, s > u2
        return s < 0, s >= u2

    def reduce(self, z: Label, upto: int) -> tuple[Label, list[int]]:
        """Apply Q_1, ..., Q_upto; returns the reduced label and the exponents removed."""
        ks = []
        for j in range(upto):
            zj, u, u2 = self.labels[j], self.us[j], self.us_sq[j]
            total = 0
            # jump close to the slab first, then settle with the product law
            s = dot(self.stage_vector(z, j), u)
            jump = math.floor(s / u2)
            if self.slab == "upper" and s == jump * u2:
                jump -= 1
            if jump:
                z, _ = self.reduce(tuple(a - jump * b for a, b in zip(z, zj)), j)
                total += jump
            for _ in range(64):
                s = dot(self.stage_vector(z, j), u)
                low, high = self._in_slab(s, u2)
                if low:
                    z, _ = self.reduce(tuple(a + b for a, b in zip(z, zj)), j)
                    total -= 1
                    continue
                if self.slab == "upper":
                    # <u, u^{-1} * z> <= 0 must hold for the reduced element
                    down, _ = self.reduce(tuple(a - b for a, b in zip(z, zj)), j)
                    if dot(self.stage_vector(down, j), u) > 0:
                        z = down
                        total += 1
                        continue
                elif high:
                    z, _ = self.reduce(tuple(a - b for a, b in zip(z, zj)), j)
                    total += 1
                    continue
                break
            else:
                raise DegenerateSet("slab reduction did not settle")
            ks.append(total)
        return z, ks

    def push(self, z: Label):
        k = len(self.labels)
        u = self.stage_vector(z, k)
        self.labels.append(z)
        self.us.append(u)
        self.us_sq.append(norm2(u))


def _tie_key(T: TranslationalSubset, n2, vec):
    if T.exact:
        return (n2, tuple(-float(x) for x in vec))
    return (round(float(n2), 11), tuple(-round(float(x), 9) for x in vec))


def _min_by(T, items):
    """items: (n2, vec, payload); exact minimum of n2, ties by lexicographically largest vec."""
    best = None
    for it in items:
        if best is None:
            best = it
            continue
        if T.exact:
            if it[0] < best[0] or (it[0] == best[0] and _tie_key(T, *it[:2]) < _tie_key(T, *best[:2])):
                best = it
        elif _tie_key(T, *it[:2]) < _tie_key(T, *best[:2]):
            best = it
    return best


def _stage_elements(T: TranslationalSubset, st: _Stages, k: int, theta_k, rho_sq, s_sq):
    """Nonzero elements of the stage-(k+1) set with squared length <= s_sq, as (n2, vec, lift)."""
    lift_sq = s_sq
    for u2 in st.us_sq[:k]:
        lift_sq = lift_sq + u2
    if T.exact:
        lift_sq = lift_sq * (1 + 4 * abs(T.theta)) * Fraction(101, 100)
    else:
        lift_sq = lift_sq * (1 + 4 * abs(T.theta)) * 1.01 + 1e-12
    seen = {}
    for z in T.elements_within(lift_sq):
        if not any(z):
            continue
        zr, _ = st.reduce(z, k)
        if zr in seen or not T.contains(zr):
            continue
        ok = True
        for j in range(k):
            # membership chain: stage-j size before Q_j and stage-(j+1) size after P_j
            vj = st.stage_vector(zr, j)
            lim_j = _sub_bound(rho_sq[j], theta_k[j], st.us_sq[j], T.exact)
            if lim_j is None or norm2(vj) > lim_j:
                ok = False
                break
            if norm2(st.stage_vector(zr, j + 1)) > rho_sq[j + 1]:
                ok = False
                break
        if not ok:
            continue
        y = st.stage_vector(zr, k)
        n2 = norm2(y)
        if n2 == 0 or (not T.exact and n2 <= 1e-20 * float(T.rho_sq)):
            continue
        if n2 <= s_sq and n2 <= rho_sq[k]:
            seen[zr] = (n2, y, zr)
    return list(seen.values())


def _sub_bound(rho_sq_j, theta_j, sigma_sq_j, exact):
    """((1 - 4 theta) rho_j - 2 sigma_j)^2, or None if negative; computed with floats for the sqrt parts."""
    val = (1 - 4 * float(theta_j)) * math.sqrt(float(rho_sq_j)) - 2 * math.sqrt(float(sigma_sq_j))
    if val <= 0:
        return None
    if exact:
        return Fraction(val * val).limit_denominator(10**12)
    return val * val


def standard_short_basis(T: TranslationalSubset, slab: str = "upper", max_stages: int | None = None) -> ShortBasis:
    """Greedy standard short basis with the radius schedule rho_i = 12^(1-i) rho_1."""
    n = T.dim
    steps = n if max_stages is None else max_stages
    rho_sq, bar_sq = radius_schedule(T.rho, T.theta, n, steps, T.exact)
    theta_k = [T.theta * (1 + T.theta) ** i for i in range(steps + 1)]
    st = _Stages(T, slab)
    for k in range(min(steps, T.rank)):
        found = None
        if k == 0:
            s_sq = min((T.norm2(e) for e in _unit_labels(T.rank) if T.contains(e)), default=T.rho_sq)
        else:
            s_sq = st.us_sq[k - 1]
        while True:
            cands = _stage_elements(T, st, k, theta_k, rho_sq, s_sq)
            if cands:
                found = _min_by(T, cands)
                # ensure nothing shorter hides outside the search radius
                if found[0] <= s_sq:
                    break
            if s_sq >= rho_sq[k]:
                found = None
                break
            s_sq = min(rho_sq[k], s_sq * 4)
        if found is None:
            break
        st.push(found[2])
    if not st.labels:
        raise DegenerateSet("the subset has no nonzero element")
    return ShortBasis(T, list(st.labels), list(st.us), list(st.us_sq), slab, rho_sq, bar_sq)


def project_step(T: TranslationalSubset, c1: Label, c: Label, slab: str = "upper"):
    """(k, reduced label, projected vector) for c = c1^k * c~ with c~ in the slab of c1."""
    st = _Stages(T, slab)
    st.push(tuple(c1))
    zr, ks = st.reduce(tuple(c), 1)
    return ks[0], zr, st.stage_vector(zr, 1)


# ---------------------------------------------------------------------------
# generalized bases


def generalized_short_bases(T: TranslationalSubset, theta1=None, limit: int = 10000) -> list[list[Label]]:
    """All generalized standard short theta_1-bases (theta_1 = theta / 100 by default)."""
    th = T.theta
    theta1 = th / 100 if theta1 is None else theta1
    n = T.dim
    rho_sq, _ = radius_schedule(T.rho, th, n, n, T.exact)
    theta_k = [th * (1 + th) ** i for i in range(n + 1)]
    cos_hi_sq = 0.5 + 9 * float(th)
    out: list[list[Label]] = []

    def shortest_stage(st: _Stages, k: int):
        s_sq = st.us_sq[k - 1] if k else min(
            (T.norm2(e) for e in _unit_labels(T.rank) if T.contains(e)), default=T.rho_sq)
        while True:
            cands = _stage_elements(T, st, k, theta_k, rho_sq, s_sq)
            if cands:
                return cands
            if s_sq >= rho_sq[k]:
                return []
            s_sq = min(rho_sq[k], s_sq * 4)

    def rec(st: _Stages):
        k = len(st.labels)
        if len(out) >= limit:
            return
        if k == min(T.rank, n):
            out.append(list(st.labels))
            return
        first = shortest_stage(st, k)
        if not first:
            out.append(list(st.labels))
            return
        sigma_sq = min(c[0] for c in first)
        lim = sigma_sq * (1 + theta1) ** 2
        cands = _stage_elements(T, st, k, theta_k, rho_sq, lim)
        choices = set()
        for n2, y, zr in cands:
            shifts = (0, -1, 1) if k else (0,)
            for kk in shifts:
                # c_k^kk * c lies in the reduced slab set of the previous stage
                z = tuple(a - kk * b for a, b in zip(zr, st.labels[k - 1])) if k else zr
                if not T.contains(z):
                    continue
                ok = True
                for i in range(k):
                    a, b = st.us[i], st.stage_vector(z, i)
                    cth = float(dot(a, b)) / math.sqrt(float(norm2(a)) * float(norm2(b)))
                    if cth < -float(th) - 1e-12 or cth > math.sqrt(cos_hi_sq) + 1e-12:
                        ok = False
                        break
                if ok:
                    choices.add(z)
        for z in sorted(choices):
            child = _Stages(T, st.slab)
            for lab in st.labels:
                child.push(lab)
            child.push(z)
            rec(child)

    rec(_Stages(T, "upper"))
    # bases are unordered within a stage only through the choices above, dedupe
    uniq = sorted({tuple(b) for b in out})
    return [list(b) for b in uniq]


def generalized_count_bound(n: int, theta1: float) -> float:
    """Packing bound on the number of generalized bases: prod_d 3 (5 + 4 theta_1)^d."""
    return float(np.prod([3 * (5 + 4 * theta1) ** d for d in range(1, n + 1)]))


# ---------------------------------------------------------------------------
# representation and verification


def _label_matrix(B: ShortBasis) -> np.ndarray:
    return np.array(B.labels, dtype=np.int64).T  # rank x m


def represent(B: ShortBasis, c: Label, radius_sq=None) -> tuple[int, ...]:
    """Exponents l with c = c_1^l1 * ... * c_m^lm."""
    T = B.subset
    radius_sq = B.rho_bar_sq if radius_sq is None else radius_sq
    c = tuple(int(a) for a in c)
    if T.norm2(c) > radius_sq:
        raise OutOfRange(f"element {c} lies outside the certified radius")
    Z = _label_matrix(B)
    l, *_ = np.linalg.lstsq(Z.astype(float), np.array(c, dtype=float), rcond=None)
    li = tuple(int(round(x)) for x in l)
    if tuple(int(x) for x in Z @ np.array(li, dtype=np.int64)) != c:
        raise NotCertified(f"element {c} is not in the span of the basis")
    return li


def _word_labels(B: ShortBasis, L: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Final labels of the words c_1^l1 * ... and whether every prefix stays in T."""
    Z = _label_matrix(B).T  # m x rank
    prefix = np.zeros((len(L), Z.shape[1]), dtype=np.int64)
    ok = np.ones(len(L), dtype=bool)
    T = B.subset
    for i in range(B.m):
        prefix = prefix + L[:, i:i + 1] * Z[i][None, :]
        for r, row in enumerate(prefix):
            if ok[r] and not T.contains(tuple(int(a) for a in row)):
                ok[r] = False
    return prefix, ok


def _tuple_box(B: ShortBasis, R: float) -> np.ndarray:
    C = np.array([[float(x) for x in v] for v in B.vectors]).T  # dim x m
    G = C.T @ C
    ginv = np.linalg.inv(G)
    bounds = np.floor(R * np.sqrt(np.diag(ginv)) + 1e-9).astype(int)
    grids = np.meshgrid(*[np.arange(-b, b + 1) for b in bounds], indexing="ij")
    L = np.stack([g.ravel() for g in grids], axis=1)
    q = np.einsum("ij,jk,ik->i", L, G, L)
    return L[q <= (R * (1 + 1e-9) + 1e-12) ** 2]


def _lambda_witness(B: ShortBasis) -> int:
    """1-based index of the basis vector with the worst one-step projection ratio."""
    st = _Stages(B.subset, B.slab)
    for z in B.labels:
        st.push(z)
    worst, idx = None, 1
    for i, z in enumerate(B.labels):
        prev = B.subset.norm2(z)
        for k in range(1, i + 1):
            cur = norm2(st.stage_vector(z, k))
            if worst is None or prev / cur > worst:
                worst, idx = prev / cur, i + 1
            prev = cur
    return idx


def verify_basis_properties(B: ShortBasis, r0_sq=None, max_pairs: int = 200) -> dict:
    """Check normality, unique representation, structure constants and the size estimates."""
    T = B.subset
    th = float(T.theta)
    r0_sq = B.rho_bar_sq if r0_sq is None else r0_sq
    out: dict = {"m": B.m, "r0": math.sqrt(float(r0_sq))}
    # lambda-normal
    lam_sq = B.lambda_sq
    normal = all(norm2(u) <= T.norm2(z) for z, u in zip(B.labels, B.projections))  # |c'| <= |c| by projection
    bound_sq = 1 / (Fraction(1, 2) - 2 * T.theta) if T.exact else 1 / (0.5 - 2 * th)
    out["lambda"] = B.lambda_value
    out["lambda_normal"] = bool(normal and lam_sq <= 4)
    out["lambda_witness"] = None if out["lambda_normal"] else _lambda_witness(B)
    out["lambda_construction_bound"] = bool(lam_sq <= bound_sq)

    # unique representation, exhaustively
    targets = [z for z in T.elements_within(r0_sq)]
    R = math.sqrt(float(r0_sq)) / (1 - th)
    L = _tuple_box(B, R)
    labels, ok = _word_labels(B, L)
    counts: dict = {}
    reps: dict = {}
    tset = set(targets)
    for l, lab, good in zip(L, labels, ok):
        key = tuple(int(a) for a in lab)
        if good and key in tset:
            counts[key] = counts.get(key, 0) + 1
            reps[key] = tuple(int(a) for a in l)
    missing = [z for z in targets if counts.get(z, 0) == 0]
    multiple = [z for z in targets if counts.get(z, 0) > 1]
    out["elements_checked"] = len(targets)
    out["tuples_enumerated"] = int(len(L))
    out["unique_representation"] = not missing and not multiple
    out["missing"] = [list(z) for z in missing[:5]]
    out["multiple"] = [list(z) for z in multiple[:5]]

    # structure constants of commutators
    consts = {}
    for i in range(B.m):
        for j in range(i + 1, B.m):
            a, b = B.labels[i], B.labels[j]
            ab = T.product(a, b)
            aba = None if ab is None else T.product(ab, T.inverse(a))
            comm = None if aba is None else T.product(aba, T.inverse(b))
            if comm is None:
                raise NotCertified(f"commutator of c{i + 1}, c{j + 1} is undefined")
            consts[f"{i + 1},{j + 1}"] = list(represent(B, comm, radius_sq=T.rho_sq))
    out["structure_constants"] = consts
    out["structure_lower_triangular"] = all(
        all(v == 0 for v in vals[int(k.split(',')[0]) - 1:]) for k, vals in consts.items())

    # size: |c - sum l_i c_i| <= theta |sum l_i c_i| <= theta / (1 - theta) |c|
    worst1 = worst2 = 0.0
    ok4 = True
    vecs = B.vectors
    for z, l in reps.items():
        s = tuple(sum((li * v[a] for li, v in zip(l, vecs)), Fraction(0) if T.exact else 0.0)
                  for a in range(T.dim))
        diff = tuple(x - y for x, y in zip(T.vector(z), s))
        if T.exact:
            left, mid, right = norm2(diff), T.theta ** 2 * norm2(s), (T.theta / (1 - T.theta)) ** 2 * T.norm2(z)
            ok4 = ok4 and left <= mid and mid <= right
        else:
            left = math.sqrt(float(norm2(diff)))
            mid = th * math.sqrt(float(norm2(s)))
            right = th / (1 - th) * math.sqrt(float(T.norm2(z)))
            ok4 = ok4 and left <= mid * (1 + 1e-9) + 1e-13 and mid <= right * (1 + 1e-9) + 1e-13
            if mid > 0:
                worst1 = max(worst1, left / mid)
            if right > 0:
                worst2 = max(worst2, mid / right)
    out["size_bounds"] = bool(ok4)
    out["size_ratios"] = [worst1, worst2]

    # words defined when sum |l_i c_i| <= (1 - 2 theta)^2 rho_1
    lens = np.array([math.sqrt(float(T.norm2(z))) for z in B.labels])
    cap = (1 - 2 * th) ** 2 * float(T.rho)
    Lw = _tuple_box(B, min(cap, 4 * R + 4 * float(lens.max())))
    small = Lw[np.abs(Lw) @ lens <= cap]
    _, okw = _word_labels(B, small)
    out["words_defined"] = bool(np.all(okw))

    # 2^(-m^2/2) lower bound for integer combinations (vector sums)
    C = np.array([[float(x) for x in v] for v in vecs]).T
    nz = small[np.any(small != 0, axis=1)]
    if len(nz):
        ratio = np.linalg.norm(nz @ C.T, axis=1) / (np.abs(nz) @ lens)
        out["combination_min_ratio"] = float(ratio.min() * 2 ** (B.m * B.m / 2))
        out["combination_bound"] = bool(ratio.min() >= 2 ** (-B.m * B.m / 2) * (1 - 1e-12))
    else:
        out["combination_min_ratio"], out["combination_bound"] = math.inf, True

    # |a^{-1} * b - (b - a)| <= theta (1 + theta) / rho_1 |a| |b - a|
    elems = T._shortest(max_pairs)
    worst = 0.0
    ok_inv = True
    V = np.array([T.float_vector(a) for a in elems])
    Lab = np.array(elems, dtype=np.int64)
    lim = (1 - 3 * th) * float(T.rho)
    for ia, a in enumerate(elems):
        diffs = Lab - Lab[ia]
        near = np.linalg.norm(V - V[ia], axis=1) <= lim
        if np.linalg.norm(V[ia]) > lim:
            continue
        Wall, inside = T.float_batch(diffs)
        inside &= near
        if not inside.any():
            continue
        idx = np.nonzero(inside)[0]
        W = Wall[idx]
        D = V[idx] - V[ia]
        lhs = np.linalg.norm(W - D, axis=1)
        rhs = th * (1 + th) / float(T.rho) * float(np.linalg.norm(V[ia])) * np.linalg.norm(D, axis=1)
        slack = 1e-12 * (np.linalg.norm(W, axis=1) + np.linalg.norm(D, axis=1) + 1.0)
        if np.any(lhs > rhs * (1 + 1e-9) + slack):
            ok_inv = False
        pos = rhs > 0
        if np.any(pos):
            worst = max(worst, float(np.max(lhs[pos] / rhs[pos])))
    out["inverse_product"] = ok_inv
    out["inverse_product_max_ratio"] = worst
    out["passes"] = bool(out["lambda_normal"] and out["unique_representation"] and out["size_bounds"]
                         and out["words_defined"] and out["combination_bound"] and out["inverse_product"]
                         and out["structure_lower_triangular"])
    return out


def rho1_for_rho_bar(rho_bar: float, n: int, theta: float) -> float:
    """The rho_1 whose schedule ends at the given rho_bar."""
    return rho_bar * (1 + theta) ** (n + 1) * 12.0 ** n * 2.0 ** (n * n / 2)


def basis_from_labels(T: TranslationalSubset, labels: Sequence[Label], slab: str = "upper") -> ShortBasis:
    """Wrap given labels as a basis candidate (no minimality is enforced)."""
    n = T.dim
    rho_sq, bar_sq = radius_schedule(T.rho, T.theta, n, n, T.exact)
    st = _Stages(T, slab)
    for z in labels:
        st.push(tuple(int(a) for a in z))
    return ShortBasis(T, list(st.labels), list(st.us), list(st.us_sq), slab, rho_sq, bar_sq)

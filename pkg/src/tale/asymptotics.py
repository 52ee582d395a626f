"""Asymptotic diagnostics: decay profiles, comparison ODEs, decay fits and probes."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import (ConfigError, CurvatureUnderflow, HypothesisViolated, IntegralDiverges,
                     InvalidParameter, SupportViolation)
from .metrics import MetricModel, curvature_norm

# quadrature runs in u = log s up to this cutoff, the rest is an analytic tail
_LOG_CUTOFF = math.log(1e12)
_QUAD = dict(epsabs=1e-13, epsrel=1e-12, limit=400)


# ---------------------------------------------------------------------------
# decay profiles


@dataclass
class DecayProfile:
    """A nonincreasing decay function K with its integrals K0 and K1.

    Forms: ``zero``; ``power`` A s^-p; ``shifted_power`` A (1+s)^-p;
    ``log`` A (1 + log(1+s))^-q; ``custom`` for a callable (no analytic tail).
    """

    form: str
    amplitude: float = 1.0
    exponent: float = 0.0
    func: Callable[[float], float] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.form not in ("zero", "power", "shifted_power", "log", "custom"):
            raise InvalidParameter(f"unknown decay form {self.form!r}")
        if self.form == "custom" and self.func is None:
            raise InvalidParameter("custom profiles need a callable")
        if self.amplitude < 0:
            raise InvalidParameter("K must be positive")

    @classmethod
    def from_config(cls, cfg: dict) -> "DecayProfile":
        cfg = dict(cfg)
        form = cfg.pop("form", None)
        if form is None:
            raise ConfigError("decay profile needs a 'form'")
        amp = float(cfg.pop("amplitude", 1.0))
        exp = float(cfg.pop("exponent", 0.0))
        if cfg:
            raise ConfigError(f"unknown decay profile keys {sorted(cfg)}")
        return cls(form, amp, exp)

    def describe(self) -> dict:
        return {"form": self.form, "amplitude": self.amplitude, "exponent": self.exponent}

    def K(self, s: float) -> float:
        A, p = self.amplitude, self.exponent
        if self.form == "zero":
            return 0.0
        if self.form == "power":
            return A * s ** (-p)
        if self.form == "shifted_power":
            return A * (1 + s) ** (-p)
        if self.form == "log":
            return A * (1 + math.log1p(s)) ** (-p)
        return float(self.func(s))

    __call__ = K

    def _check_converges(self):
        A, p = self.amplitude, self.exponent
        if self.form in ("power", "shifted_power") and A > 0 and p <= 0:
            raise IntegralDiverges(f"integral of K(s)/s diverges for exponent {p}")
        if self.form == "log" and A > 0 and p <= 1:
            raise IntegralDiverges(f"integral of K(s)/s diverges for log exponent {p}")

    def _tail0(self, U: float) -> float:
        """Integral of K(s)/s over s > e^U."""
        A, p = self.amplitude, self.exponent
        if self.form == "zero":
            return 0.0
        if self.form == "power":
            return A * math.exp(-p * U) / p
        if self.form == "shifted_power":
            # (1+s)^-p = s^-p (1 + O(1/s)); the correction is below 1e-12 relative here
            return A * math.exp(-p * U) / p
        if self.form == "log":
            return A * (1 + U) ** (1 - p) / (p - 1)
        return math.nan

    def K0(self, t: float) -> float:
        """Integral of K(s)/s over [t, infinity)."""
        if t <= 0:
            raise InvalidParameter("K0 needs t > 0")
        self._check_converges()
        if self.form == "zero":
            return 0.0
        u0 = math.log(t)
        f = lambda u: self.K(math.exp(u))
        if self.form == "custom":
            val, err = integrate.quad(f, u0, math.inf, **_QUAD)
            if not math.isfinite(val) or err > 1e-6 * max(1.0, abs(val)):
                raise IntegralDiverges("quadrature of K(s)/s did not converge")
            return val
        U = max(_LOG_CUTOFF, u0 + 1.0)
        val, _ = integrate.quad(f, u0, U, **_QUAD)
        return val + self._tail0(U)

    def K1(self, t: float) -> float:
        """Integral of K(s)/s^2 over [t, infinity)."""
        if t <= 0:
            raise InvalidParameter("K1 needs t > 0")
        if self.form == "zero":
            return 0.0
        val, err = integrate.quad(lambda s: self.K(s) / (s * s), t, math.inf, **_QUAD)
        if not math.isfinite(val):
            raise IntegralDiverges("quadrature of K(s)/s^2 did not converge")
        return val

    def check(self, grid: Sequence[float]) -> dict:
        """Monotonicity of K and K1(t) <= K0(t)/t on a grid."""
        grid = np.asarray(grid, dtype=float)
        Ks = np.array([self.K(s) for s in grid])
        k0 = np.array([self.K0(s) for s in grid])
        k1 = np.array([self.K1(s) for s in grid])
        return {
            "nonincreasing": bool(np.all(np.diff(Ks) <= 1e-15 * np.abs(Ks[:-1]))),
            "k1_le_k0_over_t": bool(np.all(k1 <= k0 / grid * (1 + 1e-10) + 1e-300)),
            "integral_1_inf": self.K0(1.0),
        }

    def af_constant(self, model: MetricModel, radii: Sequence[float]) -> float:
        """Sampled sup of r^2 |Rm| / K(r) along the model's radial ray."""
        vals = []
        for r in radii:
            k = self.K(float(r))
            if k <= 0:
                raise IntegralDiverges("K vanishes on the sample grid")
            vals.append(r * r * curvature_norm(model, model.radial_point(r)) / k)
        return float(max(vals))


def power_profile(exponent: float, amplitude: float = 1.0) -> DecayProfile:
    return DecayProfile("power", amplitude, exponent)


# ---------------------------------------------------------------------------
# comparison ODEs


def _solve_linear(coef: Callable[[float], float], t0: float, t1: float, grid: np.ndarray, J0, dJ0, tol=1e-11):
    sol = integrate.solve_ivp(lambda t, y: [y[1], coef(t) * y[0]], (t0, t1), [J0, dJ0],
                              t_eval=grid, rtol=tol, atol=tol * 1e-3, method="DOP853")
    if not sol.success:
        raise IntegralDiverges(f"comparison ODE failed: {sol.message}")
    return sol.y[0], sol.y[1]


def jacobi_compare(profile: DecayProfile, C0: float = 1.0, t_max: float = 1e3, samples: int = 400) -> dict:
    """J'' = C0 K(t) / (1+t)^2 J, J(0) = 0, J'(0) = 1, against t <= J <= C1 t."""
    profile._check_converges()
    coef = lambda t: C0 * profile.K(t) / (1 + t) ** 2
    # split at t = 1 and run the rest in u = log t, where t^2 / (1+t)^2 -> 1 leaves the K0 tail
    head, _ = integrate.quad(lambda t: t * coef(t) if t > 0 else 0.0, 0, 1, **_QUAD)
    mid, _ = integrate.quad(lambda u: math.exp(2 * u) * coef(math.exp(u)), 0, _LOG_CUTOFF, **_QUAD)
    tail = C0 * profile._tail0(_LOG_CUTOFF) if profile.form != "custom" else 0.0
    env = head + mid + tail
    if not math.isfinite(env):
        raise IntegralDiverges("envelope integral diverges")
    C1 = math.exp(env)
    try:
        singular = not math.isfinite(coef(0.0))
    except ZeroDivisionError:
        singular = True
    # an integrable singularity of K at 0: start just to the right, where J = t to first order
    t0 = 1e-12 if singular else 0.0
    t = np.concatenate([[t0], np.geomspace(1e-3, t_max, samples - 1)])
    J, dJ = _solve_linear(coef, t0, t_max, t, t0, 1.0)
    ratio = J[1:] / t[1:]
    lower = bool(np.all(ratio >= 1 - 1e-9))
    upper = bool(np.all(ratio <= C1 * (1 + 1e-9)))
    return {"C1": C1, "t": t, "J": J, "ratio_min": float(ratio.min()), "ratio_max": float(ratio.max()),
            "lower_holds": lower, "upper_holds": upper, "passes": lower and upper}


def shifted_jacobi_compare(profile: DecayProfile, t_max: float = 1e3, samples: int = 400) -> dict:
    """J'' = 4 t^-2 K(t/2) J, J(1) = 0, J'(1) = 1, against t - 1 <= J <= C t with C = exp(4 K0(1/2))."""
    C = math.exp(4 * profile.K0(0.5))
    coef = lambda t: 4 * profile.K(t / 2) / (t * t)
    t = np.geomspace(1.0, t_max, samples)
    J, dJ = _solve_linear(coef, 1.0, t_max, t, 0.0, 1.0)
    lower = bool(np.all(J >= (t - 1) * (1 - 1e-9) - 1e-12))
    upper = bool(np.all(J <= C * t))
    return {"C": C, "t": t, "J": J, "J_prime_end": float(dJ[-1]), "max_ratio": float(np.max(J / t)),
            "lower_holds": lower, "upper_holds": upper, "passes": lower and upper}


# ---------------------------------------------------------------------------
# Gronwall-type bound


def gronwall_oracle(t: Sequence[float], x: Sequence[float], k: Callable[[float], float],
                    dx: Sequence[float] | None = None, rtol: float = 1e-6) -> dict:
    """Check the Gronwall hypotheses on samples and compare sup x with its constant.

    The tail of the integral past the last sample uses x held at its last
    value.  With kappa = int_1^inf k(s)/s ds the a-priori constant is
    2 exp(5 kappa / (1 - 5 kappa)); the t_i / sigma_i iteration on the samples
    gives a second, data-driven constant.
    """
    t = np.asarray(t, dtype=float)
    x = np.asarray(x, dtype=float)
    if t[0] != 1.0:
        raise HypothesisViolated("samples must start at t = 1")
    if np.any(x <= 0):
        raise HypothesisViolated("x must be positive")
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            kappa, _ = integrate.quad(lambda s: k(s) / s, 1.0, math.inf, **_QUAD)
        except integrate.IntegrationWarning:
            kappa = math.inf
    if not kappa < 0.1:
        raise HypothesisViolated(f"integral of k(s)/s is {kappa:.4g}, not below 1/10")
    ks = np.array([k(s) for s in t])
    if np.any(np.diff(ks) > 1e-15 * ks[:-1]):
        raise HypothesisViolated("k is not nonincreasing")
    x1 = x[0]
    if np.any(x > t * x1 * (1 + rtol)):
        i = int(np.argmax(x / (t * x1)))
        raise HypothesisViolated(f"x(t) <= t x(1) fails at t={t[i]:.6g}")
    dx = np.gradient(x, t, edge_order=2) if dx is None else np.asarray(dx, dtype=float)
    # int_t^inf x k / s^2 on the samples plus the held tail
    f = x * ks / t**2
    seg = 0.5 * (f[1:] + f[:-1]) * np.diff(t)
    inner = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    tail, _ = integrate.quad(lambda s: k(s) / (s * s), t[-1], math.inf, **_QUAD)
    rhs = inner + x[-1] * tail
    bad = dx > rhs * (1 + rtol) + rtol * np.abs(dx).max() * 1e-3
    if np.any(bad):
        i = int(np.argmax(bad))
        raise HypothesisViolated(f"x'(t) <= int x k / s^2 fails at t={t[i]:.6g}")
    C = 2 * math.exp(5 * kappa / (1 - 5 * kappa))
    xs = x / x1
    # t_i = inf{t : x(s) <= 2^-i s for all s >= t}, resolved on the sample grid
    ti = []
    for i in range(60):
        ok = xs <= 2.0 ** -i * t * (1 + 1e-12)
        if not ok[-1]:
            break
        bad_idx = np.nonzero(~ok)[0]
        ti.append(float(t[bad_idx[-1] + 1]) if len(bad_idx) else float(t[0]))
    sup = float(xs.max())
    return {"kappa": kappa, "C": C, "observed_sup": sup, "passes": bool(sup <= C),
            "t_sequence": ti[:12], "hypotheses_hold": True}


# ---------------------------------------------------------------------------
# decay fits


@dataclass
class DecayFit:
    model: str
    ray: str
    r_range: tuple
    slope: float
    residual: float
    samples: int
    exponential_rate: float | None = None
    exponential_residual: float | None = None

    def describe(self) -> dict:
        return {"model": self.model, "ray": self.ray, "r_range": list(self.r_range), "slope": self.slope,
                "residual": self.residual, "samples": self.samples,
                "exponential_rate": self.exponential_rate, "exponential_residual": self.exponential_residual}


def fit_decay_samples(r: Sequence[float], values: Sequence[float], exponential: bool = False) -> dict:
    r = np.asarray(r, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(r) < 20:
        raise InvalidParameter("decay fits need at least 20 samples")
    if np.any(v <= 1e-14):
        raise CurvatureUnderflow(f"|Rm| below 1e-14 at r={r[np.argmax(v <= 1e-14)]:.6g}")
    A = np.stack([np.log(r), np.ones_like(r)], axis=1)
    coef, res, *_ = np.linalg.lstsq(A, np.log(v), rcond=None)
    out = {"slope": float(coef[0]), "residual": float(np.sqrt(res[0] / len(r))) if len(res) else 0.0}
    if exponential:
        B = np.stack([r, np.ones_like(r)], axis=1)
        c2, res2, *_ = np.linalg.lstsq(B, np.log(v), rcond=None)
        out["rate"] = float(-c2[0])
        out["exp_residual"] = float(np.sqrt(res2[0] / len(r))) if len(res2) else 0.0
    return out


def decay_fit(model: MetricModel, r_range: tuple, samples: int = 24, exponential: bool = False,
              method: str = "analytic") -> DecayFit:
    """Least-squares slope of log |Rm| against log r on the model's radial ray."""
    r0, r1 = map(float, r_range)
    if samples < 20:
        raise InvalidParameter("decay fits need at least 20 samples")
    if model.is_flat:
        raise CurvatureUnderflow(f"{model.name} is flat")
    r = np.geomspace(r0, r1, samples)
    vals = [curvature_norm(model, model.radial_point(x), method=method) for x in r]
    fit = fit_decay_samples(r, vals, exponential)
    return DecayFit(model.name, "radial", (r0, r1), fit["slope"], fit["residual"], samples,
                    fit.get("rate"), fit.get("exp_residual"))


def decay_exponent_prediction(l: int, n: int) -> float:
    """(l - 2)(n - 1) / (n - 3): the predicted curvature decay exponent."""
    if n <= 3:
        raise InvalidParameter("the exponent formula needs n > 3")
    return (l - 2) * (n - 1) / (n - 3)


# ---------------------------------------------------------------------------
# tangent cone probe


def cone_distance(theta: float, r: float, w: float, k_max: int | None = None) -> tuple[float, int]:
    """min over |k| <= k_max of sqrt(k^2 + r^2 |e^{i(w - 2 pi k theta)} - 1|^2)."""
    if k_max is None:
        k_max = int(math.ceil(20 * math.sqrt(r)))
    k = np.arange(-k_max, k_max + 1)
    ang = w - 2 * math.pi * k * theta
    chord = 2 * np.abs(np.sin(ang / 2))
    d = np.sqrt(k.astype(float) ** 2 + (r * chord) ** 2)
    j = int(np.argmin(d))
    return float(d[j]), int(k[j])


def tangent_cone_probe(theta: float, radii: Sequence[float], angles: Sequence[float] | None = None,
                       samples: int = 32, seed: int = 0, k_max: int | None = None) -> dict:
    """Distances between the points at angles 0 and w on the circle of radius r in the quotient."""
    if angles is None:
        angles = np.random.default_rng(seed).uniform(0, 2 * math.pi, samples)
    rows = []
    for r in radii:
        dists = [cone_distance(theta, float(r), float(w), k_max)[0] for w in angles]
        m = max(dists)
        rows.append({"radius": float(r), "max_distance": m, "ratio_sqrt_r": m / math.sqrt(r),
                     "ratio_r": m / r})
    return {"theta": float(theta), "angles": [float(w) for w in angles], "rows": rows,
            "max_ratio_sqrt_r": max(row["ratio_sqrt_r"] for row in rows)}


# ---------------------------------------------------------------------------
# Hardy inequality


def hardy_check(t: Sequence[float], phi: Sequence[float], delta: float, R0: float = 0.0,
                dphi: Sequence[float] | None = None, tol: float = 1e-3) -> dict:
    """int phi^2 (t - R0)^delta against int phi'^2 (t - R0)^(delta + 2) on a sample grid."""
    if delta == -1:
        raise InvalidParameter("delta = -1 is excluded")
    t = np.asarray(t, dtype=float)
    phi = np.asarray(phi, dtype=float)
    if t[0] <= R0:
        raise SupportViolation("support must lie to the right of R0")
    dphi = np.gradient(phi, t, edge_order=2) if dphi is None else np.asarray(dphi, dtype=float)
    scale = max(np.abs(phi).max(), 1e-300)
    if abs(phi[0]) > 1e-8 * scale or abs(phi[-1]) > 1e-8 * scale:
        raise SupportViolation("phi does not vanish at the ends")
    dscale = max(np.abs(dphi).max(), 1e-300)
    if abs(dphi[0]) > 1e-6 * dscale or abs(dphi[-1]) > 1e-6 * dscale:
        raise SupportViolation("phi' does not vanish at the ends")
    s = t - R0
    num = integrate.simpson(phi**2 * s**delta, x=t)
    den = integrate.simpson(dphi**2 * s ** (delta + 2), x=t)
    if den <= 0:
        raise SupportViolation("phi is identically zero")
    ratio = float(num / den)
    bound = 4 / (delta + 1) ** 2
    return {"ratio": ratio, "bound": bound, "passes": bool(ratio <= bound + tol)}


def bump(a: float, b: float, n: int = 2001, scale: float = 1.0):
    """((t - a)(b - t))^3 on [a, b] and its derivative: a C^2 function vanishing to second order."""
    t = np.linspace(a, b, n)
    p = (t - a) * (b - t)
    return t, scale * p**3, scale * 3 * p**2 * (a + b - 2 * t)


def random_bumps(count: int, seed: int, lo: float = 1.0, hi: float = 10.0):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        a = rng.uniform(lo, hi)
        b = a + rng.uniform(0.2, hi - lo)
        yield bump(a, b, scale=float(rng.uniform(0.1, 10.0)))

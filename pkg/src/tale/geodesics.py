"""Geodesics, parallel transport, exp and log maps.

All integrations use an adaptive Dormand-Prince 5(4) pair.  The state is
(position, velocity) and optionally a frame (transported vectors) or the
Jacobian of the exponential map (variational equations).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from .errors import AmbiguousSolution, LeftDomain, NoConvergence, NotAFrame, StepUnderflow
from .metrics import MetricModel

DEFAULT_TOL = 1e-10


@dataclass
class CurvePath:
    """Sampled curve: parameters, chart points, chart velocities."""

    t: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    kind: str = "curve"
    tol: float = DEFAULT_TOL
    frames: np.ndarray | None = None
    jacobian: np.ndarray | None = None
    speed_drift: float = 0.0

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]

    def arc_length(self, model: MetricModel) -> float:
        if self.kind == "geodesic":
            v = self.velocities[0]
            return float(math.sqrt(v @ model.metric(self.points[0]) @ v) * (self.t[-1] - self.t[0]))
        speeds = np.array([math.sqrt(v @ model.metric(x) @ v) for x, v in zip(self.points, self.velocities)])
        return float(np.trapz(speeds, self.t))

    @classmethod
    def from_samples(cls, t, points, velocities=None) -> "CurvePath":
        t = np.asarray(t, dtype=float)
        points = np.asarray(points, dtype=float)
        if velocities is None:
            velocities = np.gradient(points, t, axis=0, edge_order=2)
        return cls(t, points, np.asarray(velocities, dtype=float))


# ---------------------------------------------------------------------------
# frames


def norm(model: MetricModel, x, v) -> float:
    return float(math.sqrt(max(np.asarray(v) @ model.metric(x) @ np.asarray(v), 0.0)))


def inner(model: MetricModel, x, u, v) -> float:
    return float(np.asarray(u) @ model.metric(x) @ np.asarray(v))


def orthonormal_frame(model: MetricModel, x) -> np.ndarray:
    """Gram-Schmidt of the chart axes under g(x); columns are the frame vectors."""
    g = model.metric(x)
    L = np.linalg.cholesky(g)
    return np.linalg.inv(L).T


def check_frame(model: MetricModel, x, E, tol: float = 1e-8) -> None:
    E = np.asarray(E, dtype=float)
    G = E.T @ model.metric(x) @ E
    if E.shape != (model.dim, model.dim) or np.max(np.abs(G - np.eye(model.dim))) > tol:
        raise NotAFrame("frame is not orthonormal at the base point")


def frame_coordinates(model: MetricModel, x, E, v) -> np.ndarray:
    """Components of the chart vector v in the orthonormal frame E at x."""
    return E.T @ model.metric(x) @ np.asarray(v, dtype=float)


# ---------------------------------------------------------------------------
# integration core


def _solve(model: MetricModel, y0, rhs, t_end, tol, scale, t_eval=None, dense=False):
    events = None
    if math.isfinite(model.domain_margin(y0[: model.dim])):
        n = model.dim

        def leave(t, y):
            return model.domain_margin(y[:n])

        leave.terminal = True
        leave.direction = -1
        events = leave
    sol = solve_ivp(rhs, (0.0, t_end), y0, method="RK45", rtol=tol, atol=tol * scale, t_eval=t_eval,
                    events=events, dense_output=dense)
    if sol.status == 1:
        raise LeftDomain(float(sol.t_events[0][0]))
    if sol.status != 0:
        raise StepUnderflow(sol.message)
    return sol


def geodesic_rhs(model: MetricModel, n_frame: int = 0, jacobian: bool = False):
    n = model.dim

    if jacobian:
        def rhs(t, y):
            x, v = y[:n], y[n:2 * n]
            J = y[2 * n:2 * n + n * n].reshape(n, n)
            Jd = y[2 * n + n * n:].reshape(n, n)
            G, dG = model.christoffel_and_derivative(x)
            Gv = np.einsum("kij,i->kj", G, v)
            a = -Gv @ v
            Jdd = -np.einsum("kijm,i,j,mc->kc", dG, v, v, J, optimize=True) - 2.0 * Gv @ Jd
            return np.concatenate([v, a, Jd.ravel(), Jdd.ravel()])
        return rhs

    def rhs(t, y):
        x, v = y[:n], y[n:2 * n]
        G = model.christoffel(x)
        Gv = np.einsum("kij,i->kj", G, v)
        a = -Gv @ v
        if n_frame:
            E = y[2 * n:].reshape(n, n_frame)
            return np.concatenate([v, a, (-Gv @ E).ravel()])
        return np.concatenate([v, a])

    return rhs


def integrate_geodesic(model: MetricModel, p, v, t_end: float = 1.0, tol: float = DEFAULT_TOL,
                       frame=None, jacobian: bool = False, t_eval=None) -> CurvePath:
    """Geodesic with gamma(0) = p, gamma'(0) = v on the affine interval [0, t_end]."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    n = model.dim
    model.check_domain(p)
    E0 = None if frame is None else np.asarray(frame, dtype=float).reshape(n, -1)
    if model.is_flat:
        ts = np.linspace(0.0, t_end, 2) if t_eval is None else np.asarray(t_eval, dtype=float)
        pts = p[None, :] + ts[:, None] * v[None, :]
        for x in pts:
            if not model.domain_margin(x) > 0:
                raise LeftDomain(float(ts[-1]))
        vel = np.repeat(v[None, :], len(ts), axis=0)
        frames = None if E0 is None else np.repeat(E0[None], len(ts), axis=0)
        jac = t_end * np.eye(n) if jacobian else None
        return CurvePath(ts, pts, vel, "geodesic", tol, frames, jac)
    scale = max(1.0, float(np.max(np.abs(p))), float(np.max(np.abs(v))))
    if jacobian:
        y0 = np.concatenate([p, v, np.zeros(n * n), np.eye(n).ravel()])
        sol = _solve(model, y0, geodesic_rhs(model, jacobian=True), t_end, tol, scale, t_eval)
        Y = sol.y
        jac = Y[2 * n:2 * n + n * n, -1].reshape(n, n)
        frames = None
    else:
        k = 0 if E0 is None else E0.shape[1]
        y0 = np.concatenate([p, v] + ([E0.ravel()] if k else []))
        sol = _solve(model, y0, geodesic_rhs(model, n_frame=k), t_end, tol, scale, t_eval)
        Y = sol.y
        jac = None
        frames = None if not k else Y[2 * n:].T.reshape(-1, n, k)
    pts, vel = Y[:n].T.copy(), Y[n:2 * n].T.copy()
    s0 = norm(model, pts[0], vel[0])
    s1 = norm(model, pts[-1], vel[-1])
    drift = abs(s1 - s0) / max(s0, 1e-300)
    return CurvePath(sol.t, pts, vel, "geodesic", tol, frames, jac, drift)


def exp_map(model: MetricModel, p, v, tol: float = DEFAULT_TOL) -> np.ndarray:
    return integrate_geodesic(model, p, v, 1.0, tol).end


def transport_along_geodesic(model: MetricModel, p, v, frame, t_end: float = 1.0,
                             tol: float = DEFAULT_TOL, t_eval=None) -> CurvePath:
    return integrate_geodesic(model, p, v, t_end, tol, frame=frame, t_eval=t_eval)


def parallel_transport(model: MetricModel, path: CurvePath, frame, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Transport the columns of ``frame`` along ``path``; returns the frame at the end."""
    E0 = np.asarray(frame, dtype=float)
    n = model.dim
    E0 = E0.reshape(n, -1)
    if path.kind == "geodesic":
        t_end = float(path.t[-1] - path.t[0])
        out = integrate_geodesic(model, path.start, path.velocities[0], t_end, tol, frame=E0)
        return out.frames[-1]
    if model.is_flat:
        return E0.copy()
    k = E0.shape[1]
    E = E0.copy()
    # piecewise cubic Hermite reconstruction between samples
    spline = CubicHermiteSpline(path.t, path.points, path.velocities, axis=0)
    dspline = spline.derivative()

    def rhs(t, y):
        x = spline(t)
        xd = dspline(t)
        G = model.christoffel(x)
        return (-np.einsum("kij,i,jc->kc", G, xd, y.reshape(n, k))).ravel()

    for a, b in zip(path.t[:-1], path.t[1:]):
        sol = solve_ivp(rhs, (a, b), E.ravel(), method="RK45", rtol=tol, atol=tol)
        if sol.status != 0:
            raise StepUnderflow(sol.message)
        E = sol.y[:, -1].reshape(n, k)
    return E


# ---------------------------------------------------------------------------
# log map


@dataclass
class LogResult:
    v: np.ndarray
    residual: float
    iterations: int
    jacobian: np.ndarray = field(repr=False, default=None)


def _newton(model, p, q, v0, tol, max_iter, jacobian=None):
    v = np.asarray(v0, dtype=float).copy()
    scale = 1.0 + float(np.linalg.norm(q))
    J = jacobian
    res_norm = math.inf
    for it in range(1, max_iter + 1):
        if J is None:
            path = integrate_geodesic(model, p, v, 1.0, tol, jacobian=True)
            J = path.jacobian
        else:
            path = integrate_geodesic(model, p, v, 1.0, tol)
        r = path.end - q
        res_norm = float(np.linalg.norm(r))
        if res_norm <= 10 * tol * scale:
            return LogResult(v, res_norm, it, J)
        try:
            dv = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence("singular Jacobian of exp") from exc
        v = v + dv
        # refresh the Jacobian unless we are clearly in the quadratic regime
        if jacobian is None or res_norm > 1e-4 * scale:
            J = None
    raise NoConvergence(f"log map did not converge (residual {res_norm:.3e})")


def log_map(model: MetricModel, p, q, tol: float = DEFAULT_TOL, starts: int = 8, guess=None,
            max_iter: int = 30, jacobian=None) -> LogResult:
    """Initial velocity v with exp(p, v) = q, by Newton on the variational equations.

    With ``starts > 1`` the iteration is restarted from perturbed chords and
    distinct converged answers raise AmbiguousSolution.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if model.is_flat:
        return LogResult(q - p, 0.0, 0, np.eye(model.dim))
    chord = q - p if guess is None else np.asarray(guess, dtype=float)
    if starts <= 1:
        return _newton(model, p, q, chord, tol, max_iter, jacobian)
    rng = np.random.default_rng(12345)
    sols: list[LogResult] = []
    errors = []
    for i in range(starts):
        v0 = chord if i == 0 else chord + 0.05 * np.linalg.norm(chord) * rng.standard_normal(model.dim)
        try:
            sols.append(_newton(model, p, q, v0, tol, max_iter))
        except (NoConvergence, LeftDomain, StepUnderflow) as exc:
            errors.append(exc)
    if not sols:
        raise NoConvergence(f"log map failed from all {starts} starts: {errors[0]}")
    best = min(sols, key=lambda s: norm(model, p, s.v))
    for s in sols:
        if np.linalg.norm(s.v - best.v) > 1e-6 * (1.0 + np.linalg.norm(best.v)):
            raise AmbiguousSolution("multi-start log map found distinct geodesics")
    return best


# ---------------------------------------------------------------------------
# rays


def radial_ray(model: MetricModel, r0: float, length: float, samples, tol: float = DEFAULT_TOL,
               frame=None) -> CurvePath:
    """Unit-speed geodesic leaving the model's radial point at r0 in the radial direction.

    ``samples`` are arc-length parameters in [0, length]; frames are transported if given.
    """
    p = model.radial_point(r0)
    e = model.radial_direction(p)
    v = e / norm(model, p, e)
    if frame is None:
        frame = orthonormal_frame(model, p)
    t_eval = np.asarray(samples, dtype=float)
    return integrate_geodesic(model, p, v, length, tol, frame=frame, t_eval=t_eval)


def ray_length_to(model: MetricModel, r0: float, r1: float, tol: float = DEFAULT_TOL) -> float:
    """Arc length along the radial ray from radius r0 until radius r1 is reached."""
    p = model.radial_point(r0)
    e = model.radial_direction(p)
    v = e / norm(model, p, e)
    if model.is_flat:
        return float(r1 - r0)
    n = model.dim

    def hit(t, y):
        return model.radius_of(y[:n]) - r1

    hit.terminal = True
    hit.direction = 1
    span = 10.0 * (r1 - r0) + 10.0
    sol = solve_ivp(geodesic_rhs(model), (0.0, span), np.concatenate([p, v]), method="RK45",
                    rtol=tol, atol=tol * max(1.0, r1), events=hit)
    if sol.status != 1:
        raise StepUnderflow("radial ray never reached the requested radius")
    return float(sol.t_events[0][0])


def radial_ray_to(model: MetricModel, r0: float, r1: float, n_samples: int = 50, spacing: str = "linear",
                  tol: float = DEFAULT_TOL) -> CurvePath:
    """Radial ray from r0 to r1 with a transported frame, sampled in arc length."""
    length = ray_length_to(model, r0, r1, tol)
    if spacing == "log":
        a = max(float(r0), 1.0)
        s = np.geomspace(a, a + length, n_samples) - a
    else:
        s = np.linspace(0.0, length, n_samples)
    s[-1] = length
    return radial_ray(model, r0, length, s, tol)

"""Lorentzian chart geometry at the coordinate level.

Everything works on a single chart: a metric field is a callable returning
the matrix ``g_ij(x)`` in signature (-, +, ..., +), together with a way to
obtain its first derivatives (closed form, forward autodiff, or central
differences).  On top of that sit Christoffel symbols, the scalar Hamiltonian
``q(x, xi) = g^{ij} xi_i xi_j``, its flow field, null bicharacteristic
integration, and orthonormal frames built by Gram-Schmidt in chart order.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _ad
from .errors import (
    ConfigError,
    DegenerateMetric,
    FrameDegenerate,
    NotOnCharacteristicSet,
    OutsideChart,
    StepUnderflow,
    UnsupportedDimension,
    ZeroCovector,
)

__all__ = [
    "MetricField",
    "PhasePoint",
    "FrameSample",
    "FrameField",
    "Trajectory",
    "minkowski",
    "minkowski_linear_chart",
    "schwarzschild",
    "schwarzschild_isotropic",
    "conformal_flat",
    "catalog_metric",
    "eval_metric",
    "metric_derivative",
    "christoffel",
    "raise_covector",
    "lower_vector",
    "hamiltonian_q",
    "hamiltonian_field",
    "orthonormal_frame",
    "integrate_bicharacteristic",
    "random_chart_point",
    "random_null_covector",
    "null_project_covector",
]

_DET_TOL = 1e-14
_PIVOT_TOL = 1e-12


# ---------------------------------------------------------------------------
# containers


@dataclass
class MetricField:
    """A chart-level Lorentzian metric.

    ``eval`` maps a coordinate point to the matrix ``g_ij``.  Derivatives are
    produced according to ``derivative_mode``:

    * ``"closed_form"``    -- ``d_eval(x)[k, i, j] = d_k g_ij`` supplied;
    * ``"forward_autodiff"`` -- ``eval`` is called on dual numbers;
    * ``"central_difference"`` -- symmetric differences with per-component
      step ``fd_step * (1 + |x_k|)``.
    """

    dim: int
    eval: Callable
    derivative_mode: str = "central_difference"
    d_eval: Optional[Callable] = None
    fd_step: float = 1e-5
    domain_guard: Callable = lambda x: True
    guard_margin: Optional[Callable] = None
    name: str = "custom"
    diagonal: bool = False
    sample_box: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.dim < 2:
            raise UnsupportedDimension(f"dim {self.dim} < 2")
        modes = ("closed_form", "forward_autodiff", "central_difference")
        if self.derivative_mode not in modes:
            raise ConfigError(f"unknown derivative_mode {self.derivative_mode!r}")
        if self.derivative_mode == "closed_form" and self.d_eval is None:
            raise ConfigError("closed_form derivative_mode requires d_eval")
        if self.sample_box is not None:
            self.sample_box = np.asarray(self.sample_box, dtype=float)


@dataclass
class PhasePoint:
    """A cotangent point (x, xi).  The covector must be nonzero."""

    x: np.ndarray
    xi: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.xi = np.asarray(self.xi, dtype=float)
        if self.x.shape != self.xi.shape or self.x.ndim != 1:
            raise ConfigError("x and xi must be vectors of equal length")
        if not np.any(self.xi):
            raise ZeroCovector("phase point has vanishing covector")


@dataclass
class FrameSample:
    """Orthonormal frame at one point: columns of E are the frame vectors,
    rows of E_inv the dual coframe."""

    E: np.ndarray
    E_inv: np.ndarray


class FrameField:
    """Per-point orthonormal frame generator for a metric field."""

    def __init__(self, metric: MetricField):
        self.metric = metric

    def __call__(self, x) -> FrameSample:
        return orthonormal_frame(self.metric, x)


@dataclass
class Trajectory:
    """Bicharacteristic samples.  ``left_chart`` marks a partial run that
    stopped at the domain guard."""

    ts: np.ndarray
    xs: np.ndarray
    xis: np.ndarray
    qs: np.ndarray
    integrator: str
    step: Optional[float]
    left_chart: bool = False

    @property
    def n(self) -> int:
        return len(self.ts)

    def phase(self, i: int) -> PhasePoint:
        return PhasePoint(self.xs[i], self.xis[i])

    @property
    def samples(self):
        return [(self.ts[i], self.phase(i)) for i in range(self.n)]


# ---------------------------------------------------------------------------
# metric evaluation


def _metric_value(m: MetricField, x) -> np.ndarray:
    if not m.domain_guard(x):
        raise OutsideChart(f"point {np.asarray(x)} outside chart of {m.name}")
    return np.asarray(m.eval(x), dtype=float)


def _metric_jet(m: MetricField, x):
    """(g, dg) with dg[k, i, j] = d_k g_ij, by the configured mode."""
    x = np.asarray(x, dtype=float)
    g = _metric_value(m, x)
    if m.derivative_mode == "closed_form":
        dg = np.asarray(m.d_eval(x), dtype=float)
    elif m.derivative_mode == "forward_autodiff":
        gd = m.eval(_ad.seed_vector(x))
        dg = _ad.gradient(gd, m.dim)
    else:
        d = m.dim
        dg = np.empty((d, d, d))
        for k in range(d):
            h = m.fd_step * (1.0 + abs(x[k]))
            xp = x.copy()
            xm = x.copy()
            xp[k] += h
            xm[k] -= h
            dg[k] = (np.asarray(m.eval(xp), float)
                     - np.asarray(m.eval(xm), float)) / (2.0 * h)
    return g, dg


def eval_metric(m: MetricField, x):
    """Return (g, g_inverse) at x, with degeneracy checks."""
    g = _metric_value(m, x)
    scale = 1.0 + np.max(np.abs(g))
    if np.max(np.abs(g - g.T)) > 1e-12 * scale:
        raise ValueError("metric evaluator returned a non-symmetric matrix")
    if abs(np.linalg.det(g)) < _DET_TOL:
        raise DegenerateMetric(f"|det g| < {_DET_TOL} at {x}")
    return g, np.linalg.inv(g)


def metric_derivative(m: MetricField, x) -> np.ndarray:
    """dg[k, i, j] = d_k g_ij by the configured derivative mode."""
    return _metric_jet(m, x)[1]


def christoffel(m: MetricField, x) -> np.ndarray:
    """Levi-Civita symbols, indexed Gamma[i, j, k] = Gamma^i_{jk}."""
    g, dg = _metric_jet(m, x)
    ginv = np.linalg.inv(g)
    # T[l, j, k] = d_j g_lk + d_k g_lj - d_l g_jk
    T = dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg
    return 0.5 * np.einsum("il,ljk->ijk", ginv, T)


def raise_covector(m: MetricField, x, xi) -> np.ndarray:
    g = _metric_value(m, x)
    return np.linalg.solve(g, np.asarray(xi, dtype=float))


def lower_vector(m: MetricField, x, Z) -> np.ndarray:
    g = _metric_value(m, x)
    return g @ np.asarray(Z, dtype=float)


def hamiltonian_q(m: MetricField, x, xi) -> float:
    xi = np.asarray(xi, dtype=float)
    g = _metric_value(m, x)
    return float(xi @ np.linalg.solve(g, xi))


def _phase_core(m: MetricField, x, xi):
    """Shared kernel of the q-flow right-hand side.

    Returns (g, dg, Z, dx, dxi); every caller that must stay bitwise
    consistent with trajectory integration goes through here.
    """
    if not m.domain_guard(x):
        raise OutsideChart(f"flow left chart of {m.name}")
    g, dg = _metric_jet(m, x)
    Z = np.linalg.solve(g, xi)
    dx = 2.0 * Z
    dxi = np.einsum("iab,a,b->i", dg, Z, Z)
    return g, dg, Z, dx, dxi


def _phase_rhs(m: MetricField, x, xi):
    """Hamiltonian field of q: dx = 2 g^{-1} xi, dxi_i = (d_i g_ab) Z^a Z^b."""
    _, _, _, dx, dxi = _phase_core(m, x, xi)
    return dx, dxi


def hamiltonian_field(m: MetricField, p: PhasePoint):
    """(dx/dt, dxi/dt) of the q-flow at a phase point."""
    return _phase_rhs(m, p.x, p.xi)


# ---------------------------------------------------------------------------
# orthonormal frames


def _gram_schmidt(g):
    """Time-first Gram-Schmidt of the coordinate basis against g.

    Works on float matrices and on object matrices of dual numbers; the
    recursion is plain arithmetic so derivatives flow through.
    """
    d = g.shape[0]
    is_obj = getattr(g, "dtype", None) == object
    dt = object if is_obj else float
    frame = []
    for a in range(d):
        v = np.zeros(d, dtype=dt)
        v[a] = 1.0
        for b, (eb, sb) in enumerate(frame):
            c = np.dot(np.dot(v, g), eb)
            v = v - (sb * c) * eb
        n = np.dot(np.dot(v, g), v)
        pivot = abs(n)
        if pivot < _PIVOT_TOL:
            raise FrameDegenerate(f"Gram-Schmidt pivot {pivot} at column {a}")
        nval = n.val if isinstance(n, _ad.Dual) else float(n)
        want = -1.0 if a == 0 else 1.0
        if math.copysign(1.0, nval) != want:
            raise FrameDegenerate(
                "chart order does not yield a time-first orthonormal frame")
        e = v / np.sqrt(pivot)
        frame.append((e, want))
    E = np.stack([e for e, _ in frame], axis=-1)
    return E


def _frame_jet(m: MetricField, x):
    """(E, dE, E_inv, dE_inv) at x.  dE[k] is the k-th coordinate partial."""
    g, dg = _metric_jet(m, x)
    return _frame_jet_from(m, g, dg)


def _frame_jet_from(m: MetricField, g, dg):
    """Frame jet from an already computed metric jet."""
    d = m.dim
    if m.diagonal:
        gd = np.diagonal(g).copy()
        if gd[0] >= 0.0 or np.any(gd[1:] <= 0.0):
            raise FrameDegenerate("diagonal metric is not time-first Lorentzian")
        piv = np.abs(gd)
        if np.min(piv) < _PIVOT_TOL:
            raise FrameDegenerate(f"diagonal pivot underflow: {np.min(piv)}")
        ediag = piv ** -0.5
        dpiv = np.sign(gd) * np.diagonal(dg, axis1=1, axis2=2)  # (k, a)
        dediag = -0.5 * piv ** -1.5 * dpiv
        E = np.diag(ediag)
        Einv = np.diag(1.0 / ediag)
        dE = np.zeros((d, d, d))
        dEinv = np.zeros((d, d, d))
        idx = np.arange(d)
        dE[:, idx, idx] = dediag
        dEinv[:, idx, idx] = -dediag / ediag**2
        return E, dE, Einv, dEinv
    if not np.any(dg):
        E = _gram_schmidt(g)
        Einv = np.linalg.inv(E)
        z = np.zeros((d, d, d))
        return E, z, Einv, z.copy()
    Eobj = _gram_schmidt(_ad.lift_matrix(g, dg))
    E = _ad.value(Eobj)
    dE = _ad.gradient(Eobj, d)
    Einv = np.linalg.inv(E)
    dEinv = -np.einsum("ij,kjl,lm->kim", Einv, dE, Einv)
    return E, dE, Einv, dEinv


def orthonormal_frame(m: MetricField, x) -> FrameSample:
    """Orthonormal frame at x; deterministic, e_0 future-directed."""
    E, _, Einv, _ = _frame_jet(m, x)
    return FrameSample(E=E, E_inv=Einv)


# ---------------------------------------------------------------------------
# steppers on tuple states

# Dormand-Prince 5(4) pairs, classic coefficients.
_DP_C = (0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0)
_DP_A = (
    (0.2,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
     -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
     11.0 / 84.0),
)
_DP_B5 = _DP_A[-1] + (0.0,)
_DP_B4 = (5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0,
          -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0)


def _combine(y, h, terms):
    """y + h * sum(c * k) componentwise over tuple states, fixed op order."""
    out = []
    for i, yi in enumerate(y):
        acc = terms[0][0] * terms[0][1][i]
        for c, k in terms[1:]:
            if c != 0.0:
                acc = acc + c * k[i]
        out.append(yi + h * acc)
    return tuple(out)


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(_combine(y, h, [(0.5, k1)]))
    k3 = f(_combine(y, h, [(0.5, k2)]))
    k4 = f(_combine(y, h, [(1.0, k3)]))
    return _combine(y, h, [(1.0 / 6.0, k1), (1.0 / 3.0, k2),
                           (1.0 / 3.0, k3), (1.0 / 6.0, k4)])


def _dopri_step(f, y, h):
    """One Dormand-Prince step; returns (y5, error_tuple)."""
    ks = [f(y)]
    for row in _DP_A:
        ks.append(f(_combine(y, h, list(zip(row, ks)))))
    y5 = _combine(y, h, list(zip(_DP_B5, ks)))
    y4 = _combine(y, h, list(zip(_DP_B4, ks)))
    err = tuple(a - b for a, b in zip(y5, y4))
    return y5, err


def _steps_for(t_end: float, step: float):
    n_full = int(math.floor(t_end / step + 1e-12))
    hs = [step] * n_full
    rem = t_end - n_full * step
    if rem > 1e-12 * max(1.0, t_end):
        hs.append(rem)
    return hs


def integrate_bicharacteristic(
    m: MetricField,
    p0: PhasePoint,
    t_end: float,
    integrator: str = "rk4_fixed",
    step: float = 1e-3,
    tol: float = 1e-8,
    null_tol: float = 1e-10,
    require_null: bool = False,
) -> Trajectory:
    """Integrate the Hamiltonian flow of q from p0 over [0, t_end].

    Parameters
    ----------
    integrator : "rk4_fixed" (uses ``step``) or "rk45_adaptive" (uses ``tol``
        as absolute and relative error target).
    require_null : reject seeds with |q| >= null_tol * (1 + |xi|^2).

    A domain-guard violation mid-run truncates the trajectory and sets
    ``left_chart`` instead of raising.
    """
    if t_end <= 0.0:
        raise ConfigError("t_end must be positive")
    if not m.domain_guard(p0.x):
        raise OutsideChart("initial point violates the domain guard")
    q0 = hamiltonian_q(m, p0.x, p0.xi)
    if require_null and abs(q0) >= null_tol * (1.0 + float(p0.xi @ p0.xi)):
        raise NotOnCharacteristicSet(f"|q(p0)| = {abs(q0)}")

    def rhs(y):
        return _phase_rhs(m, y[0], y[1])

    ts = [0.0]
    states = [(p0.x.copy(), p0.xi.copy())]
    left = False

    if integrator == "rk4_fixed":
        y = states[0]
        t = 0.0
        for h in _steps_for(t_end, step):
            try:
                ynew = _rk4_step(rhs, y, h)
            except OutsideChart:
                left = True
                break
            if not m.domain_guard(ynew[0]):
                left = True
                break
            t += h
            y = ynew
            ts.append(t)
            states.append(y)
    elif integrator == "rk45_adaptive":
        y = states[0]
        t = 0.0
        h = min(t_end, max(tol ** 0.2, 1e-6))
        h_min = 1e-13 * max(1.0, t_end)
        while t_end - t > h_min:
            h_try = min(h, t_end - t)
            if h_try < h_min:
                raise StepUnderflow(f"step {h_try} below floor {h_min} at t={t}")
            try:
                ynew, err = _dopri_step(rhs, y, h_try)
            except OutsideChart:
                left = True
                break
            num = 0.0
            cnt = 0
            for e, a, b in zip(err, y, ynew):
                sc = tol + tol * np.maximum(np.abs(a), np.abs(b))
                num += float(np.sum((e / sc) ** 2))
                cnt += e.size
            enorm = math.sqrt(num / cnt)
            if enorm <= 1.0:
                if not m.domain_guard(ynew[0]):
                    left = True
                    break
                t += h_try
                y = ynew
                ts.append(t)
                states.append(y)
            fac = 0.9 * (enorm ** -0.2 if enorm > 0.0 else 5.0)
            h = h_try * min(5.0, max(0.2, fac))
    else:
        raise ConfigError(f"unknown integrator {integrator!r}")

    xs = np.array([s[0] for s in states])
    xis = np.array([s[1] for s in states])
    qs = np.array([hamiltonian_q(m, x, xi) for x, xi in zip(xs, xis)])
    return Trajectory(ts=np.asarray(ts), xs=xs, xis=xis, qs=qs,
                      integrator=integrator,
                      step=step if integrator == "rk4_fixed" else None,
                      left_chart=left)


# ---------------------------------------------------------------------------
# sampling helpers


def random_chart_point(m: MetricField, rng: np.random.Generator) -> np.ndarray:
    if m.sample_box is None:
        raise ConfigError(f"metric {m.name} has no sample box")
    lo = m.sample_box[:, 0]
    hi = m.sample_box[:, 1]
    return lo + (hi - lo) * rng.random(m.dim)


def null_project_covector(m: MetricField, x, xi) -> np.ndarray:
    """Adjust xi_0 so q(x, xi) = 0, keeping the spatial part.

    q is exactly quadratic in xi_0, so the 1-d root solve is the quadratic
    formula; the root nearer the input xi_0 is kept.
    """
    xi = np.asarray(xi, dtype=float)
    _, ginv = eval_metric(m, x)
    a = ginv[0, 0]
    b = 2.0 * ginv[0, 1:] @ xi[1:]
    c = xi[1:] @ ginv[1:, 1:] @ xi[1:]
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        raise NotOnCharacteristicSet("no real null root for this spatial part")
    r = math.sqrt(disc)
    roots = ((-b + r) / (2.0 * a), (-b - r) / (2.0 * a))
    out = xi.copy()
    out[0] = min(roots, key=lambda z: abs(z - xi[0]))
    return out


def random_null_covector(m: MetricField, x, rng: np.random.Generator,
                         future: bool = True) -> np.ndarray:
    """Uniform-sphere spatial part; xi_0 from the null quadratic, picking the
    root whose raised vector is future-directed (positive 0th component)."""
    _, ginv = eval_metric(m, x)
    d = m.dim
    s = rng.normal(size=d - 1)
    s /= np.linalg.norm(s)
    a = ginv[0, 0]
    b = 2.0 * ginv[0, 1:] @ s
    c = s @ ginv[1:, 1:] @ s
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        raise NotOnCharacteristicSet("chart has no null covector over this "
                                     "spatial direction")
    r = math.sqrt(disc)
    want = 1.0 if future else -1.0
    for root in ((-b + r) / (2.0 * a), (-b - r) / (2.0 * a)):
        xi = np.concatenate(([root], s))
        if want * (ginv @ xi)[0] > 0.0:
            return xi
    raise NotOnCharacteristicSet("no root with the requested orientation")


# ---------------------------------------------------------------------------
# metric catalog


def _diag_matrix(entries):
    if any(isinstance(e, _ad.Dual) for e in entries):
        d = len(entries)
        out = np.zeros((d, d), dtype=object)
        for i, e in enumerate(entries):
            out[i, i] = e
        return out
    return np.diag(np.asarray(entries, dtype=float))


def minkowski(dim: int = 4) -> MetricField:
    eta = np.diag([-1.0] + [1.0] * (dim - 1))
    zeros = np.zeros((dim, dim, dim))
    box = np.array([[-5.0, 5.0]] * dim)
    return MetricField(
        dim=dim,
        eval=lambda x: eta.copy(),
        derivative_mode="closed_form",
        d_eval=lambda x: zeros,
        name=f"minkowski{dim}",
        diagonal=True,
        sample_box=box,
    )


def minkowski_linear_chart(L: np.ndarray, name: str = "minkowski_linear") -> MetricField:
    """Flat metric written in coordinates y = L x (constant, generally
    non-diagonal)."""
    L = np.asarray(L, dtype=float)
    dim = L.shape[0]
    Linv = np.linalg.inv(L)
    eta = np.diag([-1.0] + [1.0] * (dim - 1))
    gB = Linv.T @ eta @ Linv
    zeros = np.zeros((dim, dim, dim))
    return MetricField(
        dim=dim,
        eval=lambda x: gB.copy(),
        derivative_mode="closed_form",
        d_eval=lambda x: zeros,
        name=name,
        diagonal=False,
        sample_box=np.array([[-5.0, 5.0]] * dim),
    )


def schwarzschild(mass: float = 1.0, horizon_margin: float = 1e-3,
                  theta_margin: float = 1e-6) -> MetricField:
    M = float(mass)
    if M <= 0.0:
        raise ConfigError("mass must be positive")
    r_min = 2.0 * M * (1.0 + horizon_margin)

    def ev(x):
        r, th = x[1], x[2]
        f = 1.0 - 2.0 * M / r
        s = np.sin(th)
        return _diag_matrix([-f, 1.0 / f, r * r, r * r * s * s])

    def dev(x):
        r, th = float(x[1]), float(x[2])
        f = 1.0 - 2.0 * M / r
        fp = 2.0 * M / (r * r)
        s, c = math.sin(th), math.cos(th)
        dg = np.zeros((4, 4, 4))
        dg[1, 0, 0] = -fp
        dg[1, 1, 1] = -fp / (f * f)
        dg[1, 2, 2] = 2.0 * r
        dg[1, 3, 3] = 2.0 * r * s * s
        dg[2, 3, 3] = 2.0 * r * r * s * c
        return dg

    def guard(x):
        return (x[1] >= r_min) and (np.sin(x[2]) >= theta_margin)

    def margin(x):
        return min(float(x[1]) - r_min, math.sin(float(x[2])) - theta_margin)

    box = np.array([[-5.0, 5.0], [3.0 * M, 50.0 * M],
                    [0.3, math.pi - 0.3], [0.0, 2.0 * math.pi]])
    return MetricField(
        dim=4, eval=ev, derivative_mode="closed_form", d_eval=dev,
        domain_guard=guard, guard_margin=margin,
        name=f"schwarzschild{mass:g}", diagonal=True, sample_box=box,
    )


def _iso_radius(r: float, M: float) -> float:
    return 0.5 * ((r - M) + math.sqrt(r * (r - 2.0 * M)))


def schwarzschild_isotropic(mass: float = 1.0,
                            horizon_margin: float = 1e-3) -> MetricField:
    """Same exterior geometry as ``schwarzschild`` with the radial coordinate
    replaced by its isotropic counterpart."""
    M = float(mass)
    rho_min = 0.5 * M * (1.0 + horizon_margin)

    def ev(x):
        rho, th = x[1], x[2]
        u = 1.0 + M / (2.0 * rho)
        A = (1.0 - M / (2.0 * rho)) / u
        s = np.sin(th)
        u4 = u * u * u * u
        return _diag_matrix([-A * A, u4, u4 * rho * rho,
                             u4 * rho * rho * s * s])

    def dev(x):
        rho, th = float(x[1]), float(x[2])
        u = 1.0 + M / (2.0 * rho)
        du = -M / (2.0 * rho * rho)
        A = (1.0 - M / (2.0 * rho)) / u
        dA = (M / (rho * rho)) / (u * u)
        s, c = math.sin(th), math.cos(th)
        u3, u4 = u**3, u**4
        dg = np.zeros((4, 4, 4))
        dg[1, 0, 0] = -2.0 * A * dA
        dg[1, 1, 1] = 4.0 * u3 * du
        dg[1, 2, 2] = 4.0 * u3 * du * rho * rho + 2.0 * u4 * rho
        dg[1, 3, 3] = dg[1, 2, 2] * s * s
        dg[2, 3, 3] = 2.0 * u4 * rho * rho * s * c
        return dg

    def guard(x):
        return (x[1] >= rho_min) and (np.sin(x[2]) >= 1e-6)

    box = np.array([[-5.0, 5.0],
                    [_iso_radius(3.0 * M, M), _iso_radius(50.0 * M, M)],
                    [0.3, math.pi - 0.3], [0.0, 2.0 * math.pi]])
    return MetricField(
        dim=4, eval=ev, derivative_mode="closed_form", d_eval=dev,
        domain_guard=guard, name=f"schwarzschild_isotropic{mass:g}",
        diagonal=True, sample_box=box,
    )


_EXPR_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp,
    "log": np.log, "sqrt": np.sqrt, "sinh": np.sinh, "cosh": np.cosh,
    "tanh": np.tanh, "arctan": np.arctan, "abs": abs, "pi": math.pi,
}


def conformal_flat(omega, dim: int = 4) -> MetricField:
    """g = Omega(x)^2 * eta.  ``omega`` is a callable or an expression in
    x0..x{dim-1} (aliases t, x, y, z when dim == 4)."""
    if callable(omega):
        om = omega
        label = getattr(omega, "__name__", "callable")
    else:
        expr = str(omega)
        code = compile(expr, "<conformal_factor>", "eval")
        names = [f"x{i}" for i in range(dim)]
        alias = ["t", "x", "y", "z"][:dim] if dim == 4 else []

        def om(pt):
            ns = dict(_EXPR_FUNCS)
            for i, nm in enumerate(names):
                ns[nm] = pt[i]
            for i, nm in enumerate(alias):
                ns[nm] = pt[i]
            return eval(code, {"__builtins__": {}}, ns)

        label = expr
    signs = [-1.0] + [1.0] * (dim - 1)

    def ev(x):
        w = om(x)
        w2 = w * w
        return _diag_matrix([s * w2 for s in signs])

    def guard(x):
        w = om(x)
        w = w.val if isinstance(w, _ad.Dual) else float(w)
        return abs(w) > 1e-6

    return MetricField(
        dim=dim, eval=ev, derivative_mode="forward_autodiff",
        domain_guard=guard, name="conformal_flat{" + label + "}",
        diagonal=True, sample_box=np.array([[-2.0, 2.0]] * dim),
    )


_CATALOG_PATTERNS = (
    (re.compile(r"^minkowski(\d+)$"), lambda g: minkowski(int(g))),
    (re.compile(r"^schwarzschild([0-9.eE+-]+)$"),
     lambda g: schwarzschild(float(g))),
    (re.compile(r"^schwarzschild_isotropic([0-9.eE+-]+)$"),
     lambda g: schwarzschild_isotropic(float(g))),
    (re.compile(r"^conformal_flat\{(.+)\}$"), lambda g: conformal_flat(g)),
)


def catalog_metric(identifier: str) -> MetricField:
    """Resolve a catalog id: minkowski{dim}, schwarzschild{M},
    schwarzschild_isotropic{M}, conformal_flat{expression}."""
    for pat, make in _CATALOG_PATTERNS:
        mt = pat.match(identifier)
        if mt:
            try:
                return make(mt.group(1))
            except (ValueError, UnsupportedDimension) as e:
                raise ConfigError(f"bad catalog id {identifier!r}: {e}") from e
    raise ConfigError(f"unknown catalog metric {identifier!r}")

"""Polarization transport along null bicharacteristics.

Two parallel-transport laws run over one trajectory: the symbol-level
connection dw/dt = -(M(t) - kappa(t) Id) w with M = (1/2){sigma_tilde,
sigma_1} + i sigma_tilde sigma^s, and the pulled-back spinor connection
ds/dt = -omega(x; xdot) s.  ``compare_transports`` integrates both jointly
over the identical grid and reports the gap; the central numerical claim of
the package is that this gap is pure integrator error.

The scalar kappa = (1/2) Z^mu d_mu log|det g| is the rate of the metric
half-density along the flow.  The subprincipal calculus behind the
symbol-level connection is invariant for operators acting on half-density
sections; transporting plain spinor components in a coordinate
trivialization therefore picks up exactly this gauge rate.  Dropping it
leaves a step-independent gap |exp(int kappa dt) - 1| between the two
transports (a pure scale factor on the polarization line).

All replays reuse the exact floating-point path of trajectory integration,
so phase samples of a joint run coincide bit for bit with the trajectory's.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .clifford import CliffordModuleRep, build_canonical_module
from .errors import ChartMapDegenerate, ConfigError, KernelViolation
from .geometry import (
    MetricField,
    PhasePoint,
    Trajectory,
    _combine,
    _DP_A,
    _DP_B5,
    integrate_bicharacteristic,
)
from .symbols import FirstOrderSystem, SymbolPackage, _StageEngine, dirac_system

__all__ = [
    "PolarizationState",
    "HamiltonianOrbit",
    "TransportReport",
    "ChartMap",
    "denker_generator",
    "transport_denker",
    "transport_spin",
    "compare_transports",
    "covariance_check",
    "identity_map",
    "minkowski_boost_map",
    "schwarzschild_isotropic_map",
]


@dataclass
class PolarizationState:
    phase: PhasePoint
    w: np.ndarray

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=complex)


@dataclass
class HamiltonianOrbit:
    """A spanning section w(t_i) of the polarization line along an orbit."""

    trajectory: Trajectory
    sections: list
    method: str
    kernel_residuals: np.ndarray = None
    product_drift: float = 0.0
    generator_norm_integral: float = 0.0


@dataclass
class TransportReport:
    max_gap: float
    max_kernel_residual: float
    q_drift: float
    convergence_ratio: Optional[float]
    t_end: float
    step: Optional[float]
    fixture: str = ""
    left_chart: bool = False
    product_drift: float = 0.0
    generator_norm_integral: float = 0.0
    flip_subprincipal: bool = False
    trajectory: Trajectory = field(default=None, repr=False)
    orbit_denker: HamiltonianOrbit = field(default=None, repr=False)
    orbit_spin: HamiltonianOrbit = field(default=None, repr=False)

    def to_dict(self):
        return {
            "fixture": self.fixture,
            "t_end": self.t_end,
            "step": self.step,
            "max_gap": self.max_gap,
            "max_kernel_residual": self.max_kernel_residual,
            "q_drift": self.q_drift,
            "convergence_ratio": self.convergence_ratio,
            "left_chart": self.left_chart,
            "product_drift": self.product_drift,
            "generator_norm_integral": self.generator_norm_integral,
            "flip_subprincipal": self.flip_subprincipal,
        }


def denker_generator(pkg: SymbolPackage) -> np.ndarray:
    """M = (1/2) bracket + i sigma_tilde sigma^s at one phase point.

    Along a bicharacteristic the parallel equation reads dw/dt = -M(t) w;
    the Hamiltonian-derivative part of the connection is the parameter
    derivative in the fixed trivialization.
    """
    return 0.5 * pkg.bracket + 1j * (pkg.sigma_tilde @ pkg.p_sub)


def _replay(traj: Trajectory, stage_fn, deriv_fn, y0, hook):
    """Re-integrate a joint tuple state over the trajectory's recorded grid.

    stage_fn(y) -> StageData at a sample; deriv_fn(y, st) -> derivative
    tuple.  ``hook(i, y, st)`` fires at every accepted sample, index 0
    included.  The stepper matches the trajectory's integrator so the phase
    components reproduce the original samples exactly.
    """
    hs = np.diff(traj.ts)
    y = y0
    st = stage_fn(y)
    hook(0, y, st)

    def f(yy):
        return deriv_fn(yy, stage_fn(yy))

    if traj.integrator == "rk4_fixed":
        for i, h in enumerate(hs):
            k1 = deriv_fn(y, st)
            k2 = f(_combine(y, h, [(0.5, k1)]))
            k3 = f(_combine(y, h, [(0.5, k2)]))
            k4 = f(_combine(y, h, [(1.0, k3)]))
            y = _combine(y, h, [(1.0 / 6.0, k1), (1.0 / 3.0, k2),
                                (1.0 / 3.0, k3), (1.0 / 6.0, k4)])
            st = stage_fn(y)
            hook(i + 1, y, st)
    elif traj.integrator == "rk45_adaptive":
        for i, h in enumerate(hs):
            ks = [deriv_fn(y, st)]
            for row in _DP_A:
                ks.append(f(_combine(y, h, list(zip(row, ks)))))
            y = _combine(y, h, list(zip(_DP_B5, ks)))
            st = stage_fn(y)
            hook(i + 1, y, st)
    else:
        raise ConfigError(f"cannot replay integrator {traj.integrator!r}")
    return y


def _effective_generator(st, sign: float) -> np.ndarray:
    """Transport matrix at one stage: (1/2)bracket + sign*i*sigma_tilde*p_sub
    minus the half-density gauge rate kappa*Id.

    The negative-control flag flips only the subprincipal term, as the
    kernel-restricted theorem predicts a scale defect exp(2 int kappa) for
    the wrong sign; the gauge scalar itself is part of the trivialization,
    not of the operator data.
    """
    M = st.brk_half + sign * st.sub_term
    return M - st.kappa * np.eye(M.shape[0])


def _require_dirac_backed(sys: FirstOrderSystem):
    if sys.rep is None or sys.metric is None:
        raise ConfigError(
            "transport needs a Dirac-backed system (built by dirac_system)")


def _initial_kernel_check(sigma1, w0, kernel_tol):
    nw = float(np.linalg.norm(w0))
    if nw == 0.0:
        raise KernelViolation("zero initial polarization vector")
    res = float(np.linalg.norm(sigma1 @ w0))
    if res > kernel_tol * nw:
        raise KernelViolation(
            f"initial vector off the kernel: residual {res} > "
            f"{kernel_tol} * {nw}")


def transport_denker(sys: FirstOrderSystem, traj: Trajectory, w0,
                     kernel_tol: float = 1e-8,
                     flip_subprincipal: bool = False) -> HamiltonianOrbit:
    """Integrate dw/dt = -(M(t) - kappa(t) Id) w over the trajectory's grid."""
    _require_dirac_backed(sys)
    eng = _StageEngine(sys.rep, sys.metric)
    w0 = np.asarray(w0, dtype=complex)
    sign = -1.0 if flip_subprincipal else 1.0

    st0 = eng(traj.xs[0], traj.xis[0])
    _initial_kernel_check(st0.sigma1, w0, kernel_tol)

    n = traj.n
    sections = [None] * n
    resid = np.empty(n)
    norms = np.empty(n)

    def stage(y):
        return eng(y[0], y[1])

    def deriv(y, st):
        return (st.dx, st.dxi, -(_effective_generator(st, sign) @ y[2]))

    def hook(i, y, st):
        w = y[2]
        sections[i] = w.copy()
        nw = float(np.linalg.norm(w))
        resid[i] = float(np.linalg.norm(st.sigma1 @ w)) / nw if nw else np.inf
        norms[i] = float(np.linalg.norm(_effective_generator(st, sign)))

    _replay(traj, stage, deriv, (traj.xs[0].copy(), traj.xis[0].copy(), w0),
            hook)
    hs = np.diff(traj.ts)
    integral = float(np.sum(0.5 * hs * (norms[:-1] + norms[1:])))
    return HamiltonianOrbit(
        trajectory=traj, sections=sections, method="denker",
        kernel_residuals=resid, generator_norm_integral=integral,
    )


def transport_spin(rep: CliffordModuleRep, traj: Trajectory,
                   s0) -> HamiltonianOrbit:
    """Integrate ds/dt = -omega(x; xdot) s over the trajectory's grid."""
    eng = _StageEngine(rep)
    s0 = np.asarray(s0, dtype=complex)
    G = rep.gram

    n = traj.n
    sections = [None] * n
    resid = np.empty(n)
    prods = np.empty(n)

    def stage(y):
        return eng(y[0], y[1])

    def deriv(y, st):
        return (st.dx, st.dxi, -(st.omega_dot @ y[2]))

    def hook(i, y, st):
        s = y[2]
        sections[i] = s.copy()
        ns = float(np.linalg.norm(s))
        resid[i] = float(np.linalg.norm(st.sigma1 @ s)) / ns if ns else np.inf
        prods[i] = float(np.real(s.conj() @ G @ s))

    _replay(traj, stage, deriv, (traj.xs[0].copy(), traj.xis[0].copy(), s0),
            hook)
    return HamiltonianOrbit(
        trajectory=traj, sections=sections, method="spin_pullback",
        kernel_residuals=resid,
        product_drift=float(np.max(np.abs(prods - prods[0]))),
    )


def compare_transports(rep: CliffordModuleRep, sys: FirstOrderSystem,
                       state: PolarizationState, t_end: float,
                       step: float = 1e-3,
                       integrator: str = "rk4_fixed",
                       tol: float = 1e-10,
                       kernel_tol: float = 1e-8,
                       null_tol: float = 1e-10,
                       convergence: bool = False,
                       flip_subprincipal: bool = False) -> TransportReport:
    """One trajectory, both transports on its exact grid, gap report.

    The two polarization vectors start from the same w0 and evolve inside
    one joint integration, so the comparison carries no discretization
    asymmetry.  ``convergence=True`` reruns at half step and reports the
    max_gap shrink factor.
    """
    _require_dirac_backed(sys)
    m = sys.metric
    traj = integrate_bicharacteristic(
        m, state.phase, t_end, integrator=integrator, step=step, tol=tol,
        null_tol=null_tol, require_null=True)

    eng = _StageEngine(rep, m)
    sign = -1.0 if flip_subprincipal else 1.0
    w0 = np.asarray(state.w, dtype=complex)
    st0 = eng(traj.xs[0], traj.xis[0])
    _initial_kernel_check(st0.sigma1, w0, kernel_tol)

    n = traj.n
    wd = [None] * n
    ws = [None] * n
    resid = np.empty(n)
    gaps = np.empty(n)
    norms = np.empty(n)
    prods = np.empty(n)
    G = rep.gram
    w0n = float(np.linalg.norm(w0))

    def stage(y):
        return eng(y[0], y[1])

    def deriv(y, st):
        return (st.dx, st.dxi,
                -(_effective_generator(st, sign) @ y[2]),
                -(st.omega_dot @ y[3]))

    def hook(i, y, st):
        a, b = y[2], y[3]
        wd[i] = a.copy()
        ws[i] = b.copy()
        na = float(np.linalg.norm(a))
        resid[i] = float(np.linalg.norm(st.sigma1 @ a)) / na if na else np.inf
        gaps[i] = float(np.linalg.norm(a - b)) / w0n
        norms[i] = float(np.linalg.norm(_effective_generator(st, sign)))
        prods[i] = float(np.real(b.conj() @ G @ b))

    _replay(traj, stage, deriv,
            (traj.xs[0].copy(), traj.xis[0].copy(), w0.copy(), w0.copy()),
            hook)

    hs = np.diff(traj.ts)
    integral = float(np.sum(0.5 * hs * (norms[:-1] + norms[1:])))
    ratio = None
    if convergence and integrator == "rk4_fixed" and not traj.left_chart:
        half = compare_transports(
            rep, sys, state, t_end, step=0.5 * step, integrator=integrator,
            tol=tol, kernel_tol=kernel_tol, null_tol=null_tol,
            convergence=False, flip_subprincipal=flip_subprincipal)
        if half.max_gap > 1e-16 and np.max(gaps) > 1e-15:
            ratio = float(np.max(gaps) / half.max_gap)

    report = TransportReport(
        max_gap=float(np.max(gaps)),
        max_kernel_residual=float(np.max(resid)),
        q_drift=float(np.max(np.abs(traj.qs - traj.qs[0]))),
        convergence_ratio=ratio,
        t_end=t_end, step=step if integrator == "rk4_fixed" else None,
        fixture=m.name, left_chart=traj.left_chart,
        product_drift=float(np.max(np.abs(prods - prods[0]))),
        generator_norm_integral=integral,
        flip_subprincipal=flip_subprincipal,
        trajectory=traj,
    )
    report.orbit_denker = HamiltonianOrbit(
        trajectory=traj, sections=wd, method="denker",
        kernel_residuals=resid, generator_norm_integral=integral)
    report.orbit_spin = HamiltonianOrbit(
        trajectory=traj, sections=ws, method="spin_pullback",
        kernel_residuals=None, product_drift=report.product_drift)
    return report


# ---------------------------------------------------------------------------
# chart covariance


@dataclass
class ChartMap:
    """Explicit diffeomorphism between two charts of one geometry.

    ``forward`` maps chart-A points to chart-B points, ``jacobian`` returns
    dy/dx there; covectors transfer by the inverse transpose, spinors by the
    frame-change conjugation (supplied or derived from both frames).
    """

    name: str
    metric_a: MetricField
    metric_b: MetricField
    forward: Callable
    jacobian: Callable
    spinor_transfer: Optional[Callable] = None


def _frame_change(cm: ChartMap, rep_a: CliffordModuleRep,
                  rep_b: CliffordModuleRep, x):
    from .geometry import orthonormal_frame

    J = np.asarray(cm.jacobian(x), dtype=float)
    if abs(np.linalg.det(J)) < 1e-12:
        raise ChartMapDegenerate(f"jacobian of {cm.name} singular at {x}")
    y = np.asarray(cm.forward(x), dtype=float)
    EA = orthonormal_frame(cm.metric_a, x).E
    sB = orthonormal_frame(cm.metric_b, y)
    L = sB.E_inv @ J @ EA
    eta = rep_a.eta
    if np.max(np.abs(L.T @ eta @ L - eta)) > 1e-8:
        raise ChartMapDegenerate(
            f"induced frame change of {cm.name} is not a Lorentz matrix")
    return L


def _spinor_rep_of(L, rep: CliffordModuleRep) -> np.ndarray:
    """Spinor representative T of a proper orthochronous Lorentz matrix L:
    T Gamma(v) T^-1 = Gamma(L v) for frame vectors v."""
    if np.max(np.abs(L - np.eye(L.shape[0]))) < 1e-12:
        return np.eye(rep.N, dtype=complex)
    lam = scipy.linalg.logm(L)
    if np.max(np.abs(lam.imag)) > 1e-10:
        raise ChartMapDegenerate("frame change outside the identity component")
    lam_low = rep.eta @ lam.real
    S = np.einsum("ab,abij->ij", lam_low, rep._pair_products)
    return scipy.linalg.expm(-0.25 * S)


def identity_map(m: MetricField) -> ChartMap:
    d = m.dim
    return ChartMap(
        name="identity", metric_a=m, metric_b=m,
        forward=lambda x: np.asarray(x, dtype=float).copy(),
        jacobian=lambda x: np.eye(d),
    )


def minkowski_boost_map(v: float, axis: int = 1) -> ChartMap:
    """Minkowski chart boosted with velocity v along one spatial axis."""
    from .geometry import minkowski

    if not -1.0 < v < 1.0:
        raise ConfigError("boost velocity must satisfy |v| < 1")
    gamma = 1.0 / np.sqrt(1.0 - v * v)
    L = np.eye(4)
    L[0, 0] = L[axis, axis] = gamma
    L[0, axis] = L[axis, 0] = -gamma * v
    return ChartMap(
        name=f"boost(v={v},axis={axis})",
        metric_a=minkowski(4), metric_b=minkowski(4),
        forward=lambda x: L @ np.asarray(x, dtype=float),
        jacobian=lambda x: L.copy(),
    )


def schwarzschild_isotropic_map(mass: float = 1.0) -> ChartMap:
    """Areal-radius chart to isotropic-radius chart of the same exterior."""
    from .geometry import schwarzschild, schwarzschild_isotropic

    M = float(mass)

    def forward(x):
        x = np.asarray(x, dtype=float)
        r = x[1]
        rho = 0.5 * ((r - M) + np.sqrt(r * (r - 2.0 * M)))
        return np.array([x[0], rho, x[2], x[3]])

    def jacobian(x):
        r = float(x[1])
        drho = 0.5 * (1.0 + (r - M) / np.sqrt(r * (r - 2.0 * M)))
        return np.diag([1.0, drho, 1.0, 1.0])

    return ChartMap(
        name=f"schwarzschild_areal_to_isotropic(M={mass:g})",
        metric_a=schwarzschild(M), metric_b=schwarzschild_isotropic(M),
        forward=forward, jacobian=jacobian,
    )


def covariance_check(cm: ChartMap, state_a: PolarizationState, t_end: float,
                     step: float = 1e-3,
                     kernel_tol: float = 1e-8) -> dict:
    """Run the same physical ray in both charts and compare.

    Chart-B samples are pulled back to chart A: points by the inverse map
    comparison (we map A forward), covectors by the transpose-inverse
    jacobian, polarization vectors by the induced spinor conjugation.
    Reports normalized sup discrepancies over the common grid.
    """
    rep_a = build_canonical_module(cm.metric_a)
    rep_b = build_canonical_module(cm.metric_b)
    sys_a = dirac_system(rep_a)
    sys_b = dirac_system(rep_b)

    if cm.spinor_transfer is not None:
        transfer = cm.spinor_transfer
    else:
        def transfer(x):
            return _spinor_rep_of(_frame_change(cm, rep_a, rep_b, x), rep_a)

    x0 = state_a.phase.x
    J0 = np.asarray(cm.jacobian(x0), dtype=float)
    x0b = np.asarray(cm.forward(x0), dtype=float)
    xi0b = np.linalg.solve(J0.T, state_a.phase.xi)
    w0b = transfer(x0) @ state_a.w
    state_b = PolarizationState(PhasePoint(x0b, xi0b), w0b)

    rep_report_a = compare_transports(rep_a, sys_a, state_a, t_end, step=step,
                                      kernel_tol=kernel_tol)
    rep_report_b = compare_transports(rep_b, sys_b, state_b, t_end, step=step,
                                      kernel_tol=kernel_tol)
    ta, tb = rep_report_a.trajectory, rep_report_b.trajectory
    n = min(ta.n, tb.n)
    wa = rep_report_a.orbit_denker.sections
    wb = rep_report_b.orbit_denker.sections
    w0n = float(np.linalg.norm(state_a.w))

    dx = dxi = dw = 0.0
    for i in range(n):
        xa, xia = ta.xs[i], ta.xis[i]
        xb_pred = np.asarray(cm.forward(xa), dtype=float)
        Ji = np.asarray(cm.jacobian(xa), dtype=float)
        xib_pred = np.linalg.solve(Ji.T, xia)
        wb_pred = transfer(xa) @ wa[i]
        dx = max(dx, float(np.max(np.abs(tb.xs[i] - xb_pred))
                           / (1.0 + np.max(np.abs(xb_pred)))))
        dxi = max(dxi, float(np.max(np.abs(tb.xis[i] - xib_pred))
                             / np.linalg.norm(xib_pred)))
        dw = max(dw, float(np.linalg.norm(wb[i] - wb_pred)) / w0n)

    return {
        "chart_map": cm.name,
        "fixture_a": cm.metric_a.name,
        "fixture_b": cm.metric_b.name,
        "t_end": t_end,
        "step": step,
        "samples_compared": int(n),
        "max_x_discrepancy": dx,
        "max_xi_discrepancy": dxi,
        "max_w_discrepancy": dw,
        "max_gap_a": rep_report_a.max_gap,
        "max_gap_b": rep_report_b.max_gap,
        "left_chart": bool(ta.left_chart or tb.left_chart),
    }

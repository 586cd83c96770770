"""Matrix symbol calculus for first-order systems.

The operator convention is A = A^j D_j + B with D_j = -i d_j, acting on
plane waves as A(e^{i<x,xi>} v) = e^{i<x,xi>} (sigma_1(x,xi) + B(x)) v, so
sigma_1(x, xi) = A^j(x) xi_j.  For the Dirac system assembled from a
Clifford module the principal symbol is i*Gamma(xi^sharp).

The auxiliary symbol sigma_tilde is the Q_N-conjugated reflection of the
principal symbol; together they satisfy the factorization
sigma_tilde * sigma_1 = q * Id with q the metric Hamiltonian.  For the
canonical spin-1/2 modules the conjugation collapses and sigma_tilde equals
sigma_1 as a function on phase space; the fast transport path exploits this
identity while the public evaluator keeps the explicit conjugated form (the
two are compared in the test suite).
"""
from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .clifford import CliffordModuleRep, q_operator
from .errors import NotOnCharacteristicSet, ZeroCovector
from .geometry import (
    MetricField,
    PhasePoint,
    _frame_jet_from,
    _metric_jet,
    _phase_core,
    eval_metric,
    hamiltonian_q,
    null_project_covector,
    orthonormal_frame,
)

__all__ = [
    "FirstOrderSystem",
    "SymbolPackage",
    "PrincipalTypeCertificate",
    "dirac_system",
    "principal_symbol",
    "sigma_tilde",
    "subprincipal_symbol",
    "matrix_poisson_bracket",
    "symbol_package",
    "kernel_basis",
    "certify_principal_type",
    "resolve_timelike_field",
]


@dataclass
class FirstOrderSystem:
    """A^j D_j + B in one chart; coefficients as callables of the point."""

    N: int
    coeff_A: Callable
    coeff_B: Callable
    d_coeff_A: Optional[Callable] = None  # x -> dA[k, m] = d_k A^m
    rep: Optional[CliffordModuleRep] = None
    metric: Optional[MetricField] = None
    name: str = "first_order_system"


StageData = namedtuple(
    "StageData",
    "dx dxi sigma1 brk_half sub_term omega_dot psub A ds1x omega kappa")


class _StageEngine:
    """Closed-form per-point evaluation of everything the transports need.

    One call produces the phase flow, the principal symbol, the halved
    matrix bracket, the i*sigma_tilde*p_sub term, and the contracted spin
    connection, all from a single metric/frame jet.  The phase derivatives
    come from the identical code path as trajectory integration, so joint
    integrations reproduce trajectory samples bit for bit.
    """

    def __init__(self, rep: CliffordModuleRep, m: Optional[MetricField] = None):
        self.rep = rep
        self.m = m if m is not None else rep.metric
        self.gup = np.stack(rep.gammas_up)
        self.pair = rep._pair_products
        self.eps = np.diagonal(rep.eta).copy()

    def __call__(self, x, xi) -> StageData:
        m = self.m
        g, dg, Z, dx, dxi = _phase_core(m, x, xi)
        E, dE, Einv, _ = _frame_jet_from(m, g, dg)
        ginv = np.linalg.inv(g)
        T = dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg
        Gam = 0.5 * np.einsum("il,ljk->ijk", ginv, T)
        W = np.matmul(Einv, dE + np.matmul(Gam.transpose(1, 0, 2), E))
        Wl = self.eps[None, :, None] * W
        om = -0.25 * np.einsum("mab,abij->mij", Wl, self.pair)

        A = 1j * np.einsum("ma,aij->mij", E, self.gup)
        s1 = np.einsum("m,mij->ij", xi, A)
        ds1x = 1j * np.einsum("kma,m,aij->kij", dE, xi, self.gup)
        brk = (np.einsum("kij,kjl->il", A, ds1x)
               - np.einsum("kij,kjl->il", ds1x, A))
        divA = 1j * np.einsum("kka,aij->ij", dE, self.gup)
        B = -1j * np.einsum("mij,mjl->il", A, om)
        psub = B + 0.5j * divA
        sub_term = 1j * (s1 @ psub)
        omega_dot = np.einsum("m,mij->ij", dx, om)
        # rate of log|det g|^(1/2) along the flow; the transport layer uses
        # it to evaluate the connection on half-density-weighted sections
        kappa = 0.5 * Z @ np.einsum("ab,kba->k", ginv, dg)
        return StageData(dx=dx, dxi=dxi, sigma1=s1, brk_half=0.5 * brk,
                         sub_term=sub_term, omega_dot=omega_dot, psub=psub,
                         A=A, ds1x=ds1x, omega=om, kappa=kappa)


def dirac_system(rep: CliffordModuleRep,
                 m: Optional[MetricField] = None) -> FirstOrderSystem:
    """First-order system of the Dirac operator of the module, arranged so
    sigma_1(x, xi) = i Gamma(xi^sharp) exactly."""
    m = m if m is not None else rep.metric
    eng = _StageEngine(rep, m)
    gup = eng.gup

    def coeff_A(x):
        E, _, _, _ = _frame_jet_from(m, *_metric_jet(m, x))
        A = 1j * np.einsum("ma,aij->mij", E, gup)
        return [A[k] for k in range(m.dim)]

    def coeff_B(x):
        st = eng(np.asarray(x, float), _probe_covector(m))
        return -1j * np.einsum("mij,mjl->il", st.A, st.omega)

    def d_coeff_A(x):
        _, dE, _, _ = _frame_jet_from(m, *_metric_jet(m, x))
        return 1j * np.einsum("kma,aij->kmij", dE, gup)

    return FirstOrderSystem(
        N=rep.N, coeff_A=coeff_A, coeff_B=coeff_B, d_coeff_A=d_coeff_A,
        rep=rep, metric=m, name=f"dirac[{m.name}]",
    )


def _probe_covector(m: MetricField) -> np.ndarray:
    v = np.zeros(m.dim)
    v[0] = 1.0
    return v


def principal_symbol(sys: FirstOrderSystem, p: PhasePoint) -> np.ndarray:
    """sigma_1(x, xi) = A^j(x) xi_j."""
    A = sys.coeff_A(p.x)
    out = p.xi[0] * np.asarray(A[0], dtype=complex)
    for j in range(1, len(A)):
        out = out + p.xi[j] * np.asarray(A[j], dtype=complex)
    return out


def sigma_tilde(rep: CliffordModuleRep, m: MetricField, p: PhasePoint,
                N) -> np.ndarray:
    """Auxiliary symbol -i Q_N^{-1} Gamma(aY - bN) Q_N for timelike future N.

    Z = xi^sharp splits as Z = aY + bN with g(Y, N) = 0; only the products
    aY and bN enter, so neither a nor Y needs a separate normalization.
    """
    if not np.any(p.xi):
        raise ZeroCovector("sigma_tilde needs a nonzero covector")
    N = np.asarray(N, dtype=float)
    Q = q_operator(rep, p.x, N)
    g, _ = eval_metric(m, p.x)
    Z = np.linalg.solve(g, p.xi)
    b = float(Z @ g @ N) / float(N @ g @ N)
    V = Z - 2.0 * b * N
    GV = rep.gamma_of(p.x, V)
    return -1j * (np.linalg.inv(Q) @ GV @ Q)


def subprincipal_symbol(sys: FirstOrderSystem, p: PhasePoint,
                        fd_step: float = 1e-6) -> np.ndarray:
    """sigma^s = B(x) - (1/2i) sum_j d_j A^j(x).

    Uses the system's closed-form coefficient derivatives when present,
    otherwise central differences with per-component relative steps.
    """
    x = p.x
    B = np.asarray(sys.coeff_B(x), dtype=complex)
    if sys.d_coeff_A is not None:
        dA = np.asarray(sys.d_coeff_A(x))
        div = np.einsum("kkij->ij", dA)
    else:
        d = len(x)
        div = np.zeros((sys.N, sys.N), dtype=complex)
        for k in range(d):
            h = fd_step * (1.0 + abs(x[k]))
            xp, xm = x.copy(), x.copy()
            xp[k] += h
            xm[k] -= h
            div += (np.asarray(sys.coeff_A(xp)[k], dtype=complex)
                    - np.asarray(sys.coeff_A(xm)[k], dtype=complex)) / (2 * h)
    return B + 0.5j * div


def matrix_poisson_bracket(a_eval, b_eval, p: PhasePoint,
                           fd_step: float = 1e-6) -> np.ndarray:
    """sum_j (da/dxi_j)(db/dx^j) - (da/dx^j)(db/dxi_j), central differences.

    Matrix-valued and deliberately NOT antisymmetrized; the bracket of a
    matrix function with itself is generally nonzero.  Works for scalar
    evaluators too.
    """
    x, xi = p.x, p.xi
    d = len(x)

    def pair(f):
        dfx, dfxi = [], []
        for j in range(d):
            hx = fd_step * (1.0 + abs(x[j]))
            xp, xm = x.copy(), x.copy()
            xp[j] += hx
            xm[j] -= hx
            dfx.append((np.asarray(f(xp, xi), dtype=complex)
                        - np.asarray(f(xm, xi), dtype=complex)) / (2 * hx))
            hxi = fd_step * (1.0 + abs(xi[j]))
            xip, xim = xi.copy(), xi.copy()
            xip[j] += hxi
            xim[j] -= hxi
            dfxi.append((np.asarray(f(x, xip), dtype=complex)
                         - np.asarray(f(x, xim), dtype=complex)) / (2 * hxi))
        return dfx, dfxi

    dax, daxi = pair(a_eval)
    dbx, dbxi = pair(b_eval)
    terms = []
    for j in range(d):
        if daxi[j].ndim == 2:
            terms.append(daxi[j] @ dbx[j] - dax[j] @ dbxi[j])
        else:
            terms.append(daxi[j] * dbx[j] - dax[j] * dbxi[j])
    return sum(terms)


def resolve_timelike_field(m: MetricField, spec=None):
    """Timelike reference field N(x): default the normalized time axis of
    the frame; or constant coordinate components; or any callable."""
    if spec is None or spec == "normalized_dt":
        return lambda x: orthonormal_frame(m, x).E[:, 0]
    if callable(spec):
        return spec
    const = np.asarray(spec, dtype=float)
    return lambda x: const


@dataclass
class SymbolPackage:
    """Every symbol-level object at one phase point."""

    at: PhasePoint
    sigma_m: np.ndarray
    sigma_tilde: np.ndarray
    q: float
    p_sub: np.ndarray
    bracket: np.ndarray
    d_sigma_m: dict
    factorization_residual: float

    def to_dict(self):
        def mat(M):
            M = np.asarray(M, dtype=complex)
            return {"re": M.real.tolist(), "im": M.imag.tolist()}

        return {
            "x": self.at.x.tolist(),
            "xi": self.at.xi.tolist(),
            "q": self.q,
            "sigma_m": mat(self.sigma_m),
            "sigma_tilde": mat(self.sigma_tilde),
            "p_sub": mat(self.p_sub),
            "bracket": mat(self.bracket),
            "d_sigma_m_dx": [mat(M) for M in self.d_sigma_m["dx"]],
            "d_sigma_m_dxi": [mat(M) for M in self.d_sigma_m["dxi"]],
            "factorization_residual": self.factorization_residual,
        }


def symbol_package(rep: CliffordModuleRep, p: PhasePoint,
                   sys: Optional[FirstOrderSystem] = None,
                   N=None, fd_step: float = 1e-6) -> SymbolPackage:
    """Assemble the full symbol data at one phase point.

    Dirac-backed systems get closed-form derivatives and bracket; foreign
    systems fall back to central differences (including the bracket, built
    from the two symbol evaluators)."""
    m = rep.metric
    if sys is None:
        sys = dirac_system(rep, m)
    Nfield = resolve_timelike_field(m, N)
    s1 = principal_symbol(sys, p)
    st = sigma_tilde(rep, m, p, Nfield(p.x))
    q = hamiltonian_q(m, p.x, p.xi)
    psub = subprincipal_symbol(sys, p, fd_step=fd_step)
    dirac_backed = sys.rep is rep and sys.d_coeff_A is not None
    if dirac_backed:
        eng = _StageEngine(rep, m)
        sd = eng(p.x, p.xi)
        bracket = 2.0 * sd.brk_half
        dsdx = sd.ds1x
        dsdxi = sd.A
    else:
        def s1_eval(x, xi):
            return principal_symbol(sys, PhasePoint(x, xi))

        def st_eval(x, xi):
            return sigma_tilde(rep, m, PhasePoint(x, xi), Nfield(x))

        bracket = matrix_poisson_bracket(st_eval, s1_eval, p, fd_step=fd_step)
        d = m.dim
        A0 = sys.coeff_A(p.x)
        dsdx = np.empty((d, sys.N, sys.N), dtype=complex)
        dsdxi = np.empty((d, sys.N, sys.N), dtype=complex)
        for j in range(d):
            h = fd_step * (1.0 + abs(p.x[j]))
            xp, xm = p.x.copy(), p.x.copy()
            xp[j] += h
            xm[j] -= h
            dsdx[j] = (s1_eval(xp, p.xi) - s1_eval(xm, p.xi)) / (2 * h)
            dsdxi[j] = np.asarray(A0[j], dtype=complex)
    Id = np.eye(sys.N)
    resid = float(np.linalg.norm(st @ s1 - q * Id))
    return SymbolPackage(
        at=p, sigma_m=s1, sigma_tilde=st, q=q, p_sub=psub, bracket=bracket,
        d_sigma_m={"dx": dsdx, "dxi": dsdxi},
        factorization_residual=resid,
    )


def kernel_basis(matrix, rank_tol: float = 1e-8):
    """Orthonormal basis of the numerical kernel via singular values.

    Returns (list of vectors, dim).  Singular values below
    rank_tol * sigma_max count as zero; the zero matrix yields the full
    identity basis.
    """
    A = np.asarray(matrix, dtype=complex)
    n = A.shape[1]
    U, s, Vh = np.linalg.svd(A)
    smax = s[0] if len(s) else 0.0
    if smax == 0.0:
        return [np.eye(n, dtype=complex)[:, k] for k in range(n)], n
    mask = s < rank_tol * smax
    V = Vh.conj().T
    vecs = [V[:, k] for k in range(n) if k >= len(s) or mask[k]]
    return vecs, len(vecs)


def _cokernel_basis(matrix, rank_tol: float = 1e-8):
    A = np.asarray(matrix, dtype=complex)
    U, s, _ = np.linalg.svd(A)
    smax = s[0] if len(s) else 0.0
    if smax == 0.0:
        n = A.shape[0]
        return [np.eye(n, dtype=complex)[:, k] for k in range(n)]
    mask = s < rank_tol * smax
    return [U[:, k] for k in range(len(s)) if mask[k]]


@dataclass
class PrincipalTypeCertificate:
    at: PhasePoint
    on_char_set: bool
    dq_nonzero: Optional[bool]
    nonradial: Optional[bool]
    ker_dim: int
    ker_coker_condition_number: Optional[float]
    passed: bool
    mode: str = "intrinsic"
    q: float = 0.0
    factorization_residual: Optional[float] = None
    neighborhood_ker_dims: Optional[list] = None

    def to_dict(self):
        return {
            "x": self.at.x.tolist(),
            "xi": self.at.xi.tolist(),
            "mode": self.mode,
            "q": self.q,
            "on_char_set": self.on_char_set,
            "dq_nonzero": self.dq_nonzero,
            "nonradial": self.nonradial,
            "ker_dim": self.ker_dim,
            "ker_coker_condition_number": self.ker_coker_condition_number,
            "factorization_residual": self.factorization_residual,
            "neighborhood_ker_dims": self.neighborhood_ker_dims,
            "pass": self.passed,
        }


def _phase_gradient_q(m: MetricField, x, xi):
    """(dq/dx, dq/dxi) of q = g^{ij} xi_i xi_j."""
    g, dg = _metric_jet(m, x)
    Z = np.linalg.solve(g, xi)
    dqdx = -np.einsum("kab,a,b->k", dg, Z, Z)
    return dqdx, 2.0 * Z


def certify_principal_type(rep: CliffordModuleRep, p: PhasePoint,
                           mode: str = "intrinsic",
                           sys: Optional[FirstOrderSystem] = None,
                           null_tol: float = 1e-10,
                           rank_tol: float = 1e-8,
                           factor_tol: float = 1e-10,
                           cond_bound: float = 1e8,
                           grad_tol: float = 1e-8,
                           seed: int = 0) -> PrincipalTypeCertificate:
    """Certify real principal type at one phase point.

    factorization mode: checks the residual of the factorization identity
    (valid on and off the characteristic set).  intrinsic mode: requires the
    point on the set and checks dq != 0, non-radial Hamiltonian direction,
    locally constant kernel dimension, and that the conormal derivative of
    the symbol maps kernel isomorphically onto cokernel.
    """
    m = rep.metric
    if sys is None:
        sys = dirac_system(rep, m)
    q = hamiltonian_q(m, p.x, p.xi)
    xi_sq = float(p.xi @ p.xi)
    on_char = abs(q) < null_tol * (1.0 + xi_sq)
    s1 = principal_symbol(sys, p)
    _, ker_dim = kernel_basis(s1, rank_tol)

    if mode == "factorization":
        pkg = symbol_package(rep, p, sys=sys)
        passed = pkg.factorization_residual < factor_tol
        return PrincipalTypeCertificate(
            at=p, on_char_set=on_char, dq_nonzero=None, nonradial=None,
            ker_dim=ker_dim, ker_coker_condition_number=None, passed=passed,
            mode=mode, q=q, factorization_residual=pkg.factorization_residual,
        )
    if mode != "intrinsic":
        raise ValueError(f"unknown certification mode {mode!r}")
    if not on_char:
        raise NotOnCharacteristicSet(
            f"|q| = {abs(q)} >= {null_tol} * (1 + |xi|^2)")

    dqdx, dqdxi = _phase_gradient_q(m, p.x, p.xi)
    grad_norm = float(np.sqrt(dqdx @ dqdx + dqdxi @ dqdxi))
    dq_nonzero = grad_norm > grad_tol * (1.0 + xi_sq)

    hq = np.concatenate([dqdxi, -dqdx])
    radial = np.concatenate([np.zeros_like(p.x), p.xi])
    sv = np.linalg.svd(np.stack([hq, radial]), compute_uv=False)
    nonradial = sv[1] > 1e-8 * sv[0]

    rng = np.random.default_rng(seed)
    nbh = []
    scale_x = 1e-3 * (1.0 + np.abs(p.x))
    scale_xi = 1e-3 * float(np.linalg.norm(p.xi))
    for _ in range(8):
        for _ in range(16):
            x2 = p.x + scale_x * rng.uniform(-1.0, 1.0, size=m.dim)
            if m.domain_guard(x2):
                break
        else:
            x2 = p.x.copy()
        xi2 = p.xi.copy()
        xi2[1:] += scale_xi * rng.uniform(-1.0, 1.0, size=m.dim - 1)
        try:
            xi2 = null_project_covector(m, x2, xi2)
        except NotOnCharacteristicSet:
            continue
        s1n = principal_symbol(sys, PhasePoint(x2, xi2))
        _, kd = kernel_basis(s1n, rank_tol)
        nbh.append(kd)
    ker_const = all(kd == ker_dim for kd in nbh)

    K, _ = kernel_basis(s1, rank_tol)
    C = _cokernel_basis(s1, rank_tol)
    cond = np.inf
    if K and len(C) == len(K) and dq_nonzero:
        pkg = symbol_package(rep, p, sys=sys)
        rho = np.concatenate([dqdx, dqdxi]) / grad_norm
        dsig = sum(rho[j] * pkg.d_sigma_m["dx"][j] for j in range(m.dim))
        dsig = dsig + sum(rho[m.dim + j] * pkg.d_sigma_m["dxi"][j]
                          for j in range(m.dim))
        Kmat = np.stack(K, axis=1)
        Cmat = np.stack(C, axis=1)
        T = Cmat.conj().T @ dsig @ Kmat
        s = np.linalg.svd(T, compute_uv=False)
        cond = float(s[0] / s[-1]) if s[-1] > 0.0 else np.inf

    passed = bool(dq_nonzero and nonradial and ker_const
                  and np.isfinite(cond) and cond < cond_bound)
    return PrincipalTypeCertificate(
        at=p, on_char_set=True, dq_nonzero=bool(dq_nonzero),
        nonradial=bool(nonradial), ker_dim=ker_dim,
        ker_coker_condition_number=cond, passed=passed, mode=mode, q=q,
        neighborhood_ker_dims=nbh,
    )

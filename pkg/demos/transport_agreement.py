"""The package's central check: transporting a polarization with the
symbol-level connection matches parallel transport by the pulled-back spinor
connection, sample by sample.  Flipping the sign of the subprincipal term
destroys the agreement, so the match is not an artifact.

Run:  python3 demos/transport_agreement.py
"""
import numpy as np

import diracsym as ds
from diracsym.clifford import build_canonical_module
from diracsym.geometry import PhasePoint
from diracsym.symbols import dirac_system, kernel_basis, principal_symbol
from diracsym.transport import PolarizationState, compare_transports


def start_state(metric, sysd, x0, seed):
    xi = ds.random_null_covector(metric, x0, np.random.default_rng(seed))
    basis, _ = kernel_basis(principal_symbol(sysd, PhasePoint(x0, xi)))
    return PolarizationState(PhasePoint(x0, xi), basis[0])


def main():
    schw = ds.schwarzschild(1.0)
    rep = build_canonical_module(schw)
    sysd = dirac_system(rep)
    x0 = np.array([0.0, 10.0, 1.2, 0.3])

    print("Schwarzschild, five random null rays from r = 10, t_end = 5:")
    print(f"{'seed':>4} {'max gap':>10} {'kernel res':>10} {'q drift':>9}")
    for seed in range(5):
        state = start_state(schw, sysd, x0, seed)
        rpt = compare_transports(rep, sysd, state, 5.0, step=1e-3)
        print(f"{seed:4d} {rpt.max_gap:10.2e} "
              f"{rpt.max_kernel_residual:10.2e} {rpt.q_drift:9.1e}")

    # negative control: wrong sign on the subprincipal term
    state = start_state(schw, sysd, x0, 5)
    good = compare_transports(rep, sysd, state, 1.0, step=1e-3)
    bad = compare_transports(rep, sysd, state, 1.0, step=1e-3,
                             flip_subprincipal=True)
    print(f"\nsign control (seed 5, t_end = 1):")
    print(f"  correct sign  max gap {good.max_gap:.2e}")
    print(f"  flipped sign  max gap {bad.max_gap:.2e}   "
          f"(kernel residual stays {bad.max_kernel_residual:.1e}: the "
          f"flipped term acts inside the kernel)")

    # step refinement
    state = start_state(schw, sysd, x0, 0)
    print(f"\nstep refinement (seed 0, t_end = 1):")
    for h in (1e-2, 5e-3, 2.5e-3, 1.25e-3):
        rpt = compare_transports(rep, sysd, state, 1.0, step=h)
        print(f"  step {h:.2e}  max gap {rpt.max_gap:.2e}  "
              f"gap/step^4 {rpt.max_gap / h ** 4:.2e}")
    print("  (both transports ride the same Runge-Kutta grid, so their gap "
          "sits at the\n   roundoff floor; the bound gap/step^4 is the "
          "certified invariant)")


if __name__ == "__main__":
    main()

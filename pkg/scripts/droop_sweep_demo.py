#!/usr/bin/env python3
"""Track the frequency-regulation mode of a 6-machine system.

Sweeps the uniform governor droop from 0.2 down to 0.02 on the sparse
pencil of the multimachine benchmark, tracking the slow coherent mode
introduced by the governors.  Every accepted step is cross-checked
against a dense eigendecomposition, and the tracked mode's damping
ratio and frequency are reported at both endpoints.
"""

import time
from pathlib import Path

from eigtrack import tracker
from eigtrack.dae import ModelPencilProvider
from eigtrack.models import MultiMachineSpec, make_multimachine
from eigtrack.spectrum import damping_ratio, frequency_hz, full_spectrum, mac
from eigtrack.tracker import AdaptConfig, NewtonConfig, TrackerConfig

OUT = Path(__file__).resolve().parent / "droop_sweep.csv"


def main():
    model = make_multimachine(MultiMachineSpec(), param="droop",
                              p_init=0.2, p_fin=0.02)
    provider = ModelPencilProvider(model, form="pencil")
    pairs = full_spectrum(provider, 0.2, pencil_coords=True)
    target = max((pr for pr in pairs if 0.05 < pr.s.imag < 2.0),
                 key=lambda pr: pr.s.imag)
    E, A = provider.matrices(0.2)
    init = tracker.init_from_eigenpair(E, A, target.s, target.right, p=0.2)
    cfg = TrackerConfig(
        p_init=0.2, p_fin=0.02, dp_init=-0.0018, predictor="fem",
        corrector=NewtonConfig(tol=1e-10, max_iter=12),
        adapt=AdaptConfig(enabled=False), epsilon_imag=0.0)

    t0 = time.perf_counter()
    traj = tracker.track(provider, init, cfg)
    elapsed = time.perf_counter() - t0

    worst_err, worst_mac = 0.0, 1.0
    for pt in traj:
        oracle = full_spectrum(provider, pt.p, pencil_coords=True)
        best = max(oracle, key=lambda pr: mac(pt.phi, pr.right))
        worst_err = max(worst_err, abs(pt.s - best.s))
        worst_mac = min(worst_mac, mac(pt.phi, best.right))

    traj.to_csv(OUT)
    first, last = traj[0], traj[-1]
    print(f"{len(traj) - 1} steps in {elapsed:.1f}s -> {OUT.name}")
    print(f"  droop {first.p:.3f}: s = {first.s:.4f} "
          f"(zeta = {damping_ratio(first.s):.3f}, "
          f"f = {frequency_hz(first.s):.3f} Hz)")
    print(f"  droop {last.p:.3f}: s = {last.s:.4f} "
          f"(zeta = {damping_ratio(last.s):.3f}, "
          f"f = {frequency_hz(last.s):.3f} Hz)")
    print(f"  vs dense oracle: worst |ds| = {worst_err:.2e}, "
          f"worst MAC = {worst_mac:.6f}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Trace both branches of the quadratic fold benchmark.

Runs three continuation sweeps on the two-state companion model
(characteristic polynomial s^2 + 2 s + p, fold at p = 1):

  1. downward from p = 2 through the fold to p = 0.5,
  2. upward from the real branch at p = 0.5 back to p = 2,
  3. the upward sweep again with a small imaginary perturbation, which
     steers the tracker onto the complex branch without a restart.

Each run is checked against the closed-form roots and written to a CSV
next to this script (companion_down.csv / companion_up.csv /
companion_eps.csv).
"""

import time
from pathlib import Path

from eigtrack import tracker
from eigtrack.dae import ModelPencilProvider
from eigtrack.models import companion_eigenvalues, make_companion_fold
from eigtrack.spectrum import full_spectrum
from eigtrack.tracker import AdaptConfig, NewtonConfig, TrackerConfig

OUT_DIR = Path(__file__).resolve().parent


def run(provider, p0, p1, eps, reperturb=False):
    pairs = full_spectrum(provider, p0)
    target = max(pairs, key=lambda pr: (pr.s.imag, pr.s.real))
    E, A = provider.matrices(p0)
    init = tracker.init_from_eigenpair(E, A, target.s, target.right, p=p0)
    cfg = TrackerConfig(
        p_init=p0, p_fin=p1, dp_init=0.01 if p1 > p0 else -0.01,
        predictor="rk4", corrector=NewtonConfig(tol=1e-12, max_iter=12),
        adapt=AdaptConfig(enabled=True), epsilon_imag=eps,
        reperturb=reperturb, reinit_policy="on_failure")
    t0 = time.perf_counter()
    traj = tracker.track(provider, init, cfg)
    return traj, time.perf_counter() - t0


def worst_error(traj):
    worst = 0.0
    for pt in traj:
        roots = companion_eigenvalues(2.0, pt.p)
        worst = max(worst, min(abs(pt.s - r) for r in roots))
    return worst


def main():
    provider = ModelPencilProvider(make_companion_fold(), form="reduced")
    runs = [
        ("companion_down", 2.0, 0.5, 0.0, False),
        ("companion_up", 0.5, 2.0, 0.0, False),
        ("companion_eps", 0.5, 2.0, 1e-6, True),
    ]
    for name, p0, p1, eps, reperturb in runs:
        traj, elapsed = run(provider, p0, p1, eps, reperturb)
        path = OUT_DIR / f"{name}.csv"
        traj.to_csv(path)
        folds = [pt.p for pt in traj if "fold_detected" in pt.flags]
        print(f"{name}: {len(traj)} records in {elapsed:.2f}s, "
              f"worst error vs closed form {worst_error(traj):.2e}, "
              f"fold flags at p={[f'{p:.4f}' for p in folds]} -> {path.name}")


if __name__ == "__main__":
    main()

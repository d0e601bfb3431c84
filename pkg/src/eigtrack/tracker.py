"""Continuation core for tracking one eigenpair of a parameterized pencil.

The tracked quantity is the real split of the augmented eigenpair
vector (phi_r, phi_i, s_r, s_i).  Differentiating the eigenproblem and
the bilinear normalization phi^T phi = c with respect to the parameter
gives a (2r+2)-dimensional linear system M(y) y' = h(y) with a sparse,
state-dependent mass matrix.  Tracking integrates this system with an
explicit Euler or classical Runge-Kutta predictor, optionally refines
each step with a Newton corrector on the exact eigenproblem, adapts the
parameter step from the eigenvalue displacement, and recovers from
defective (fold) points and trajectory discontinuities by flagged
re-initialization.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Set

import numpy as np
import scipy.sparse as sp

from .errors import (
    DegenerateVector,
    NoCandidate,
    NoConvergence,
    SingularMatrix,
    TrackingAborted,
)
from .linalg import lu_factor
from .spectrum import full_spectrum, mac

__all__ = [
    "TrackerState",
    "NewtonConfig",
    "AdaptConfig",
    "TrackerConfig",
    "TrajectoryPoint",
    "Trajectory",
    "residual",
    "init_from_eigenpair",
    "assemble_system",
    "predict_fem",
    "predict_rk4",
    "correct_newton",
    "adapt_step",
    "perturb_epsilon",
    "detect_fold",
    "reinitialize",
    "track",
]

NORM_TOL = 1e-10
STEP_TOL = 1e-9


@dataclass
class TrackerState:
    """Augmented continuation state: eigenvector, eigenvalue, parameter."""

    phi: np.ndarray  # complex, length r
    s: complex
    p: float
    c: complex = 1.0 + 0.0j

    @property
    def phi_re(self) -> np.ndarray:
        return self.phi.real.copy()

    @property
    def phi_im(self) -> np.ndarray:
        return self.phi.imag.copy()

    def copy(self) -> "TrackerState":
        return TrackerState(self.phi.copy(), self.s, self.p, self.c)


@dataclass
class NewtonConfig:
    tol: float = 1e-10
    max_iter: int = 10


@dataclass
class AdaptConfig:
    enabled: bool = False
    lo: float = 0.04
    hi: float = 0.08
    dp_min: Optional[float] = None
    dp_max: Optional[float] = None


@dataclass
class TrackerConfig:
    p_init: float
    p_fin: float
    dp_init: float
    predictor: str = "fem"  # "fem" | "rk4" | "none" (pure Newton)
    corrector: Optional[NewtonConfig] = field(default_factory=NewtonConfig)
    adapt: AdaptConfig = field(default_factory=AdaptConfig)
    epsilon_imag: float = 1e-6
    reperturb: bool = False
    h_p: Optional[float] = None
    reinit_policy: str = "never"  # "never" | "on_fold" | "on_failure"

    def __post_init__(self):
        if self.predictor not in ("fem", "rk4", "none"):
            raise ValueError(f"unknown predictor {self.predictor!r}")
        if self.reinit_policy not in ("never", "on_fold", "on_failure"):
            raise ValueError(f"unknown reinit policy {self.reinit_policy!r}")
        span = self.p_fin - self.p_init
        if span != 0.0 and self.dp_init * span <= 0:
            raise ValueError("dp_init sign must match the sweep direction")
        if not (0 < self.adapt.lo < self.adapt.hi):
            raise ValueError("adapt thresholds must satisfy 0 < lo < hi")

    @property
    def dp_min(self) -> float:
        if self.adapt.dp_min is not None:
            return self.adapt.dp_min
        return abs(self.dp_init) / 1024.0

    @property
    def dp_max(self) -> float:
        if self.adapt.dp_max is not None:
            return self.adapt.dp_max
        return 16.0 * abs(self.dp_init)


@dataclass
class TrajectoryPoint:
    p: float
    s: complex
    phi: np.ndarray
    residual: float
    dp_used: float
    corrector_iters: int
    flags: Set[str] = field(default_factory=set)


class Trajectory:
    """Ordered accepted records of a tracking run."""

    def __init__(self, points: Optional[List[TrajectoryPoint]] = None):
        self.points = points or []

    def append(self, pt: TrajectoryPoint) -> None:
        self.points.append(pt)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    def __getitem__(self, i):
        return self.points[i]

    @property
    def p_values(self) -> np.ndarray:
        return np.array([pt.p for pt in self.points])

    @property
    def s_values(self) -> np.ndarray:
        return np.array([pt.s for pt in self.points])

    def has_flag(self, name: str) -> bool:
        return any(name in pt.flags for pt in self.points)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["p", "s_re", "s_im", "residual", "dp",
                        "corrector_iters", "flags"])
            for pt in self.points:
                w.writerow([repr(float(pt.p)), repr(float(pt.s.real)),
                            repr(float(pt.s.imag)), repr(float(pt.residual)),
                            repr(float(pt.dp_used)),
                            pt.corrector_iters, ";".join(sorted(pt.flags))])

    @classmethod
    def from_csv(cls, path) -> "Trajectory":
        points = []
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                flags = set(t for t in row["flags"].split(";") if t)
                points.append(TrajectoryPoint(
                    p=float(row["p"]),
                    s=complex(float(row["s_re"]), float(row["s_im"])),
                    phi=np.empty(0, dtype=complex),
                    residual=float(row["residual"]),
                    dp_used=float(row["dp"]),
                    corrector_iters=int(row["corrector_iters"]),
                    flags=flags))
        return cls(points)

    def to_json(self, path, include_vectors: bool = False) -> None:
        recs = []
        for pt in self.points:
            rec = {"p": pt.p, "s_re": pt.s.real, "s_im": pt.s.imag,
                   "residual": pt.residual, "dp": pt.dp_used,
                   "corrector_iters": pt.corrector_iters,
                   "flags": sorted(pt.flags)}
            if include_vectors:
                rec["phi_re"] = pt.phi.real.tolist()
                rec["phi_im"] = pt.phi.imag.tolist()
            recs.append(rec)
        with open(path, "w") as fh:
            json.dump(recs, fh, indent=1)


def residual(E, A, s: complex, phi: np.ndarray) -> float:
    """Relative pencil residual ||(sE - A) phi|| / ((|s| ||E||_F + ||A||_F) ||phi||)."""
    nphi = np.linalg.norm(phi)
    if nphi == 0:
        raise ValueError("residual undefined for a zero vector")
    num = np.linalg.norm(s * (E @ phi) - A @ phi)
    scale = (abs(s) * sp.linalg.norm(E, "fro") + sp.linalg.norm(A, "fro")) * nphi
    return float(num / scale) if scale > 0 else float(num)


def init_from_eigenpair(E, A, s: complex, phi: np.ndarray,
                        c: complex = 1.0 + 0.0j, p: float = 0.0,
                        res_tol: float = 1e-6) -> TrackerState:
    """Build a tracker state from a computed eigenpair.

    The eigenvector is rescaled so that the bilinear product
    phi^T phi (no conjugation) equals ``c``.  A vector with
    phi^T phi = 0 is isotropic and cannot carry this normalization.
    """
    phi = np.asarray(phi, dtype=complex)
    res = residual(E, A, s, phi)
    if res > res_tol:
        raise ValueError(f"input eigenpair residual {res:.2e} exceeds {res_tol:.1e}")
    q = phi @ phi
    if abs(q) <= 1e-12 * np.linalg.norm(phi) ** 2:
        raise DegenerateVector("phi^T phi = 0; pick another c or rotate the phase")
    phi = phi * np.sqrt(c / q)
    return TrackerState(phi=phi, s=complex(s), p=p, c=complex(c))


def assemble_system(sample, state: TrackerState):
    """Mass matrix M and right-hand side h of the real split system.

    Row blocks 1..r and r+1..2r are the real and imaginary parts of the
    differentiated eigenproblem; the last two rows are the real and
    imaginary parts of the differentiated normalization phi^T phi' = 0.
    """
    E, A = sample.E, sample.A
    Edot, Adot = sample.Edot, sample.Adot
    sr, si = state.s.real, state.s.imag
    pr, pi = state.phi.real, state.phi.imag
    r = len(pr)
    srEmA = (sr * E - A).tocoo()
    siE = (si * E).tocoo() if si != 0.0 else None
    Epr = E @ pr
    Epi = E @ pi
    arange_r = np.arange(r)
    rows = [srEmA.row, srEmA.row + r]
    cols = [srEmA.col, srEmA.col + r]
    data = [srEmA.data, srEmA.data]
    if siE is not None:
        rows += [siE.row, siE.row + r]
        cols += [siE.col + r, siE.col]
        data += [-siE.data, siE.data]
    # Eigenvalue columns and normalization rows are dense by nature.
    rows += [arange_r, arange_r, arange_r + r, arange_r + r,
             np.full(r, 2 * r), np.full(r, 2 * r),
             np.full(r, 2 * r + 1), np.full(r, 2 * r + 1)]
    cols += [np.full(r, 2 * r), np.full(r, 2 * r + 1),
             np.full(r, 2 * r), np.full(r, 2 * r + 1),
             arange_r, arange_r + r, arange_r, arange_r + r]
    data += [Epr, -Epi, Epi, Epr, pr, -pi, pi, pr]
    M = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(2 * r + 2, 2 * r + 2)).tocsc()
    Edpr = Edot @ pr
    Edpi = Edot @ pi
    h = np.concatenate([
        Adot @ pr - sr * Edpr + si * Edpi,
        Adot @ pi - si * Edpr - sr * Edpi,
        [0.0, 0.0],
    ])
    return M, h


def _unpack(y: np.ndarray, r: int):
    phi = y[:r] + 1j * y[r:2 * r]
    s = complex(y[2 * r], y[2 * r + 1])
    return phi, s


def _pack(state: TrackerState) -> np.ndarray:
    return np.concatenate([state.phi.real, state.phi.imag,
                           [state.s.real, state.s.imag]])


def predict_fem(sample, state: TrackerState, dp: float) -> TrackerState:
    """One explicit Euler step of length dp on M y' = h."""
    M, h = assemble_system(sample, state)
    ydot = lu_factor(M).solve(h)
    y = _pack(state) + dp * ydot
    phi, s = _unpack(y, len(state.phi))
    return TrackerState(phi=phi, s=s, p=state.p + dp, c=state.c)


def predict_rk4(provider, state: TrackerState, dp: float,
                h_p: Optional[float] = None) -> TrackerState:
    """Classical 4-stage Runge-Kutta step; matrices rebuilt per stage."""
    r = len(state.phi)
    p0 = state.p
    sample0 = provider.sample(p0, h_p)
    if provider.affine_in_p:
        Edot, Adot = sample0.Edot, sample0.Adot

        def stage_sample(p):
            E0, A0 = provider.matrices(p)
            return replace(sample0, E=E0, A=A0, Edot=Edot, Adot=Adot, p=p)
    else:
        def stage_sample(p):
            return provider.sample(p, h_p)

    def F(p, y):
        phi, s = _unpack(y, r)
        st = TrackerState(phi=phi, s=s, p=p, c=state.c)
        smp = sample0 if p == p0 else stage_sample(p)
        M, h = assemble_system(smp, st)
        return lu_factor(M).solve(h)

    y0 = _pack(state)
    k1 = F(p0, y0)
    k2 = F(p0 + dp / 2, y0 + dp / 2 * k1)
    k3 = F(p0 + dp / 2, y0 + dp / 2 * k2)
    k4 = F(p0 + dp, y0 + dp * k3)
    y = y0 + dp / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    phi, s = _unpack(y, r)
    return TrackerState(phi=phi, s=s, p=p0 + dp, c=state.c)


def correct_newton(sample, state: TrackerState, tol: float = 1e-10,
                   max_iter: int = 10):
    """Newton refinement onto the exact eigenproblem manifold.

    Solves F(y) = [Re((sE-A)phi); Im((sE-A)phi); Re(phi^T phi - c);
    Im(phi^T phi - c)] = 0.  The Jacobian shares the mass-matrix block
    structure with the last two rows doubled (exact derivative of the
    quadratic normalization).  Returns (state, iterations).
    """
    E, A = sample.E, sample.A
    st = state.copy()
    ds_hist = [0.0, 0.0]
    for it in range(max_iter + 1):
        Pphi = st.s * (E @ st.phi) - A @ st.phi
        nrm = st.phi @ st.phi - st.c
        # A near-defective eigenvalue lets the residual converge while the
        # iterate itself keeps drifting; requiring the last Newton update
        # on s to be small AND strongly contracting rejects such
        # ill-conditioned solutions instead of returning an eigenvalue
        # whose forward error dwarfs its residual.  (The contraction check
        # matters at the round-off floor, where a single update can be
        # accidentally tiny while the iterate still wanders at the defect
        # scale; near a defect updates only halve instead of collapsing.)
        scale = max(1.0, abs(st.s))
        step_ok = it == 0 or (
            ds_hist[-1] <= STEP_TOL * scale
            and (it == 1 or ds_hist[-1] <= 0.1 * ds_hist[-2]
                 or ds_hist[-1] <= 1e-13 * scale))
        if residual(E, A, st.s, st.phi) <= tol and abs(nrm) <= NORM_TOL and step_ok:
            return st, it
        if it == max_iter:
            break
        M, _ = assemble_system(sample, st)
        r = len(st.phi)
        row_scale = np.ones(2 * r + 2)
        row_scale[-2:] = 2.0
        M = sp.diags(row_scale) @ M
        F = np.concatenate([Pphi.real, Pphi.imag, [nrm.real, nrm.imag]])
        delta = lu_factor(M.tocsc()).solve(-F)
        ds_hist.append(float(np.hypot(delta[2 * r], delta[2 * r + 1])))
        phi, ds = _unpack(_pack(st) + delta, r)
        st = TrackerState(phi=phi, s=ds, p=st.p, c=st.c)
        if not np.all(np.isfinite(_pack(st))):
            raise NoConvergence("corrector iterate diverged")
    raise NoConvergence(f"corrector did not converge in {max_iter} iterations")


def adapt_step(ds_abs: float, dp: float, adapt: AdaptConfig,
               dp_min: float, dp_max: float) -> float:
    """Double below the low threshold, halve above the high one, clamp."""
    if dp == 0.0:
        raise ValueError("dp must be nonzero")
    if ds_abs < adapt.lo:
        dp = 2.0 * dp
    elif ds_abs > adapt.hi:
        dp = 0.5 * dp
    mag = min(max(abs(dp), dp_min), dp_max)
    return math.copysign(mag, dp)


def perturb_epsilon(state: TrackerState, eps: float) -> TrackerState:
    """Add a small imaginary part to a real eigenpair.

    Lets a real eigenvalue survive the merge into (and split out of) a
    complex pair instead of being stuck on the real axis.
    """
    if eps == 0.0:
        return state.copy()
    phi = state.phi.real + 1j * (state.phi.real * eps + state.phi.imag)
    q = phi @ phi
    phi = phi * np.sqrt(state.c / q)
    return TrackerState(phi=phi, s=complex(state.s.real, eps), p=state.p,
                        c=state.c)


def detect_fold(prev: TrackerState, next: TrackerState,
                cond_estimate: float = 0.0, eps: float = 1e-6,
                cond_cap: float = 1e12) -> bool:
    """Fold test between two consecutive accepted states.

    Flags a sign flip of the imaginary part, a collapse of a clearly
    complex eigenvalue onto the real axis, or an exploding mass-matrix
    condition estimate.
    """
    pi, ni = prev.s.imag, next.s.imag
    if min(abs(pi), abs(ni)) >= eps and (pi > 0) != (ni > 0):
        return True
    if abs(ni) < eps and abs(pi) > 10.0 * eps:
        return True
    if cond_estimate > cond_cap:
        return True
    return False


def reinitialize(provider, p: float, reference_phi: np.ndarray,
                 branch_rule: str = "same", s_prev: Optional[complex] = None,
                 c: complex = 1.0 + 0.0j, min_mac: float = 0.3) -> TrackerState:
    """Restart from a full eigendecomposition at p.

    Picks the spectrum entry whose eigenvector best matches
    ``reference_phi`` by MAC (ties broken by eigenvalue distance to
    ``s_prev``); ``branch_rule="other"`` takes the second-best match,
    used to continue on the opposite branch after a spectral split.
    """
    if branch_rule not in ("same", "other"):
        raise ValueError(f"unknown branch rule {branch_rule!r}")
    pairs = full_spectrum(provider, p, want_left=False,
                          pencil_coords=provider.r != provider.n)
    scored = []
    for pair in pairs:
        m = mac(reference_phi, pair.right)
        d = abs(pair.s - s_prev) if s_prev is not None else 0.0
        scored.append((m, d, pair))
    scored.sort(key=lambda t: (-t[0], t[1]))
    pick = 0 if branch_rule == "same" else 1
    if pick >= len(scored) or scored[pick][0] < min_mac:
        best = scored[0][0] if scored else 0.0
        raise NoCandidate(f"best MAC {best:.3f} below {min_mac} at p={p}")
    m, _, pair = scored[pick]
    E, A = provider.matrices(p)
    return init_from_eigenpair(E, A, pair.s, pair.right, c=c, p=p)


def _record(state: TrackerState, E, A, dp_used: float, iters: int,
            flags: Set[str]) -> TrajectoryPoint:
    return TrajectoryPoint(p=state.p, s=state.s, phi=state.phi.copy(),
                           residual=residual(E, A, state.s, state.phi),
                           dp_used=dp_used, corrector_iters=iters, flags=flags)


def track(provider, init: TrackerState, cfg: TrackerConfig) -> Trajectory:
    """Run the full continuation sweep from cfg.p_init to cfg.p_fin.

    Per step: advance p, rebuild matrices and derivatives, run the
    predictor and (optionally) the Newton corrector, adapt the step
    from |Delta s|, and record the accepted state.  A step whose
    corrector fails, or whose eigenvalue displacement exceeds four
    times the high adaptation threshold, is retried with a halved step
    down to dp_min; what survives at dp_min is either accepted as a
    flagged jump (corrector on) or escalated to the re-initialization
    policy.  Raises :class:`TrackingAborted` (carrying the partial
    trajectory) on unrecoverable failure.
    """
    provider = provider.clone()
    traj = Trajectory()
    state = init.copy()
    state.p = cfg.p_init
    span = cfg.p_fin - cfg.p_init
    first_flags: Set[str] = set()
    if cfg.epsilon_imag and state.s.imag == 0.0:
        eps_mag = cfg.epsilon_imag * max(1.0, abs(state.s))
        state = perturb_epsilon(state, eps_mag)
        first_flags.add("perturbed")
    eps_ref = (cfg.epsilon_imag or 1e-6) * max(1.0, abs(state.s))
    E0, A0 = provider.matrices(state.p)
    traj.append(_record(state, E0, A0, 0.0, 0, first_flags))
    if span == 0.0:
        return traj

    sgn = 1.0 if span > 0 else -1.0
    dp = math.copysign(abs(cfg.dp_init), sgn)
    ptol = 1e-12 * max(1.0, abs(cfg.p_init), abs(cfg.p_fin))
    jump_bar = 4.0 * cfg.adapt.hi

    while (cfg.p_fin - state.p) * sgn > ptol:
        remaining = cfg.p_fin - state.p
        dp_step = math.copysign(min(abs(dp), abs(remaining)), sgn)
        cand = None
        iters = 0
        failure: Optional[Exception] = None
        while True:
            try:
                if cfg.predictor == "fem":
                    sample = provider.sample(state.p, cfg.h_p)
                    cand = predict_fem(sample, state, dp_step)
                elif cfg.predictor == "rk4":
                    cand = predict_rk4(provider, state, dp_step, cfg.h_p)
                else:
                    cand = state.copy()
                    cand.p = state.p + dp_step
                if cfg.corrector is not None:
                    sample_new = provider.sample(cand.p, cfg.h_p)
                    cand, iters = correct_newton(
                        sample_new, cand, tol=cfg.corrector.tol,
                        max_iter=cfg.corrector.max_iter)
                failure = None
            except (SingularMatrix, NoConvergence) as exc:
                failure = exc
                cand = None
            ds = abs(cand.s - state.s) if cand is not None else math.inf
            needs_retry = failure is not None or (
                cfg.predictor != "none" and ds > jump_bar)
            if needs_retry and abs(dp_step) > cfg.dp_min * (1 + 1e-9):
                dp_step = dp_step / 2.0
                continue
            break

        if failure is not None:
            if cfg.reinit_policy in ("on_fold", "on_failure"):
                try:
                    new = reinitialize(provider, state.p + dp_step, state.phi,
                                       s_prev=state.s, c=state.c)
                except NoCandidate as exc:
                    raise TrackingAborted(
                        f"reinitialization failed at p={state.p + dp_step}: {exc}",
                        trajectory=traj)
                flags = {"reinitialized"}
                ds = abs(new.s - state.s)
                if detect_fold(state, new, eps=eps_ref) or _nature_changed(
                        state, new, eps_ref):
                    flags.add("fold_detected")
                E, A = provider.matrices(new.p)
                traj.append(_record(new, E, A, dp_step, 0, flags))
                state = new
                dp = dp_step
                if cfg.adapt.enabled:
                    dp = adapt_step(max(ds, 1e-300), dp, cfg.adapt,
                                    cfg.dp_min, cfg.dp_max)
                continue
            raise TrackingAborted(
                f"step from p={state.p} failed at dp_min: {failure}",
                trajectory=traj)

        flags = set()
        ds = abs(cand.s - state.s)
        if cfg.predictor != "none" and ds > jump_bar:
            if cfg.corrector is not None:
                flags.add("jump_detected")
            else:
                E, A = provider.matrices(cand.p)
                flags.add("jump_detected")
                traj.append(_record(cand, E, A, dp_step, iters, flags))
                raise TrackingAborted(
                    "predictor-only run cannot certify a trajectory jump "
                    f"at p={cand.p}", trajectory=traj)
        fold = detect_fold(state, cand, eps=eps_ref) or _nature_changed(
            state, cand, eps_ref)
        if fold:
            flags.add("fold_detected")
        E, A = provider.matrices(cand.p)
        traj.append(_record(cand, E, A, dp_step, iters, flags))
        prev = state
        state = cand
        if fold and cfg.reinit_policy == "on_fold":
            try:
                new = reinitialize(provider, state.p, state.phi,
                                   s_prev=state.s, c=state.c)
            except NoCandidate as exc:
                raise TrackingAborted(
                    f"post-fold reinitialization failed: {exc}", trajectory=traj)
            traj.append(_record(new, E, A, 0.0, 0, {"reinitialized"}))
            state = new
        if cfg.reperturb and cfg.epsilon_imag and abs(state.s.imag) < eps_ref:
            state = perturb_epsilon(
                replace_real(state), cfg.epsilon_imag * max(1.0, abs(state.s)))
        dp = dp_step
        if cfg.adapt.enabled:
            dp = adapt_step(ds, dp, cfg.adapt, cfg.dp_min, cfg.dp_max)
    return traj


def _nature_changed(prev: TrackerState, next: TrackerState, eps: float) -> bool:
    """Real-to-complex emergence check (mirror of the collapse test)."""
    return abs(prev.s.imag) < eps and abs(next.s.imag) > 10.0 * eps


def replace_real(state: TrackerState) -> TrackerState:
    """Project a nearly-real state exactly onto the real axis."""
    return TrackerState(phi=state.phi.real.astype(complex),
                        s=complex(state.s.real, 0.0), p=state.p, c=state.c)

"""The linearised Bregman iteration and its baselines, with convergence monitors.

One outer step of the main method, for a smooth energy E and a convex
Bregman function R with stepsize tau:

    u_next = prox_{tau R}( u + tau * (q - grad E(u)) )
    q_next = q - (u_next - u + tau * grad E(u)) / tau        (in dR(u_next))

With R = 0 this is plain gradient descent.  The module also provides the
projected- and proximal-gradient baselines, the energy-backtracking stepsize
rule, and monitors for the decrease and subgradient-bound inequalities the
method satisfies for admissible stepsizes.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import NumericsError, StagnationError, UnsupportedOperation
from .regularizers import BregmanFunction, bregman_distance, symmetric_bregman_distance

NAN = float("nan")


class SmoothObjective:
    """Differentiable energy with value and gradient; ``lipschitz`` may be None."""

    lipschitz: float | None = None

    def value(self, u) -> float:
        raise NotImplementedError

    def grad(self, u) -> np.ndarray:
        raise NotImplementedError


@dataclass
class SolverState:
    """Iterate pair (u^k, q^k) plus stepsize, counters and cached evaluations."""

    u: np.ndarray
    q: np.ndarray | None
    tau: float
    k: int = 0
    u_prev: np.ndarray | None = None
    q_prev: np.ndarray | None = None
    energy: float = NAN
    surrogate: float = NAN
    grad: np.ndarray | None = None
    grad_norm: float = NAN


@dataclass
class StoppingRule:
    """Iteration budget plus optional discrepancy and iterate-gap criteria."""

    max_iter: int
    discrepancy_eta: float | None = None
    iterate_gap_tol: float | None = None

    def __post_init__(self):
        if self.max_iter < 0:
            raise ValueError("max_iter must be nonnegative")


@dataclass
class BacktrackingPolicy:
    """Initial stepsize, shrink factor on failed trials, and the decrease slack.

    ``eps_decrease=None`` resolves to 1e-12 * max(1, |E(u0)|) at run start;
    ``eps_decrease=inf`` disables backtracking (fixed stepsize).
    """

    tau0: float
    shrink: float = 0.75
    eps_decrease: float | None = None

    def __post_init__(self):
        if self.tau0 <= 0:
            raise ValueError("tau0 must be positive")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must lie strictly between 0 and 1")


@dataclass
class MonitorRecord:
    """Per-accepted-iteration convergence diagnostics."""

    k: int
    tau: float
    energy: float
    surrogate: float
    iterate_gap: float
    breg_sym: float
    r_norm: float
    rho2_bound: float
    decrease_ok: bool
    bound_ok: bool
    grad_norm: float = NAN
    extras: dict = field(default_factory=dict)


@dataclass
class RunResult:
    """Final state, the full monitor log, and which stopping criterion fired."""

    state: SolverState
    records: list
    stop_reason: str
    initial_energy: float = NAN
    initial_surrogate: float = NAN
    tau_min: float = NAN


def _checked_grad(E: SmoothObjective, st: SolverState) -> np.ndarray:
    g = st.grad if st.grad is not None else E.grad(st.u)
    if not np.all(np.isfinite(g)):
        raise NumericsError(f"non-finite gradient at iteration {st.k}")
    return np.asarray(g, dtype=np.float64)


def initial_state(E: SmoothObjective, R: BregmanFunction, u0, tau0: float) -> SolverState:
    """Build the k=0 state with q0 = R.initial_subgradient(u0) and F(s0) = E(u0)."""
    u0 = np.asarray(u0, dtype=np.float64)
    q0 = np.asarray(R.initial_subgradient(u0), dtype=np.float64)
    e0 = float(E.value(u0))
    st = SolverState(u=u0, q=q0, tau=float(tau0), k=0, energy=e0)
    try:
        st.surrogate = surrogate_value(E, R, u0, q0, fallback_prev=(u0, None))
    except UnsupportedOperation:
        st.surrogate = e0
    return st


def linbreg_step(E: SmoothObjective, R: BregmanFunction, st: SolverState) -> SolverState:
    """One specialised linearised Bregman step; the new q is the exact prox subgradient."""
    g = _checked_grad(E, st)
    z = st.u + st.tau * (st.q - g)
    u_new = np.asarray(R.prox(z, st.tau), dtype=np.float64)
    q_new = (z - u_new) / st.tau
    mask = R.dual_memory_mask()
    if mask is not None:
        q_new = q_new * mask
    elif not R.dual_memory:
        q_new = np.zeros_like(q_new)
    return SolverState(
        u=u_new, q=q_new, tau=st.tau, k=st.k + 1,
        u_prev=st.u, q_prev=st.q,
        energy=float(E.value(u_new)),
    )


def proximal_gradient_step(E: SmoothObjective, R: BregmanFunction, st: SolverState) -> SolverState:
    """Forward-backward step u_next = prox_{tau R}(u - tau * grad E(u)); no dual memory."""
    g = _checked_grad(E, st)
    u_new = np.asarray(R.prox(st.u - st.tau * g, st.tau), dtype=np.float64)
    return SolverState(
        u=u_new, q=None, tau=st.tau, k=st.k + 1,
        u_prev=st.u, q_prev=None,
        energy=float(E.value(u_new)),
    )


def projected_gradient_step(E: SmoothObjective, project, st: SolverState) -> SolverState:
    """Gradient step followed by a projection (identity when ``project`` is None)."""
    g = _checked_grad(E, st)
    u_new = st.u - st.tau * g
    if project is not None:
        u_new = np.asarray(project(u_new), dtype=np.float64)
    return SolverState(
        u=u_new, q=None, tau=st.tau, k=st.k + 1,
        u_prev=st.u, q_prev=None,
        energy=float(E.value(u_new)),
    )


def backtrack(E: SmoothObjective, R_or_proj, st: SolverState,
              policy: BacktrackingPolicy, step_fn=linbreg_step) -> SolverState:
    """Retry the step with tau shrunk by ``policy.shrink`` until the energy check holds.

    Accepts the first trial with E(u_next) <= E(u) + eps_decrease; the accepted
    tau is kept for the next iteration.  Rejected trials never advance the dual
    state: each retry re-runs the step from the same (u, q).
    """
    eps = policy.eps_decrease
    if eps is None:
        eps = 1e-12 * max(1.0, abs(st.energy))
    tau = st.tau
    while True:
        trial = step_fn(E, R_or_proj, replace(st, tau=tau))
        if trial.energy <= st.energy + eps:
            return trial
        tau *= policy.shrink
        if tau < 1e-16 * policy.tau0:
            raise StagnationError(
                f"backtracking stagnated at iteration {st.k}: tau underflow below "
                f"{1e-16 * policy.tau0:g}"
            )


def surrogate_value(E: SmoothObjective, R: BregmanFunction, x, y,
                    fallback_prev=None) -> float:
    """Surrogate objective F(x, y) = E(x) + R(x) + R*(y) - <x, y>.

    When R has no conjugate evaluation, falls back to the equivalent Bregman
    form E(x) + D_R^y(x, v) for a point v with y in dR(v), supplied as the
    first element of ``fallback_prev``.
    """
    ex = float(E.value(x))
    if R.has_conjugate:
        rx = R.value(x)
        rstar = R.conjugate_value(y)
        return ex + float(rx) + float(rstar) - float(np.vdot(np.ravel(x), np.ravel(y)).real)
    if fallback_prev is None:
        raise UnsupportedOperation(
            "no conjugate available and no base point given for the Bregman form")
    v = fallback_prev[0]
    return ex + bregman_distance(R, x, v, y)


def surrogate_subgradient(E: SmoothObjective, R: BregmanFunction, st: SolverState) -> np.ndarray:
    """The canonical subgradient of F at s^k: (grad E(u^k) + q^k - q^{k-1}, u^{k-1} - u^k)."""
    if st.u_prev is None or st.q_prev is None or st.q is None:
        raise ValueError("surrogate subgradient needs two consecutive states (k >= 1)")
    g = _checked_grad(E, st)
    top = np.ravel(g) + np.ravel(st.q) - np.ravel(st.q_prev)
    bottom = np.ravel(st.u_prev) - np.ravel(st.u)
    return np.concatenate([top, bottom])


@dataclass
class DecreaseReport:
    """Outcome of auditing the surrogate decrease inequality over a run."""

    checked: int
    violations: list
    max_violation: float


def check_sufficient_decrease(records, L: float, initial_surrogate: float,
                              rtol: float = 1e-10) -> DecreaseReport:
    """Audit F(s^{k+1}) + rho1 * ||u^{k+1} - u^k||^2 <= F(s^k) over a monitor log.

    rho1 is derived per iteration as max(0, 1/tau - L/2), the largest value for
    which the recorded tau satisfies the admissible-stepsize bound
    tau <= 2 / (L + 2*rho1).
    """
    violations = []
    worst = 0.0
    prev_f = initial_surrogate
    for rec in records:
        rho1 = max(0.0, 1.0 / rec.tau - L / 2.0)
        lhs = rec.surrogate + rho1 * rec.iterate_gap ** 2
        slack = lhs - prev_f
        tol = rtol * (1.0 + abs(prev_f))
        if slack > tol:
            violations.append(rec.k)
            worst = max(worst, slack)
        prev_f = rec.surrogate
    return DecreaseReport(checked=len(records), violations=violations, max_violation=worst)


def _monitor(E, R, st_new: SolverState, st_old: SolverState, L, tau_min,
             extras_fn=None) -> MonitorRecord:
    """Fill a MonitorRecord for an accepted step st_old -> st_new (linbreg only fields
    degrade to NaN for the baselines, which carry no dual variable)."""
    gap = float(np.linalg.norm(np.ravel(st_new.u) - np.ravel(st_old.u)))
    g_new = E.grad(st_new.u)
    st_new.grad = np.asarray(g_new, dtype=np.float64)
    st_new.grad_norm = float(np.linalg.norm(np.ravel(g_new)))

    if st_new.q is not None:
        breg_sym = symmetric_bregman_distance(R, st_new.u, st_old.u, st_new.q, st_old.q)
        r = surrogate_subgradient(E, R, st_new)
        r_norm = float(np.linalg.norm(r))
        try:
            st_new.surrogate = surrogate_value(E, R, st_new.u, st_old.q,
                                               fallback_prev=(st_old.u, None))
        except UnsupportedOperation:
            st_new.surrogate = NAN
    else:
        breg_sym = NAN
        r_norm = NAN
        st_new.surrogate = NAN

    if L is not None and st_new.q is not None:
        rho1 = max(0.0, 1.0 / st_new.tau - L / 2.0)
        decrease_ok = (
            not np.isfinite(st_old.surrogate)
            or st_new.surrogate + rho1 * gap ** 2
            <= st_old.surrogate + 1e-10 * (1.0 + abs(st_old.surrogate))
        )
        rho2 = 1.0 + L + 1.0 / tau_min
        rho2_bound = rho2 * gap
        # absolute floor absorbs rounding dust when the gap is exactly zero
        bound_ok = r_norm <= rho2_bound * (1.0 + 1e-9) + 1e-12
    else:
        decrease_ok = True
        bound_ok = True
        rho2_bound = NAN

    extras = extras_fn(st_new) if extras_fn is not None else {}
    return MonitorRecord(
        k=st_new.k, tau=st_new.tau, energy=st_new.energy, surrogate=st_new.surrogate,
        iterate_gap=gap, breg_sym=breg_sym, r_norm=r_norm, rho2_bound=rho2_bound,
        decrease_ok=bool(decrease_ok), bound_ok=bool(bound_ok),
        grad_norm=st_new.grad_norm, extras=extras,
    )


def run(E: SmoothObjective, R: BregmanFunction | None, st0: SolverState,
        policy: BacktrackingPolicy, stop: StoppingRule,
        method: str = "linbreg", project=None, extras_fn=None) -> RunResult:
    """Iterate until a stopping criterion fires; returns state, monitor log and reason.

    Parameters
    ----------
    method : {"linbreg", "proximal-gd", "projected-gd"}
        Which step to apply; the baselines carry no dual variable and record
        reduced monitors.
    project : callable, optional
        Feasible-set projection for ``projected-gd``.
    extras_fn : callable, optional
        Maps an accepted state to a dict of extra metric columns.
    """
    if method == "linbreg":
        step, carrier = linbreg_step, R
    elif method == "proximal-gd":
        step, carrier = proximal_gradient_step, R
    elif method == "projected-gd":
        step, carrier = projected_gradient_step, project
    else:
        raise ValueError(f"unknown method {method!r}")

    resolved_eps = policy.eps_decrease
    if resolved_eps is None:
        resolved_eps = 1e-12 * max(1.0, abs(st0.energy))
    policy = replace(policy, eps_decrease=resolved_eps)

    L = E.lipschitz
    records: list[MonitorRecord] = []
    st = st0
    initial_energy = st0.energy
    initial_surrogate = st0.surrogate
    tau_min = st0.tau

    if stop.discrepancy_eta is not None and st.energy <= stop.discrepancy_eta:
        return RunResult(st, records, "discrepancy", initial_energy, initial_surrogate, tau_min)

    reason = "max_iter"
    for _ in range(stop.max_iter):
        st_new = backtrack(E, carrier, st, policy, step_fn=step)
        tau_min = min(tau_min, st_new.tau)
        records.append(_monitor(E, R, st_new, st, L, tau_min, extras_fn))
        st = st_new
        if stop.discrepancy_eta is not None and st.energy <= stop.discrepancy_eta:
            reason = "discrepancy"
            break
        if stop.iterate_gap_tol is not None and records[-1].iterate_gap <= stop.iterate_gap_tol:
            reason = "iterate_gap"
            break

    return RunResult(st, records, reason, initial_energy, initial_surrogate, tau_min)

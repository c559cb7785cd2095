"""
Distributed online primal-dual rounds with full-information and two-point
bandit feedback, their step-size schedules and the gradient estimators.

States of all agents are kept as arrays: ``x`` is ``(n, p)`` and ``q`` is
``(n, m_i)``. A round reads the frozen round-``t`` arrays and returns new
ones, so agents never observe a neighbour's half-updated state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .network import mix_states
from .problem import DecisionSet, project, shrink_set

__all__ = [
    "SCHEDULE_KINDS",
    "Steps",
    "StepSchedule",
    "schedule_at",
    "AgentState",
    "AgentStates",
    "RoundDiagnostics",
    "initial_states",
    "full_info_round",
    "bandit_round",
    "two_point_loss_gradient",
    "two_point_constraint_jacobian",
    "sample_unit_sphere",
    "agent_streams",
]

SCHEDULE_KINDS = ("convex-full", "strongly-convex-full", "convex-bandit", "strongly-convex-bandit")

_UNIT_TOL = 1e-12


#%% SCHEDULES

@dataclass(frozen=True)
class Steps:
    """Step sizes of one round; ``xi``/``delta`` are set for bandit kinds only."""

    t: int
    alpha: float
    beta: float
    gamma: float
    xi: Optional[float] = None
    delta: Optional[float] = None


@dataclass(frozen=True)
class StepSchedule:
    """
    Decreasing step-size sequences.

    ========================  ===========  =========  ===============
    kind                      alpha_t      beta_t     gamma_t
    ========================  ===========  =========  ===============
    convex-*                  a0 / t^k     1 / t^k    1 / t^(1-k)
    strongly-convex-*         1 / t^c      1 / t^k    1 / t^(1-k)
    ========================  ===========  =========  ===============

    Bandit kinds add ``xi_t = 1/(t+1)`` and ``delta_t = r / (t+1)`` where
    ``r`` is the inner radius of the decision set.
    """

    kind: str
    kappa: float = 0.5
    alpha0: float = 1.0
    c: Optional[float] = None
    r: Optional[float] = None

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if not 0.0 < self.kappa < 1.0:
            raise ValueError(f"kappa must lie in (0, 1), got {self.kappa}")
        if self.alpha0 <= 0:
            raise ValueError("alpha0 must be positive")
        if self.strongly_convex:
            if self.c is None:
                raise ValueError("strongly convex schedules need c")
            if not max(self.kappa, 1.0 - self.kappa) <= self.c < 1.0:
                raise ValueError(f"c must lie in [max(kappa, 1-kappa), 1), got {self.c}")
        if self.bandit and (self.r is None or self.r <= 0):
            raise ValueError("bandit schedules need a positive inner radius r")

    @property
    def bandit(self):
        return self.kind.endswith("bandit")

    @property
    def strongly_convex(self):
        return self.kind.startswith("strongly")

    def at(self, t) -> Steps:
        if t < 1 or int(t) != t:
            raise ValueError(f"rounds start at 1, got {t}")
        t = int(t)
        k = self.kappa
        alpha = t ** -self.c if self.strongly_convex else self.alpha0 * t ** -k
        beta = t ** -k
        gamma = t ** -(1.0 - k)
        if not self.bandit:
            return Steps(t, alpha, beta, gamma)
        return Steps(t, alpha, beta, gamma, xi=1.0 / (t + 1), delta=self.r / (t + 1))


def schedule_at(schedule: StepSchedule, t) -> Steps:
    return schedule.at(t)


#%% STATES

@dataclass(frozen=True)
class AgentState:
    """One agent's primal decision and dual vector."""

    x: np.ndarray
    q: np.ndarray


@dataclass(frozen=True)
class AgentStates:
    """All agents' states: ``x`` is ``(n, p)``, ``q`` is ``(n, m_i)``."""

    x: np.ndarray
    q: np.ndarray

    @property
    def n(self):
        return self.x.shape[0]

    def agent(self, i) -> AgentState:
        return AgentState(self.x[i], self.q[i])


def initial_states(n, m_i, dset: DecisionSet, x0=None, xi1=None) -> AgentStates:
    """
    Zero duals and ``x0`` (default: the origin) projected into the set, or
    into ``(1 - xi1)`` times the set when ``xi1`` is given.
    """
    target = dset if xi1 is None else shrink_set(dset, xi1)
    x0 = np.zeros(dset.dim) if x0 is None else np.asarray(x0, dtype=float)
    x = project(target, np.broadcast_to(x0, (n, dset.dim)).copy())
    return AgentStates(x, np.zeros((n, m_i)))


@dataclass(frozen=True)
class RoundDiagnostics:
    """
    Intermediate quantities of one round.

    ``consensus_error`` is ``x_{t+1} - z_{t+1}``. Bandit rounds also carry
    the query points and the two estimates.
    """

    z: np.ndarray
    omega: np.ndarray
    consensus_error: np.ndarray
    sample_points: Optional[np.ndarray] = None
    loss_grad: Optional[np.ndarray] = None
    clipped_jac: Optional[np.ndarray] = None


def _check_round(oracles, steps):
    t = getattr(oracles, "t", None)
    if t is not None and steps.t != t + 1:
        raise ValueError(f"round-{t} oracles need steps of round {t + 1}, got {steps.t}")


def _dual_update(q, steps, g_clip, jac_clip, dx):
    b = g_clip + np.einsum("ipm,ip->im", jac_clip, dx)
    return np.maximum((1.0 - steps.beta * steps.gamma) * q + steps.gamma * b, 0.0)


#%% FULL INFORMATION

def full_info_round(states: AgentStates, W, oracles, steps: Steps, dset: DecisionSet):
    """
    One synchronous round with subgradient feedback.

    Parameters
    ----------
    states : AgentStates
        Round-``t`` decisions and duals.
    W : MixingMatrix or ndarray
        Round-``t`` mixing matrix.
    oracles : RoundOracles or OracleList
        Round-``t`` local losses and constraints of every agent.
    steps : Steps
        Step sizes of round ``t + 1``.
    dset : DecisionSet
        The decision set.

    Returns
    -------
    (AgentStates, RoundDiagnostics)
    """
    _check_round(oracles, steps)
    x, q = states.x, states.q
    z = mix_states(W, x)
    g = oracles.constraint_values(x)
    jac = oracles.constraint_jacobians(x)
    jac_clip = np.where((g >= 0)[:, None, :], jac, 0.0)
    omega = oracles.loss_gradients(x) + np.einsum("ipm,im->ip", jac_clip, q)
    x_new = project(dset, z - steps.alpha * omega)
    q_new = _dual_update(q, steps, np.maximum(g, 0.0), jac_clip, x_new - x)
    return AgentStates(x_new, q_new), RoundDiagnostics(z, omega, x_new - z)


#%% BANDIT FEEDBACK

def sample_unit_sphere(rng, p, size=None) -> np.ndarray:
    """Uniform draw(s) from the unit sphere in R^p by normalising a Gaussian."""
    if p < 1:
        raise ValueError("dimension must be positive")
    shape = (p,) if size is None else (size, p)
    while True:
        g = rng.standard_normal(shape)
        nrm = np.linalg.norm(g, axis=-1, keepdims=True)
        if np.all(nrm > 0):
            return g / nrm


def agent_streams(seed, n, rep=0):
    """Independent per-agent generators for exploration directions of repetition ``rep``."""
    children = np.random.SeedSequence([seed, 11, rep]).spawn(n)
    return [np.random.default_rng(s) for s in children]


def _check_sample(x, delta, u, dset):
    if delta <= 0:
        raise ValueError("exploration radius must be positive")
    if abs(np.linalg.norm(u) - 1.0) > _UNIT_TOL:
        raise ValueError("direction must have unit norm")
    if dset is not None:
        tol = _UNIT_TOL * max(1.0, dset.outer_radius)
        if not (dset.contains(x, tol) and dset.contains(x + delta * u, tol)):
            raise ValueError("query point lies outside the decision set")


def two_point_loss_gradient(loss, x, delta, u, dset=None) -> np.ndarray:
    """``(p / delta) (f(x + delta u) - f(x)) u``."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    _check_sample(x, delta, u, dset)
    p = x.shape[-1]
    return (p / delta) * (loss.value(x + delta * u) - loss.value(x)) * u


def two_point_constraint_jacobian(constraint, x, delta, u, dset=None) -> np.ndarray:
    """``(p / delta) u ([g(x + delta u)]_+ - [g(x)]_+)^T`` as a ``p x m`` matrix."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    _check_sample(x, delta, u, dset)
    p = x.shape[-1]
    diff = (np.maximum(np.atleast_1d(constraint.value(x + delta * u)), 0.0)
            - np.maximum(np.atleast_1d(constraint.value(x)), 0.0))
    return (p / delta) * np.outer(u, diff)


def bandit_round(states: AgentStates, W, oracles, steps: Steps, U, dset: DecisionSet,
                 explore: Steps):
    """
    One synchronous round with two-point value feedback.

    ``explore`` holds the round-``t`` shrinkage and exploration radius used
    to place the query points ``x + delta_t u``; ``steps`` is round ``t + 1``
    and its ``xi`` sets the shrunk set the new decisions are projected onto.
    ``U`` stacks the agents' unit directions, shape ``(n, p)``.
    """
    _check_round(oracles, steps)
    if explore.t + 1 != steps.t:
        raise ValueError("exploration steps must belong to the round before the update steps")
    x, q = states.x, states.q
    U = np.asarray(U, dtype=float)
    if U.shape != x.shape:
        raise ValueError("need one direction per agent")
    if np.any(np.abs(np.linalg.norm(U, axis=1) - 1.0) > _UNIT_TOL):
        raise ValueError("directions must have unit norm")
    tol = _UNIT_TOL * max(1.0, dset.outer_radius)
    if not np.all(shrink_set(dset, explore.xi).contains(x, tol)):
        raise ValueError("state lies outside the shrunk decision set")
    delta = explore.delta
    p = x.shape[1]
    Y = x + delta * U

    z = mix_states(W, x)
    g = oracles.constraint_values(x)
    g_clip = np.maximum(g, 0.0)
    loss_grad = ((p / delta) * (oracles.loss_values(Y) - oracles.loss_values(x)))[:, None] * U
    clipped_jac = (p / delta) * U[:, :, None] * (np.maximum(oracles.constraint_values(Y), 0.0) - g_clip)[:, None, :]
    omega = loss_grad + np.einsum("ipm,im->ip", clipped_jac, q)
    x_new = project(shrink_set(dset, steps.xi), z - steps.alpha * omega)
    q_new = _dual_update(q, steps, g_clip, clipped_jac, x_new - x)
    diag = RoundDiagnostics(z, omega, x_new - z, sample_points=Y, loss_grad=loss_grad,
                            clipped_jac=clipped_jac)
    return AgentStates(x_new, q_new), diag

"""LinTS decision rule, inflation schedules and the episode runner."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import DimensionMismatch, InvalidParam, NonFiniteRho
from .linalg import (
    PosteriorState,
    logdet_from_chol,
    posterior_init,
    posterior_sample,
    posterior_update,
    thinness,
)


@dataclass(frozen=True)
class ArmSet:
    """Finite action set; rows of ``arms`` are the candidate actions."""

    arms: np.ndarray

    def __post_init__(self):
        arms = np.atleast_2d(np.asarray(self.arms, dtype=float))
        if arms.shape[0] == 0:
            raise InvalidParam("arm set must be non-empty")
        arms.setflags(write=False)
        object.__setattr__(self, "arms", arms)

    @property
    def bound(self) -> float:
        return float(np.linalg.norm(self.arms, axis=1).max())

    @property
    def dim(self) -> int:
        return self.arms.shape[1]

    def __len__(self):
        return self.arms.shape[0]

    def __getitem__(self, i):
        return self.arms[i]


# -- inflation schedules ---------------------------------------------------

@dataclass(frozen=True)
class Constant:
    iota: float = 1.0

    def __post_init__(self):
        if not self.iota > 0:
            raise InvalidParam(f"iota must be positive, got {self.iota}")

    def value(self, state: PosteriorState, t: int) -> float:
        return self.iota


@dataclass(frozen=True)
class FreqRho:
    """Frequentist radius sqrt(2 log(det(cov)^-1/2 det(s I)^-1/2 / delta)) + sqrt(d)."""

    delta: float = 1e-4
    prior_scale: float = 0.1

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise InvalidParam(f"delta must lie in (0, 1), got {self.delta}")
        if not self.prior_scale > 0:
            raise InvalidParam(f"prior_scale must be positive, got {self.prior_scale}")

    def value(self, state: PosteriorState, t: int) -> float:
        d = state.dim
        log_arg = (
            -0.5 * logdet_from_chol(state.chol)
            - 0.5 * d * np.log(self.prior_scale)
            - np.log(self.delta)
        )
        if not np.isfinite(log_arg) or log_arg < 0:
            raise NonFiniteRho(
                f"log argument {log_arg:.6g} at t={t}: covariance exceeds the reference prior"
            )
        return float(np.sqrt(2.0 * log_arg) + np.sqrt(d))


@dataclass(frozen=True)
class ThinnessGated:
    """Use ``base_iota`` while the precision matrix has thinness <= ``psi_threshold``."""

    base_iota: float = 5.0
    psi_threshold: float = 2.0
    fallback: FreqRho = field(default_factory=FreqRho)

    def __post_init__(self):
        if not (self.base_iota > 0 and self.psi_threshold >= 1):
            raise InvalidParam("base_iota must be positive and psi_threshold >= 1")

    def value(self, state: PosteriorState, t: int) -> float:
        if thinness(state.precision) <= self.psi_threshold:
            return self.base_iota
        return self.fallback.value(state, t)


InflationSchedule = Union[Constant, FreqRho, ThinnessGated]


def inflation_value(schedule: InflationSchedule, state: PosteriorState, t: int) -> float:
    return schedule.value(state, t)


# -- decision rule ----------------------------------------------------------

def select_arm(theta_tilde, arm_set: ArmSet) -> int:
    """Index of the arm with the largest inner product; ties go to the lowest index."""
    return int(np.argmax(arm_set.arms @ np.asarray(theta_tilde, dtype=float)))


def lints_round(state: PosteriorState, arm_set: ArmSet, schedule: InflationSchedule, t: int,
                rng: np.random.Generator) -> tuple[int, np.ndarray, float]:
    if arm_set.dim != state.dim:
        raise DimensionMismatch(f"arms are {arm_set.dim}-dim, posterior is {state.dim}-dim")
    iota = inflation_value(schedule, state, t)
    theta_tilde = posterior_sample(state, iota, rng)
    return select_arm(theta_tilde, arm_set), theta_tilde, iota


# -- environment and episodes ------------------------------------------------

ActionSetFn = Callable[[int, np.random.Generator], ArmSet]


@dataclass(frozen=True)
class LinearBanditEnv:
    dim: int
    theta_star: np.ndarray
    noise_tau: float
    action_set_fn: ActionSetFn
    horizon: int

    def __post_init__(self):
        theta = np.asarray(self.theta_star, dtype=float)
        if theta.shape != (self.dim,):
            raise DimensionMismatch(f"theta_star has shape {theta.shape}, expected ({self.dim},)")
        if self.noise_tau < 0 or self.horizon < 0:
            raise InvalidParam("noise_tau and horizon must be non-negative")
        theta.setflags(write=False)
        object.__setattr__(self, "theta_star", theta)


@dataclass
class Trajectory:
    """Per-round record of one episode, stored column-wise."""

    arm_index: np.ndarray
    actions: np.ndarray
    reward: np.ndarray
    inst_regret: np.ndarray
    inflation: np.ndarray
    thinness: np.ndarray
    jittered: np.ndarray
    final_state: PosteriorState
    states: list[PosteriorState] | None = None

    def __len__(self):
        return self.reward.size

    @property
    def t(self) -> np.ndarray:
        return np.arange(1, len(self) + 1)

    @property
    def cum_regret(self) -> np.ndarray:
        return np.cumsum(self.inst_regret)


def run_episode(env: LinearBanditEnv, schedule: InflationSchedule, lam: float,
                rng: np.random.Generator, keep_states: bool = False,
                track_thinness: bool = True) -> Trajectory:
    """Run LinTS for ``env.horizon`` rounds.

    Per round the stream is consumed in a fixed order: whatever the action-set
    function draws, then ``dim`` normals for the posterior sample, then one
    normal for the reward noise (drawn even when ``noise_tau == 0``).

    ``thinness`` records the precision matrix as seen when the round's
    inflation is chosen.  With ``keep_states`` the posterior after every
    update is kept, index ``k`` holding the state entering round ``k + 2``.
    ``track_thinness=False`` skips the per-round eigensolve (column is NaN).
    """
    T, d = env.horizon, env.dim
    state = posterior_init(d, lam)
    arm_index = np.empty(T, dtype=int)
    actions = np.empty((T, d))
    reward = np.empty(T)
    regret = np.empty(T)
    iotas = np.empty(T)
    psis = np.empty(T)
    jit = np.zeros(T, dtype=bool)
    states = [] if keep_states else None

    for k in range(T):
        t = k + 1
        arm_set = env.action_set_fn(t, rng)
        psis[k] = thinness(state.precision) if track_thinness else np.nan
        jit[k] = state.jittered
        idx, _, iota = lints_round(state, arm_set, schedule, t, rng)
        a = arm_set[idx]
        mean_rewards = arm_set.arms @ env.theta_star
        y = mean_rewards[idx] + env.noise_tau * rng.standard_normal()
        state = posterior_update(state, a, y)

        arm_index[k], actions[k], reward[k], iotas[k] = idx, a, y, iota
        regret[k] = mean_rewards.max() - mean_rewards[idx]
        if keep_states:
            states.append(state)

    return Trajectory(arm_index, actions, reward, regret, iotas, psis, jit, state, states)


def replay_posterior(actions: np.ndarray, rewards: np.ndarray, lam: float) -> PosteriorState:
    """Rebuild the final posterior from a recorded (action, reward) sequence."""
    actions = np.atleast_2d(actions)
    state = posterior_init(actions.shape[1], lam)
    for a, y in zip(actions, rewards):
        state = posterior_update(state, a, y)
    return state

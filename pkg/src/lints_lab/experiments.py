"""Seeded replication of the failure-time and policy-comparison simulations.

Replication ``r`` of every experiment draws from
``numpy.random.default_rng(split_seed(base_seed, r))``; the same stream is
reused at every grid point, so grid points are compared under common random
numbers.  Results never depend on thread count or scheduling order.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import counterexamples as cx
from .bandit import ArmSet, Constant, FreqRho, LinearBanditEnv, ThinnessGated, run_episode, select_arm
from .errors import EmptyInput, InvalidParam, RejectionExhausted

MASK64 = (1 << 64) - 1
POLICIES = ("bayes", "freq", "improved")


def split_seed(base: int, index: int) -> int:
    """Derive the 64-bit seed of child stream ``index`` (splitmix64 finalizer)."""
    x = (int(base) + (int(index) + 1) * 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


def replication_rng(base_seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng(split_seed(base_seed, r))


def _parallel_map(fn: Callable, items: Sequence, threads: int | None):
    threads = threads or os.cpu_count() or 1
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass(frozen=True)
class BoxplotStats:
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float


def boxplot_stats(values) -> BoxplotStats:
    """Five-number summary; quartiles interpolate linearly at positions (n - 1) q."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise EmptyInput("boxplot_stats needs at least one value")
    q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75], method="linear")
    return BoxplotStats(int(v.size), float(v.min()), float(q1), float(med), float(q3),
                        float(v.max()), float(v.mean()))


@dataclass
class ReplicationValues:
    """Per-replication values behind one boxplot."""

    key: float
    seeds: list[int]
    p: np.ndarray

    @property
    def values(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 1.0 / self.p


# -- Example 1 ------------------------------------------------------------------------

def example1_replication(d: int, base_seed: int, r: int, sigma: float = 1.0, tau: float = 0.0,
                         literal: bool = False) -> float:
    """One replication: draw theta*, run the 3d forced rounds, return p at round 3d + 1."""
    params = cx.Example1Params(d, sigma, tau)
    rng = replication_rng(base_seed, r)
    theta = sigma * rng.standard_normal(params.dim)
    traj = run_episode(cx.example1_env(params, theta), Constant(1.0), 1.0, rng, track_thinness=False)
    if literal:
        return cx.example1_indicator(traj.final_state)
    return cx.example1_success_prob(traj.final_state, params.good_arm, 1.0)


def example1_values(dims, reps: int, base_seed: int, sigma: float = 1.0, tau: float = 0.0,
                    literal: bool = False, threads: int | None = None) -> list[ReplicationValues]:
    out = []
    for d in dims:
        if d < 1:
            raise InvalidParam(f"dims must be positive, got {d}")
        p = _parallel_map(lambda r: example1_replication(d, base_seed, r, sigma, tau, literal),
                          range(reps), threads)
        out.append(ReplicationValues(d, [split_seed(base_seed, r) for r in range(reps)], np.array(p)))
    return out


def run_example1(dims, reps: int, base_seed: int, sigma: float = 1.0, tau: float = 0.0,
                 literal: bool = False, threads: int | None = None) -> dict[int, BoxplotStats]:
    """Boxplot of 1/p per block count ``d``.

    With ``literal`` the per-replication value is the indicator
    1{<mean, 1> > 0} itself rather than a reciprocal probability.
    """
    res = example1_values(dims, reps, base_seed, sigma, tau, literal, threads)
    return {int(rv.key): boxplot_stats(rv.p if literal else rv.values) for rv in res}


# -- Example 2 ------------------------------------------------------------------------

def example2_replication(d: int, mu: float, base_seed: int, r: int, sigma: float = 1.0,
                         tau: float = 1.0, max_rejections: int = 1000) -> float:
    """Condition on A' being the first pull (by rejection), then return the continue probability.

    At round 1 the posterior is N(0, I), so the LinTS sample is a plain
    standard-normal vector; no 3d x 3d matrices are formed.
    """
    arms = cx.example2_action_set(d)
    a_prime = arms[1]
    rng = replication_rng(base_seed, r)
    for _ in range(max_rejections):
        theta = mu + sigma * rng.standard_normal(3 * d)
        theta_tilde = rng.standard_normal(3 * d)
        if select_arm(theta_tilde, arms) == 1:
            r1 = float(theta @ a_prime) + tau * rng.standard_normal()
            return cx.example2_continue_prob(r1, d)
    raise RejectionExhausted(f"A' never chosen in {max_rejections} attempts (d={d}, mu={mu}, rep={r})")


def example2_values(mode: str, grid, reps: int, base_seed: int, d: int = 200, mu: float = 0.1,
                    threads: int | None = None) -> list[ReplicationValues]:
    if mode not in ("vary-d", "vary-mu"):
        raise InvalidParam(f"mode must be 'vary-d' or 'vary-mu', got {mode!r}")
    out = []
    for g in grid:
        dd, mm = (int(g), mu) if mode == "vary-d" else (d, float(g))
        p = _parallel_map(lambda r: example2_replication(dd, mm, base_seed, r), range(reps), threads)
        out.append(ReplicationValues(g, [split_seed(base_seed, r) for r in range(reps)], np.array(p)))
    return out


def run_example2(mode: str, grid, reps: int, base_seed: int, d: int = 200, mu: float = 0.1,
                 threads: int | None = None) -> dict[float, BoxplotStats]:
    """Boxplot of 1/p per grid point; ``vary-d`` holds ``mu`` fixed, ``vary-mu`` holds ``d`` fixed."""
    res = example2_values(mode, grid, reps, base_seed, d, mu, threads)
    return {rv.key: boxplot_stats(rv.values) for rv in res}


# -- policy comparison ----------------------------------------------------------------

@dataclass
class ExperimentConfig:
    kind: str = "policy-compare"
    dims: list[int] = field(default_factory=lambda: [2, 4, 8, 16, 32, 64])
    mus: list[float] = field(default_factory=lambda: [round(0.1 * i, 1) for i in range(11)])
    d: int = 50
    mu: float = 0.1
    reps: int = 20
    base_seed: int = 0
    horizon: int = 1000
    arms: int = 100
    policies: list[str] = field(default_factory=lambda: list(POLICIES))
    lam: float = 10.0
    base_iota: float = 5.0
    psi_threshold: float = 2.0
    delta: float = 1e-4
    prior_scale: float = 0.1
    threads: int | None = None

    def __post_init__(self):
        if self.reps < 1 or self.horizon < 1 or self.arms < 1 or self.d < 1:
            raise InvalidParam("reps, horizon, arms and d must be >= 1")
        bad = set(self.policies) - set(POLICIES)
        if bad or not self.policies:
            raise InvalidParam(f"unknown policies {sorted(bad)}; choose from {POLICIES}")


def make_schedule(policy: str, cfg: ExperimentConfig):
    rho = FreqRho(cfg.delta, cfg.prior_scale)
    return {
        "bayes": Constant(1.0),
        "freq": rho,
        "improved": ThinnessGated(cfg.base_iota, cfg.psi_threshold, rho),
    }[policy]


def cube_action_sets(d: int, k: int, seed: int):
    """Round t gets k arms uniform on [-1/sqrt(d), 1/sqrt(d)]^d, a pure function of (seed, t)."""
    h = 1.0 / math.sqrt(d)
    return lambda t, rng: ArmSet(np.random.default_rng([seed, t]).uniform(-h, h, (k, d)))


@dataclass
class SeriesTable:
    """Per-round means across replications, one block of rows per policy."""

    horizon: int
    policies: list[str]
    thinness_mean: np.ndarray      # (policy, t)
    inst_regret_mean: np.ndarray
    inst_regret_se: np.ndarray
    psi_exceed_frac: np.ndarray
    reps: int
    psi_threshold: float

    header = ("t", "policy", "thinness_mean", "inst_regret_mean", "cum_regret_mean",
              "inst_regret_se", "psi_exceed_frac")

    @property
    def cum_regret_mean(self) -> np.ndarray:
        return np.cumsum(self.inst_regret_mean, axis=1)

    def final_cum_regret(self) -> dict[str, float]:
        return {p: float(self.cum_regret_mean[i, -1]) for i, p in enumerate(self.policies)}

    def thin_fraction_after(self, t0: int) -> dict[str, float]:
        """Fraction of (replication, t) with t > t0 whose thinness is within the threshold."""
        return {p: float(1.0 - self.psi_exceed_frac[i, t0:].mean()) for i, p in enumerate(self.policies)}

    def rows(self):
        cum = self.cum_regret_mean
        for i, p in enumerate(self.policies):
            for k in range(self.horizon):
                yield (k + 1, p, self.thinness_mean[i, k], self.inst_regret_mean[i, k], cum[i, k],
                       self.inst_regret_se[i, k], self.psi_exceed_frac[i, k])


def _compare_replication(cfg: ExperimentConfig, base_seed: int, r: int):
    seed_r = split_seed(base_seed, r)
    theta = math.sqrt(cfg.lam) * np.random.default_rng(split_seed(seed_r, 0)).standard_normal(cfg.d)
    env = LinearBanditEnv(cfg.d, theta, 1.0, cube_action_sets(cfg.d, cfg.arms, split_seed(seed_r, 1)),
                          cfg.horizon)
    out = []
    for p in cfg.policies:
        rng = np.random.default_rng(split_seed(seed_r, 2 + POLICIES.index(p)))
        traj = run_episode(env, make_schedule(p, cfg), cfg.lam, rng)
        out.append((traj.thinness, traj.inst_regret))
    return out


def run_policy_compare(cfg: ExperimentConfig, base_seed: int | None = None) -> SeriesTable:
    """TS-Bayes / TS-Freq / TS-Improved on shared theta* and shared arm sets per replication."""
    seed = cfg.base_seed if base_seed is None else base_seed
    per_rep = _parallel_map(lambda r: _compare_replication(cfg, seed, r), range(cfg.reps), cfg.threads)
    psi = np.array([[rep[i][0] for rep in per_rep] for i in range(len(cfg.policies))])
    reg = np.array([[rep[i][1] for rep in per_rep] for i in range(len(cfg.policies))])
    se = reg.std(axis=1, ddof=1) / math.sqrt(cfg.reps) if cfg.reps > 1 else np.zeros_like(reg[:, 0])
    return SeriesTable(
        horizon=cfg.horizon, policies=list(cfg.policies), thinness_mean=psi.mean(axis=1),
        inst_regret_mean=reg.mean(axis=1), inst_regret_se=se,
        psi_exceed_frac=(psi > cfg.psi_threshold).mean(axis=1), reps=cfg.reps,
        psi_threshold=cfg.psi_threshold,
    )

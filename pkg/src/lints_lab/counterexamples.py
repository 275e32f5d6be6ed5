"""Adversarial environments on which uninflated LinTS fails, with closed-form analyzers.

Example 1 stacks ``d`` two-coordinate blocks: each block is pulled once per
coordinate, then LinTS picks one coordinate of the block, which leaves the
posterior mean marginally biased whenever the true prior/noise variances
differ.  The final arm set ``{0, A}`` points ``A`` against that bias.

Example 2 uses a fixed arm set ``{0, A', A}`` under a mean-shifted prior.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .bandit import ArmSet, LinearBanditEnv
from .errors import DegenerateArm, InvalidCovariance, InvalidParam
from .linalg import PosteriorState, quad_norm

_SQRT_PI = math.sqrt(math.pi)


def norm_cdf(x):
    return special.ndtr(x)


# -- Example 1 ----------------------------------------------------------------

@dataclass(frozen=True)
class Example1Params:
    """``d`` blocks in ambient dimension 2d; true prior N(0, sigma^2 I), noise N(0, tau^2)."""

    d: int
    sigma: float = 1.0
    tau: float = 0.0

    def __post_init__(self):
        if self.d < 1:
            raise InvalidParam(f"block count must be >= 1, got {self.d}")
        if self.sigma < 0 or self.tau < 0:
            raise InvalidParam("sigma and tau must be non-negative")

    @property
    def dim(self) -> int:
        return 2 * self.d

    @property
    def direction(self) -> float:
        # sign(tau^2 - sigma^2), with sign(0) taken as +1 so A never vanishes
        return -1.0 if self.tau ** 2 < self.sigma ** 2 else 1.0

    @property
    def good_arm(self) -> np.ndarray:
        return np.full(self.dim, self.direction / math.sqrt(self.d))


def example1_action_set(params: Example1Params, t: int) -> ArmSet:
    if t < 1:
        raise InvalidParam(f"rounds are 1-based, got t={t}")
    d, n = params.d, params.dim
    eye = np.eye(n)
    if t <= 2 * d:
        return ArmSet(eye[[t - 1]])
    if t <= 3 * d:
        b = t - 2 * d
        return ArmSet(eye[[2 * b - 2, 2 * b - 1]])
    return ArmSet(np.vstack([np.zeros(n), params.good_arm]))


def example1_env(params: Example1Params, theta_star, horizon: int | None = None) -> LinearBanditEnv:
    """Environment over the stacked arm sets; default horizon is the forced phase, 3d rounds."""
    return LinearBanditEnv(
        dim=params.dim,
        theta_star=theta_star,
        noise_tau=params.tau,
        action_set_fn=lambda t, rng: example1_action_set(params, t),
        horizon=3 * params.d if horizon is None else horizon,
    )


def example1_success_prob(state: PosteriorState, a, iota: float = 1.0) -> float:
    """P(<theta_tilde, a> > 0) for theta_tilde ~ N(mean, iota^2 cov).

    Against the zero arm this is the per-round chance that LinTS picks ``a``;
    while it keeps failing nothing is learned, so the wait is geometric with
    mean ``1 / p``.
    """
    a = np.asarray(a, dtype=float)
    scale = quad_norm(a, state.covariance)
    if scale < 1e-300:
        raise DegenerateArm("arm has zero posterior variance")
    return float(norm_cdf(state.mean @ a / (iota * scale)))


def example1_indicator(state: PosteriorState) -> float:
    """Literal reading of the failure event: 1{<mean, 1> > 0}."""
    return float(state.mean.sum() > 0)


def simulate_blocks(n: int, sigma: float, tau: float, rng: np.random.Generator,
                    lam: float = 1.0, iota: float = 1.0):
    """Run ``n`` independent single-block LinTS instances in one batch.

    Each block sees ``{e1}``, ``{e2}``, then ``{e1, e2}``.  The posterior is
    updated with the generic precision/information recursion (batched), not
    the closed-form block formulas, so the result can be checked against them.

    Returns ``(mean4, chosen, theta, eps)``: the posterior mean after round 3,
    the 0-based coordinate chosen at round 3, and the drawn parameters and
    noises (``eps[:, k]`` is the noise of round ``k + 1``).
    """
    theta = sigma * rng.standard_normal((n, 2))
    eps = tau * rng.standard_normal((n, 3))
    z = rng.standard_normal((n, 2))

    prec = np.broadcast_to(np.eye(2) / lam, (n, 2, 2)).copy()
    info = np.zeros((n, 2))
    for k in range(2):
        prec[:, k, k] += 1.0
        info[:, k] += theta[:, k] + eps[:, k]

    cov = np.linalg.inv(prec)
    mean = np.einsum("nij,nj->ni", cov, info)
    L = np.linalg.cholesky(cov)
    sample = mean + iota * np.einsum("nij,nj->ni", L, z)
    chosen = np.where(sample[:, 0] >= sample[:, 1], 0, 1)

    rows = np.arange(n)
    prec[rows, chosen, chosen] += 1.0
    info[rows, chosen] += theta[rows, chosen] + eps[:, 2]
    mean4 = np.linalg.solve(prec, info[..., None])[..., 0]
    return mean4, chosen, theta, eps


def selection_beta() -> float:
    """E[max(A, B)] for independent standard normals A, B, i.e. 1/sqrt(pi)."""
    return 1.0 / _SQRT_PI


def bias_closed_form(sigma: float, tau: float) -> float:
    """Expected <e1 + e2, posterior mean> of one block after its third round."""
    s2, t2 = sigma ** 2, tau ** 2
    return (s2 - t2) * selection_beta() / (6.0 * math.sqrt(s2 + t2 + 2.0))


def misperception_constants(sigma: float, tau: float) -> tuple[float, float]:
    p0 = 0.5 * (1.0 - float(norm_cdf(1.0)))
    c1 = abs(sigma ** 2 - tau ** 2) * selection_beta() / (12.0 * math.sqrt(sigma ** 2 + tau ** 2 + 2.0))
    return p0, c1


def bias_mgf_bound(s: float, sigma: float, tau: float) -> float:
    return math.exp(s ** 2 * (4 * sigma + 4 * tau + 2) ** 2 / 2)


# -- Example 2 ----------------------------------------------------------------

@dataclass(frozen=True)
class Example2Params:
    d: int
    mu: float = 0.1
    sigma: float = 1.0
    tau: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise InvalidParam(f"d must be >= 1, got {self.d}")
        if not (math.isfinite(self.mu) and self.mu >= 0 and self.sigma > 0):
            raise InvalidParam("mu must be finite and non-negative, sigma positive")

    @property
    def dim(self) -> int:
        return 3 * self.d


def example2_action_set(d: int) -> ArmSet:
    """Arms ``{0, A', A}`` in R^{3d}, in that order."""
    if d < 1:
        raise InvalidParam(f"d must be >= 1, got {d}")
    s = 1.0 / math.sqrt(d)
    a_prime = np.zeros(3 * d)
    a_prime[:d] = -s
    a = a_prime.copy()
    a[d:] = s
    return ArmSet(np.vstack([np.zeros(3 * d), a_prime, a]))


def bivariate_orthant_neg(m1: float, m2: float, v1: float, v2: float, c: float) -> float:
    """P(X <= 0, Y <= 0) for (X, Y) jointly Gaussian.

    Conditions on X and integrates phi(u) * Phi(...) over the standardized
    X-range by adaptive Gauss-Kronrod quadrature.
    """
    if not (v1 > 0 and v2 > 0):
        raise InvalidCovariance("variances must be positive")
    rho = c / math.sqrt(v1 * v2)
    if not abs(rho) < 1:
        raise InvalidCovariance(f"correlation {rho:.6g} is not strictly inside (-1, 1)")
    s1, s2 = math.sqrt(v1), math.sqrt(v2)
    cond_sd = s2 * math.sqrt(1.0 - rho * rho)
    upper = -m1 / s1
    lower = min(-8.0, upper - 8.0)

    def integrand(u):
        # X = m1 + s1 u; Y | X has mean m2 + rho s2 u and sd cond_sd
        return math.exp(-0.5 * u * u) / math.sqrt(2 * math.pi) * norm_cdf(-(m2 + rho * s2 * u) / cond_sd)

    val, _ = integrate.quad(integrand, lower, upper, epsabs=1e-12, epsrel=1e-10, limit=200)
    return float(min(max(val, 0.0), 1.0))


def centered_orthant(rho: float) -> float:
    """Closed form P(X <= 0, Y <= 0) for centered unit-variance pairs with correlation rho."""
    return 0.25 + math.asin(rho) / (2 * math.pi)


def example2_round2_marginals(state: PosteriorState, arm_set: ArmSet, iota: float = 1.0):
    """Means, variances and covariance of <theta_tilde, A'> and <theta_tilde, A>."""
    a_prime, a = arm_set[1], arm_set[2]
    cov = (iota ** 2) * state.covariance
    return (
        float(state.mean @ a_prime),
        float(state.mean @ a),
        float(a_prime @ cov @ a_prime),
        float(a @ cov @ a),
        float(a_prime @ cov @ a),
    )


def example2_continue_prob(r1: float, d: int | None = None) -> float:
    """Chance the second pull is A or A' after one pull of A' returned ``r1``.

    Assumes unit prior variance, unit assumed noise and no inflation, under
    which the two sampled rewards have means (r1/2, r1/2), variances
    (1/2, 5/2) and covariance 1/2 for every ``d``.
    """
    return 1.0 - bivariate_orthant_neg(r1 / 2, r1 / 2, 0.5, 2.5, 0.5)

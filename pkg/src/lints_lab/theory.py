"""Closed-form quantities from the optimism analysis and Monte-Carlo checks of the lemmas.

Every ``check_*`` / ``mc_*`` function returns a :class:`VerificationReport`
and draws all randomness from the generator it is handed, so a report is
reproducible from its seed.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterator

import numpy as np

from . import counterexamples as cx
from .errors import DimensionMismatch, InvalidParam, RejectionExhausted
from .linalg import (
    PosteriorState,
    posterior_init,
    posterior_update,
    psd_norms,
    quad_norm,
    thinness,
)

PHI_MINUS_ONE = float(cx.norm_cdf(-1.0))
CHUNK = 1 << 18


@dataclass
class VerificationReport:
    name: str
    n: int
    estimate: float
    target: float
    stderr: float
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = bool(self.passed)
        return out

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"[{flag}] {self.name}: estimate={self.estimate:.6g} target={self.target:.6g} "
                f"se={self.stderr:.3g} n={self.n}")


def _chunks(n: int, size: int = CHUNK) -> Iterator[int]:
    while n > 0:
        m = min(n, size)
        yield m
        n -= m


# -- optimism lemma ---------------------------------------------------------------

@dataclass(frozen=True)
class TheoryParams:
    nu: float = 1.5
    omega: float = 0.5
    psi_cap: float = 2.0
    subgauss_sigma: float = 1.0
    prior_bound: float = 1.0
    arm_bound: float = 1.0
    horizon: int = 1000
    lam: float = 1.0

    def validate(self, d: int) -> None:
        if self.nu < 1 or self.nu > math.sqrt(d) + 1e-12:
            raise InvalidParam(f"nu={self.nu} must lie in [1, sqrt(d)] for d={d}")
        if min(self.omega, self.lam, self.arm_bound, self.horizon) <= 0 or self.psi_cap < 1:
            raise InvalidParam("omega, lam, arm_bound, horizon must be positive and psi_cap >= 1")
        if self.subgauss_sigma < 0 or self.prior_bound < 0:
            raise InvalidParam("subgauss_sigma and prior_bound must be non-negative")


def rho_theory(params: TheoryParams, d: int) -> float:
    p = params
    return (p.subgauss_sigma * math.sqrt(d * math.log(1 + p.horizon * p.arm_bound ** 2 / p.lam))
            + p.prior_bound / math.sqrt(p.lam))


def iota_theory(params: TheoryParams, d: int) -> float:
    return params.nu * params.psi_cap / params.omega * rho_theory(params, d) / math.sqrt(d)


def well_posed(theta_star, state: PosteriorState, a_star, params: TheoryParams) -> bool:
    """Thinness cap, lower bound on ||A*||_Sigma, and the diversity bound on the error."""
    theta_star = np.asarray(theta_star, dtype=float)
    a_star = np.asarray(a_star, dtype=float)
    d = state.dim
    if theta_star.shape != (d,) or a_star.shape != (d,):
        raise DimensionMismatch("theta_star, a_star and the posterior must share a dimension")
    cov = state.covariance
    if thinness(cov) > params.psi_cap:
        return False
    _, nuc = psd_norms(cov)
    a_norm = float(np.linalg.norm(a_star))
    if quad_norm(a_star, cov) < params.omega * math.sqrt(nuc / d) * a_norm:
        return False
    err = state.mean - theta_star
    return abs(float(a_star @ err)) <= params.nu / math.sqrt(d) * a_norm * float(np.linalg.norm(err))


def _random_covariance(d: int, rng: np.random.Generator):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    kappa = rng.uniform(1.0, 50.0)
    eig = np.exp(rng.uniform(0.0, math.log(kappa), d)) * rng.uniform(0.01, 1.0)
    return q, eig


def _scenario(d: int, params: TheoryParams, rho: float, adversarial: bool, rng):
    q, eig = _random_covariance(d, rng)
    cov = (q * eig) @ q.T
    if thinness(cov) > params.psi_cap:
        return None
    theta_star = rng.standard_normal(d)
    a_star = rng.uniform(-1 / math.sqrt(d), 1 / math.sqrt(d), d)
    sqrt_cov = (q * np.sqrt(eig)) @ q.T
    inv_sqrt_cov = (q / np.sqrt(eig)) @ q.T
    if adversarial:
        # push the error onto the diversity boundary, leaning into the widest
        # posterior direction, with <err, a*> negative
        a_hat = a_star / np.linalg.norm(a_star)
        w = q[:, np.argmax(eig)] - (q[:, np.argmax(eig)] @ a_hat) * a_hat
        if np.linalg.norm(w) < 1e-8:
            return None
        w /= np.linalg.norm(w)
        alpha = min(params.nu / math.sqrt(d), 1.0) * (1 - 1e-9)
        direction = -(alpha * a_hat + math.sqrt(1 - alpha ** 2) * w)
        err = rho * direction / np.linalg.norm(inv_sqrt_cov @ direction)
    else:
        u = rng.standard_normal(d)
        u /= np.linalg.norm(u)
        err = rho * rng.uniform() ** (1.0 / d) * (sqrt_cov @ u)
    state = PosteriorState.from_moments(theta_star + err, cov, lam=params.lam)
    if not well_posed(theta_star, state, a_star, params):
        return None
    return theta_star, state, a_star


def optimism_probability(theta_star, state: PosteriorState, a_star, iota: float) -> float:
    """Exact P(<theta_tilde, a*> >= <theta*, a*>) given the posterior."""
    return float(cx.norm_cdf((state.mean - theta_star) @ a_star / (iota * quad_norm(a_star, state.covariance))))


def mc_optimism_rate(d: int, params: TheoryParams, scenarios: int, rng: np.random.Generator,
                     iota_scale: float = 1.0, adversarial_frac: float = 0.5,
                     max_attempts: int = 100_000) -> VerificationReport:
    """Minimum exact optimism probability over rejection-sampled well-posed scenarios."""
    params.validate(d)
    rho = rho_theory(params, d)
    iota = iota_theory(params, d) * iota_scale
    probs = np.empty(scenarios)
    attempts_total = 0
    for s in range(scenarios):
        adversarial = rng.uniform() < adversarial_frac
        for attempt in range(1, max_attempts + 1):
            sc = _scenario(d, params, rho, adversarial, rng)
            if sc is not None:
                break
        else:
            raise RejectionExhausted(f"no well-posed scenario after {max_attempts} attempts (d={d})")
        attempts_total += attempt
        probs[s] = optimism_probability(*sc, iota)
    low = float(probs.min())
    return VerificationReport(
        name=f"optimism_d{d}", n=scenarios, estimate=low, target=PHI_MINUS_ONE, stderr=0.0,
        passed=low >= PHI_MINUS_ONE - 1e-9,
        details={"iota": iota, "rho": rho, "mean_prob": float(probs.mean()),
                 "acceptance_rate": scenarios / attempts_total},
    )


# -- bias decomposition -------------------------------------------------------------

G_SHAPES = {
    "one": lambda y, z: np.ones_like(y),
    "linear": lambda y, z: y,
    "positive_part_indicator": lambda y, z: (y > 0).astype(float),
}


def mc_bias_decomposition(sigmas, g_id: str, n: int, rng: np.random.Generator,
                          moment_match: bool = True) -> VerificationReport:
    """Compare E[X_i g(Y, Z)] with sigma_i^2 / sum(sigma^2) * E[Y g(Y, Z)].

    Both sides use the same draws.  With ``moment_match`` the raw normals are
    whitened so their empirical second moments are exactly the identity,
    which makes the linear shape agree to rounding error.
    """
    if g_id not in G_SHAPES:
        raise InvalidParam(f"unknown g shape {g_id!r}; choose from {sorted(G_SHAPES)}")
    sig = np.asarray(sigmas, dtype=float)
    g = rng.standard_normal((n, sig.size))
    z = rng.standard_normal(n)
    if moment_match:
        L = np.linalg.cholesky(g.T @ g / n)
        g = np.linalg.solve(L, g.T).T
    x = g * sig
    y = x.sum(axis=1)
    gy = G_SHAPES[g_id](y, z)
    w = sig ** 2 / np.sum(sig ** 2)
    lhs_terms = x * gy[:, None]
    rhs_terms = w[None, :] * (y * gy)[:, None]
    lhs, rhs = lhs_terms.mean(axis=0), rhs_terms.mean(axis=0)
    se = (lhs_terms - rhs_terms).std(axis=0, ddof=1) / math.sqrt(n)
    gap = np.abs(lhs - rhs)
    ok = (gap <= 4 * se) | (gap <= 1e-10)
    worst = int(np.argmax(gap))
    return VerificationReport(
        name=f"bias_decomposition_{g_id}", n=n, estimate=float(gap[worst]), target=0.0,
        stderr=float(se[worst]), passed=bool(ok.all()),
        details={"lhs": lhs.tolist(), "rhs": rhs.tolist(), "se": se.tolist()},
    )


# -- appendix tail lemmas -------------------------------------------------------------

def mc_cube_tail(d: int, p: float, n: int, rng: np.random.Generator, directions=None) -> VerificationReport:
    """Exceedance frequency of <A, V> > sqrt(2 log(1/p)) for A uniform on the scaled cube."""
    if directions is None:
        v = rng.standard_normal(d)
        directions = [v / np.linalg.norm(v), np.ones(d) / math.sqrt(d)]
    dirs = np.array([np.asarray(v, float) / np.linalg.norm(v) for v in directions])
    thr = math.sqrt(2 * math.log(1 / p))
    hits = np.zeros(len(dirs))
    h = 1 / math.sqrt(d)
    for m in _chunks(n, max(1, CHUNK * 4 // d)):
        a = rng.uniform(-h, h, (m, d))
        hits += (a @ dirs.T > thr).sum(axis=0)
    freq = hits / n
    se = math.sqrt(p * (1 - p) / n)
    return VerificationReport(
        name=f"cube_tail_d{d}_p{p:g}", n=n, estimate=float(freq.max()), target=p, stderr=se,
        passed=bool(np.all(freq <= p + 3 * se)), details={"threshold": thr, "freq": freq.tolist()},
    )


def mc_quad_lower_tail(sigma_m, n: int, rng: np.random.Generator, label: str = "") -> VerificationReport:
    """Mean identity E||A||_S^2 = tr(S)/(3d) and, for thin-free S with d >= 20, a loose lower tail."""
    sigma_m = np.asarray(sigma_m, dtype=float)
    d = sigma_m.shape[0]
    _, nuc = psd_norms(sigma_m)
    target = nuc / (3 * d)
    h = 1 / math.sqrt(d)
    total = total_sq = 0.0
    low = 0
    for m in _chunks(n, max(1, CHUNK * 4 // d)):
        a = rng.uniform(-h, h, (m, d))
        q = np.einsum("ni,ij,nj->n", a, sigma_m, a)
        total += q.sum()
        total_sq += (q * q).sum()
        low += int((q <= nuc / (6 * d)).sum())
    mean = total / n
    se = math.sqrt(max(total_sq / n - mean ** 2, 0.0) / (n - 1))
    mean_ok = abs(mean - target) <= 3 * se
    tail_checked = d >= 20 and thinness(sigma_m) <= 2.0
    tail_freq = low / n
    return VerificationReport(
        name=f"quad_lower_tail{label}_d{d}", n=n, estimate=mean, target=target, stderr=se,
        passed=bool(mean_ok and (tail_freq <= 0.05 or not tail_checked)),
        details={"tail_freq": tail_freq, "tail_checked": tail_checked, "mean_ok": bool(mean_ok)},
    )


# -- Example 1 checks ---------------------------------------------------------------

def check_beta(n: int, rng: np.random.Generator, tol: float = 5e-4) -> VerificationReport:
    total = total_sq = 0.0
    for m in _chunks(n, CHUNK * 4):
        mx = rng.standard_normal((m, 2)).max(axis=1)
        total += mx.sum()
        total_sq += (mx * mx).sum()
    est = total / n
    se = math.sqrt((total_sq / n - est ** 2) / (n - 1))
    target = cx.selection_beta()
    return VerificationReport("selection_beta", n, est, target, se, abs(est - target) <= tol,
                              {"tolerance": tol})


def _block_projections(n: int, sigma: float, tau: float, rng) -> np.ndarray:
    out = np.empty(n)
    pos = 0
    for m in _chunks(n):
        mean4, *_ = cx.simulate_blocks(m, sigma, tau, rng)
        out[pos:pos + m] = mean4.sum(axis=1)
        pos += m
    return out


def check_block_bias(sigma: float, tau: float, n: int, rng: np.random.Generator) -> VerificationReport:
    """MC mean of <e1 + e2, posterior mean after round 3> against its closed form."""
    v = _block_projections(n, sigma, tau, rng)
    est, se = float(v.mean()), float(v.std(ddof=1) / math.sqrt(n))
    target = cx.bias_closed_form(sigma, tau)
    return VerificationReport(f"block_bias_sigma{sigma:g}_tau{tau:g}", n, est, target, se,
                              abs(est - target) <= 3 * se)


def check_bias_mgf(sigma: float, tau: float, n: int, rng: np.random.Generator,
                   s_values=(-0.5, -0.1, 0.1, 0.5), slack: float = 1.1) -> VerificationReport:
    """Empirical MGF of the centered block projection stays under its sub-Gaussian envelope."""
    v = _block_projections(n, sigma, tau, rng) - cx.bias_closed_form(sigma, tau)
    ratios = [float(np.mean(np.exp(s * v)) / cx.bias_mgf_bound(s, sigma, tau)) for s in s_values]
    worst = max(ratios)
    return VerificationReport(f"bias_mgf_sigma{sigma:g}_tau{tau:g}", n, worst, 1.0, 0.0,
                              worst <= slack, {"s": list(s_values), "ratio": ratios})


# -- Example 2 checks ---------------------------------------------------------------

def check_example2_round1(d: int, n: int, rng: np.random.Generator, lam: float = 1.0) -> VerificationReport:
    """Frequency with which the first LinTS pull (prior N(0, lam I)) is A'."""
    arms = cx.example2_action_set(d).arms
    hits = 0
    for m in _chunks(n, max(1, CHUNK * 4 // (3 * d))):
        theta = math.sqrt(lam) * rng.standard_normal((m, 3 * d))
        hits += int((np.argmax(theta @ arms.T, axis=1) == 1).sum())
    freq = hits / n
    se = math.sqrt(0.25 * 0.75 / n)
    return VerificationReport(f"example2_round1_d{d}", n, freq, 0.25, se, abs(freq - 0.25) <= 3 * se)


def example2_posterior_after_pull(r1: float, d: int) -> PosteriorState:
    arms = cx.example2_action_set(d)
    return posterior_update(posterior_init(3 * d, 1.0), arms[1], r1)


def check_example2_marginals(r1: float, d: int) -> VerificationReport:
    state = example2_posterior_after_pull(r1, d)
    got = np.array(cx.example2_round2_marginals(state, cx.example2_action_set(d)))
    want = np.array([r1 / 2, r1 / 2, 0.5, 2.5, 0.5])
    gap = float(np.abs(got - want).max())
    return VerificationReport(f"example2_marginals_d{d}_r{r1:g}", 1, gap, 0.0, 0.0, gap <= 1e-10,
                              {"marginals": got.tolist()})


def check_example2_continue(r1: float, d: int, n: int, rng: np.random.Generator) -> VerificationReport:
    """Direct round-2 simulation from the posterior versus the orthant-based probability."""
    state = example2_posterior_after_pull(r1, d)
    arms = cx.example2_action_set(d).arms
    hits = 0
    for m in _chunks(n, max(1, CHUNK * 4 // (3 * d))):
        theta = state.mean + rng.standard_normal((m, 3 * d)) @ state.chol.T
        hits += int((np.argmax(theta @ arms.T, axis=1) != 0).sum())
    freq = hits / n
    target = cx.example2_continue_prob(r1, d)
    se = math.sqrt(target * (1 - target) / n)
    return VerificationReport(f"example2_continue_d{d}_r{r1:g}", n, freq, target, se,
                              abs(freq - target) <= 3 * se)


def check_orthant_mc(m1, m2, v1, v2, c, n: int, rng: np.random.Generator) -> VerificationReport:
    cov = np.array([[v1, c], [c, v2]])
    hits = 0
    for m in _chunks(n):
        xy = rng.standard_normal((m, 2)) @ np.linalg.cholesky(cov).T + (m1, m2)
        hits += int(np.all(xy <= 0, axis=1).sum())
    freq = hits / n
    target = cx.bivariate_orthant_neg(m1, m2, v1, v2, c)
    se = math.sqrt(max(target * (1 - target), 1e-300) / n)
    return VerificationReport(f"orthant_m({m1:g},{m2:g})_v({v1:g},{v2:g})_c{c:g}", n, freq, target, se,
                              abs(freq - target) <= 3 * se or (target < 1e-12 and hits == 0))

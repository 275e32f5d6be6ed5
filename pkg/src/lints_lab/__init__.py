"""Linear Thompson sampling with posterior inflation, adversarial counterexamples and lemma checks."""

__version__ = "0.1.0"

from .bandit import (
    ArmSet,
    Constant,
    FreqRho,
    LinearBanditEnv,
    ThinnessGated,
    Trajectory,
    inflation_value,
    lints_round,
    run_episode,
    select_arm,
)
from .linalg import (
    PosteriorState,
    cholesky,
    posterior_init,
    posterior_sample,
    posterior_update,
    psd_norms,
    quad_norm,
    thinness,
)

__all__ = [
    "ArmSet", "Constant", "FreqRho", "LinearBanditEnv", "PosteriorState", "ThinnessGated",
    "Trajectory", "cholesky", "inflation_value", "lints_round", "posterior_init",
    "posterior_sample", "posterior_update", "psd_norms", "quad_norm", "run_episode",
    "select_arm", "thinness",
]

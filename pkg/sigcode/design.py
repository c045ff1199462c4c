"""Rayleigh-fading parameter design: expected rates, grid search, saturation threshold, best masking"""

import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from scipy.special import exp1, xlogy

from .codebook import gram_entropy
from .config import db_to_linear
from .errors import InvalidDistributionError
from .models import ChannelDraw, DesignResult, DesignSearchSpace, SignatureDistribution
from .rate import RateGeometry, gaussian_bound_rate, scheme_a_rate, scheme_b_rate
from .worker import run_grid

logger = logging.getLogger(__name__)

MIN_DRAWS = 100
TAU_METHODS = ("quadrature", "monte_carlo", "closed_form")
SCHEMES = {"A": scheme_a_rate, "B": scheme_b_rate}


def rayleigh_gains(n: int, draws: int, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """|h|^2 of unit complex Gaussians: own link (draws,) and interferers (draws, n-1)."""
    gains = rng.exponential(1.0, size=(draws, n))
    return gains[:, 0], gains[:, 1:]


def _mean_stderr(samples: np.ndarray, axis: int = -1) -> Tuple[np.ndarray, np.ndarray]:
    count = samples.shape[axis]
    return samples.mean(axis=axis), samples.std(axis=axis, ddof=1) / math.sqrt(count)


def expected_rate(
    dist: SignatureDistribution,
    n: int,
    gamma_db: float,
    mc_draws: int,
    rng: np.random.Generator,
    zero_cross: bool = False,
) -> Tuple[float, float]:
    """Mean and standard error of the rate lower bound over Rayleigh draws."""
    if mc_draws < MIN_DRAWS:
        raise InvalidDistributionError(f"mc_draws must be >= {MIN_DRAWS}, got {mc_draws}")
    own, cross = rayleigh_gains(n, mc_draws, rng)
    if zero_cross:
        cross = np.zeros_like(cross)
    gamma = db_to_linear(gamma_db)
    entropy_bits = gram_entropy(dist)
    rates = np.array([
        RateGeometry(dist, n, ChannelDraw(o, tuple(c)), gamma).rate(entropy_bits=entropy_bits)
        for o, c in zip(own, cross)
    ])
    mean, stderr = _mean_stderr(rates)
    return float(mean), float(stderr)


def _binary_sweep_task(payload: Dict) -> np.ndarray:
    """Per-draw rates (len(nu_grid), draws) for one (K, epsilon) grid point."""
    K, epsilon, nu_grid = payload["K"], payload["epsilon"], payload["nu_grid"]
    base = SignatureDistribution.binary(K, 0.5, epsilon)
    dists = [base.with_pmf((1.0 - nu, nu)) for nu in nu_grid]
    entropies = np.array([gram_entropy(d) for d in dists])

    own, cross, gamma, n = payload["own"], payload["cross"], payload["gamma"], payload["n"]
    out = np.empty((len(nu_grid), len(own)))
    probabilities = None
    for d, (o, c) in enumerate(zip(own, cross)):
        geometry = RateGeometry(base, n, ChannelDraw(o, tuple(c)), gamma)
        if probabilities is None:
            pairs = [geometry.class_probabilities(dist) for dist in dists]
            probabilities = (np.array([p[0] for p in pairs]), np.array([p[1] for p in pairs]))
        out[:, d] = geometry.rates(probabilities[0], probabilities[1], entropies)
    logger.debug(f"Sweep point K={K} epsilon={epsilon}: {len(nu_grid)} nu values x {len(own)} draws")
    return out


def _tie_key(row: Dict[str, float]) -> Tuple:
    return (-row["expected_rate"], row["K"], abs(row["nu"] - 0.5), -row["epsilon"])


def optimize_parameters(space: DesignSearchSpace, n: int, workers: Optional[int] = None) -> DesignResult:
    """Grid search over (K, nu, epsilon) for {-1, 1} codes with common random numbers.

    Ties go to smaller K, then nu closer to 1/2, then larger epsilon.
    """
    if not space.K_values or not space.nu_grid or not space.epsilon_grid:
        raise InvalidDistributionError("search grids must be nonempty")
    if space.mc_draws < MIN_DRAWS:
        raise InvalidDistributionError(f"mc_draws must be >= {MIN_DRAWS}, got {space.mc_draws}")

    rng = np.random.default_rng(space.seed)
    own, cross = rayleigh_gains(n, space.mc_draws, rng)
    gamma = db_to_linear(space.gamma_db)
    points = [(K, eps) for K in space.K_values for eps in space.epsilon_grid]
    payloads = [
        {"K": K, "epsilon": eps, "nu_grid": tuple(space.nu_grid), "own": own, "cross": cross, "gamma": gamma, "n": n}
        for K, eps in points
    ]
    logger.info(
        f"Design sweep n={n} gamma={space.gamma_db}dB: {len(points)} (K, epsilon) points x "
        f"{len(space.nu_grid)} nu values x {space.mc_draws} draws"
    )
    per_draw = run_grid(_binary_sweep_task, payloads, workers)

    table: List[Dict[str, float]] = []
    for (K, eps), rates in zip(points, per_draw):
        means, stderrs = _mean_stderr(rates)
        for nu, mean, stderr in zip(space.nu_grid, means, stderrs):
            table.append({"K": K, "nu": float(nu), "epsilon": float(eps),
                          "expected_rate": float(mean), "stderr": float(stderr)})

    best = min(table, key=_tie_key)
    logger.info(f"Best design: K={best['K']} nu={best['nu']} epsilon={best['epsilon']} rate={best['expected_rate']:.4f}")
    return DesignResult(
        K_star=int(best["K"]),
        nu_star=best["nu"],
        epsilon_star=best["epsilon"],
        expected_rate=best["expected_rate"],
        stderr=best["stderr"],
        sweep_table=table,
    )


def expected_scheme_rate(
    scheme: str, epsilon: float, gamma_db: float, own: np.ndarray, cross: np.ndarray
) -> Tuple[float, float]:
    """Closed-form scheme rate averaged over pre-drawn two-user gains."""
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {tuple(SCHEMES)}, got {scheme!r}")
    rates = SCHEMES[scheme](epsilon, db_to_linear(gamma_db), own, np.ravel(cross)).rate
    mean, stderr = _mean_stderr(np.asarray(rates))
    return float(mean), float(stderr)


def scheme_sweep(
    gamma_db_values: Sequence[float], epsilon_grid: Sequence[float], mc_draws: int, rng: np.random.Generator
) -> List[Dict[str, float]]:
    """sup over epsilon of the expected rate of Schemes A and B per SNR, on shared draws."""
    own, cross = rayleigh_gains(2, mc_draws, rng)
    cross = cross[:, 0]
    rows = []
    for gamma_db in gamma_db_values:
        gamma = db_to_linear(gamma_db)
        row: Dict[str, float] = {"gamma_db": float(gamma_db)}
        best_draws = {}
        for name, scheme in SCHEMES.items():
            per_eps = np.array([scheme(eps, gamma, own, cross).rate for eps in epsilon_grid])
            means = per_eps.mean(axis=1)
            best = int(np.argmax(means))
            best_draws[name] = per_eps[best]
            row[f"rate_{name.lower()}"] = float(means[best])
            row[f"stderr_{name.lower()}"] = float(per_eps[best].std(ddof=1) / math.sqrt(mc_draws))
            row[f"eps_{name.lower()}"] = float(epsilon_grid[best])
        difference = best_draws["A"] - best_draws["B"]
        row["diff_stderr"] = float(difference.std(ddof=1) / math.sqrt(mc_draws))
        rows.append(row)
    return rows


def _scheme_b_means(epsilons: np.ndarray, gamma: float, own: np.ndarray, cross: np.ndarray) -> np.ndarray:
    return np.array([np.mean(scheme_b_rate(float(e), gamma, own, cross).rate) for e in epsilons])


def epsilon_hat(
    gamma_db: float, mc_draws: int, rng: np.random.Generator, step: float = 1e-3
) -> float:
    """Masking probability maximizing the expected two-user Scheme-B rate."""
    own, cross = rayleigh_gains(2, mc_draws, rng)
    cross = cross[:, 0]
    gamma = db_to_linear(gamma_db)
    grid = np.arange(1, int(round(1.0 / step)) + 1) * step
    means = _scheme_b_means(grid, gamma, own, cross)
    best = int(np.argmax(means))
    if best == len(grid) - 1:
        return 1.0
    lo = grid[max(best - 1, 0)]
    hi = grid[best + 1]
    found = minimize_scalar(
        lambda e: -float(np.mean(scheme_b_rate(e, gamma, own, cross).rate)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": step * 1e-3},
    )
    refined = float(found.x)
    return refined if -found.fun >= means[best] else float(grid[best])


def tau_n_monte_carlo(n: int, samples: int, rng: np.random.Generator) -> Tuple[float, float]:
    if n < 2:
        raise InvalidDistributionError(f"n must be >= 2, got {n}")
    zeta = rng.exponential(1.0, size=samples)
    eta = rng.gamma(n - 1, 1.0, size=samples)
    values = np.log2(1.0 + zeta / eta)
    mean, stderr = _mean_stderr(values)
    return float(mean), float(stderr)


def tau_n(
    n: int,
    method: str = "quadrature",
    samples: int = 1_000_000,
    rng: Optional[np.random.Generator] = None,
) -> float:
    """Saturation threshold E log2(1 + |h_ii|^2 / sum_j |h_ji|^2) for Rayleigh gains."""
    if n < 2:
        raise InvalidDistributionError(f"n must be >= 2, got {n}")
    if method not in TAU_METHODS:
        raise ValueError(f"method must be one of {TAU_METHODS}, got {method!r}")
    if method == "monte_carlo":
        return tau_n_monte_carlo(n, samples, np.random.default_rng(0) if rng is None else rng)[0]
    if method == "closed_form":
        return 1.0 / ((n - 1) * math.log(2.0))

    # E_zeta ln(1 + zeta / eta) = e^eta E1(eta), leaving a Gamma(n-1) average of E1
    def integrand(eta: float) -> float:
        return math.exp(xlogy(n - 2, eta) - math.lgamma(n - 1)) * exp1(eta)

    value, error = quad(integrand, 0.0, 1.0, limit=200)
    tail, tail_error = quad(integrand, 1.0, np.inf, limit=200)
    logger.debug(f"tau_{n} quadrature error estimate {error + tail_error:.2e}")
    return (value + tail) / math.log(2.0)


def expected_gaussian_bound(
    K: int, nu: float, gamma_db: float, own: np.ndarray, cross: np.ndarray
) -> Tuple[float, float]:
    gamma = db_to_linear(gamma_db)
    values = np.array([gaussian_bound_rate(K, nu, gamma, ChannelDraw(o, tuple(c))) for o, c in zip(own, cross)])
    mean, stderr = _mean_stderr(values)
    return float(mean), float(stderr)

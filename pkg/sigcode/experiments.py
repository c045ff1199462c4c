"""Table builders behind each CLI subcommand and figure"""

import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .config import ExperimentConfig, db_to_linear
from .design import epsilon_hat, optimize_parameters, scheme_sweep, tau_n
from .errors import SupportTooLargeError, UnsupportedConfigurationError
from .inference import CASES, case_distribution, forward_levels, solve_case
from .models import ChannelDraw, DesignSearchSpace, SignatureDistribution
from .optimality import beating_interval, theorem1_check
from .rate import informed_rate_upper, rate_lower_bound, scheme_a_rate, scheme_b_rate
from .smg import (
    column_union_avoid,
    colspan_decomposition,
    optimize_two_user,
    optimum_masking_only,
    span_avoid,
    sum_multiplexing_gain,
)

logger = logging.getLogger(__name__)

SCHEME_EPSILONS = tuple(round(0.01 * i, 2) for i in range(1, 101))
NU_SWEEP_USERS = 4
NU_SWEEP_DB = 60.0
MG_NU_USERS = 10
MG_NU_K = 6
INFER_USERS = 4


@dataclass
class Table:
    """Column names, rows in grid order and an optional single-result summary."""

    columns: List[str]
    rows: List[List[Any]] = field(default_factory=list)
    summary: Optional[Dict[str, Any]] = None
    # JSON output is the summary alone
    single: bool = False

    def records(self) -> List[Dict[str, Any]]:
        return [dict(zip(self.columns, row)) for row in self.rows]


def _from_dicts(rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> Table:
    return Table(columns=list(columns), rows=[[row[c] for c in columns] for row in rows])


def _channel(config: ExperimentConfig, rng: np.random.Generator) -> ChannelDraw:
    if config.own_gain_sq is not None:
        return ChannelDraw(config.own_gain_sq, tuple(config.cross_gains_sq or ()))
    return ChannelDraw.rayleigh(config.n, rng)


def smg_table(config: ExperimentConfig, rng: np.random.Generator) -> Table:
    if config.two_user_optimum:
        K, eps, value = optimize_two_user(nu=config.nu)
        summary = {"K": K, "epsilon": round(eps, 6), "smg": round(value, 6)}
        return Table(columns=list(summary), rows=[list(summary.values())], summary=summary, single=True)
    if config.masking_only_optimum:
        eps, value = optimum_masking_only(config.n)
        summary = {"n": config.n, "epsilon": eps, "smg": value}
        return Table(columns=list(summary), rows=[list(summary.values())], summary=summary, single=True)

    result = sum_multiplexing_gain(config.distribution(), config.n, config.trials, rng)
    return Table(
        columns=["n", "K", "smg", "per_user", "stderr", "method"],
        rows=[[result.n, result.K, result.value, result.per_user, result.stderr, result.method]],
    )


def rate_table(config: ExperimentConfig, rng: np.random.Generator) -> Table:
    dist = config.distribution()
    channel = _channel(config, rng)
    seed = int(rng.integers(2 ** 32))
    table = Table(columns=["gamma_db", "rate", "mg", "ief", "csf", "stderr", "informed_upper"])
    for gamma_db in config.gamma_db_values():
        gamma = db_to_linear(gamma_db)
        breakdown = rate_lower_bound(dist, config.n, channel, gamma, config.mode, config.trials, seed=seed)
        upper = informed_rate_upper(dist, config.n, channel, gamma) if config.mode == "exact" else None
        table.rows.append(
            [gamma_db, breakdown.rate_bits_per_slot, breakdown.mg, breakdown.ief, breakdown.csf, breakdown.stderr, upper]
        )
    return table


def design_table(config: ExperimentConfig, rng: np.random.Generator) -> Table:
    space = DesignSearchSpace(
        K_values=list(config.K_values),
        nu_grid=list(config.nu_grid()),
        epsilon_grid=list(config.epsilon_values),
        gamma_db=config.gamma_db,
        mc_draws=config.mc_draws,
        seed=config.seed,
    )
    result = optimize_parameters(space, config.n)
    table = _from_dicts(result.sweep_table, ["K", "nu", "epsilon", "expected_rate", "stderr"])
    table.summary = {
        "K": result.K_star,
        "nu": result.nu_star,
        "epsilon": result.epsilon_star,
        "expected_rate": result.expected_rate,
        "stderr": result.stderr,
        "tau_n": tau_n(config.n) if config.n >= 2 else None,
    }
    return table


def infer_table(config: ExperimentConfig, rng: np.random.Generator) -> Table:
    """Seeded forward/inverse roundtrips for each case."""
    cases = (config.case,) if config.case is not None else CASES
    n = config.n if config.n >= 2 else INFER_USERS
    table = Table(columns=["case", "draw", "n", "n_recovered", "max_rel_error", "residual"])
    for case in cases:
        dist = case_distribution(case)
        for draw in range(config.infer_draws):
            gains = np.sort(rng.exponential(1.0, size=n - 1))
            obs = forward_levels(gains, dist, config.gamma)
            estimate = solve_case(obs, case)
            error = float(np.max(np.abs(np.array(estimate.gains_sq) - gains) / gains))
            table.rows.append([case, draw, n, estimate.n, error, estimate.residual])
    return table


def optimality_table(config: ExperimentConfig, rng: np.random.Generator) -> Table:
    gammas = [g for g in config.gamma_db_values() if g >= 30.0]
    if not gammas:
        raise UnsupportedConfigurationError("optimality checks need SNR values of at least 30 dB")
    rows = theorem1_check(gammas, config.mc_draws, rng)
    columns = [f.name for f in dataclasses.fields(rows[0])]
    table = _from_dicts([dataclasses.asdict(row) for row in rows], columns)
    binary, quaternary = beating_interval(2), beating_interval(4)
    table.summary = {
        "binary_interval": [binary.lo, binary.hi],
        "quaternary_interval": [quaternary.lo, quaternary.hi],
    }
    return table


def smg_vs_users(config: ExperimentConfig, rng: np.random.Generator) -> Table:
    """K = n, uniform {-1, 1}, with (epsilon = 1/2) and without masking."""
    table = Table(columns=["n", "smg_masked", "smg_unmasked", "stderr_masked", "stderr_unmasked"])
    for n in range(2, config.n_max + 1):
        masked = sum_multiplexing_gain(SignatureDistribution.binary(n, epsilon=0.5), n, config.trials, rng)
        unmasked = sum_multiplexing_gain(SignatureDistribution.binary(n), n, config.trials, rng)
        table.rows.append([n, masked.value, unmasked.value, masked.stderr, unmasked.stderr])
    return table


def scheme_rates(config: ExperimentConfig, rng: np.random.Generator) -> Table:
    rows = scheme_sweep(config.gamma_db_values(), SCHEME_EPSILONS, config.mc_draws, rng)
    return _from_dicts(
        rows, ["gamma_db", "rate_a", "stderr_a", "eps_a", "rate_b", "stderr_b", "eps_b", "diff_stderr"]
    )


def best_epsilon(config: ExperimentConfig, rng: np.random.Generator) -> Table:
    table = Table(columns=["gamma_db", "epsilon_hat"])
    for gamma_db in config.gamma_db_values():
        table.rows.append([gamma_db, epsilon_hat(gamma_db, config.mc_draws, rng)])
    return table


def scheme_gains(config: ExperimentConfig, rng: np.random.Generator) -> Table:
    table = Table(columns=["epsilon", "mg_a", "mg_b", "ief_a", "ief_b"])
    for eps in SCHEME_EPSILONS:
        a = scheme_a_rate(eps, 1.0, 1.0, 1.0, nu=config.nu)
        b = scheme_b_rate(eps, 1.0, 1.0, 1.0)
        table.rows.append([eps, a.mg, b.mg, a.ief, b.ief])
    return table


def nu_sweep(config: ExperimentConfig, rng: np.random.Generator) -> Table:
    """Expected rate over (nu, K) at four users and 60 dB without masking."""
    space = DesignSearchSpace(
        K_values=list(config.K_values),
        nu_grid=list(config.nu_grid()),
        epsilon_grid=[1.0],
        gamma_db=NU_SWEEP_DB,
        mc_draws=config.mc_draws,
        seed=config.seed,
    )
    result = optimize_parameters(space, NU_SWEEP_USERS)
    table = _from_dicts(result.sweep_table, ["nu", "K", "expected_rate", "stderr"])
    table.summary = {"K": result.K_star, "nu": result.nu_star, "expected_rate": result.expected_rate}
    return table


def mg_vs_nu(config: ExperimentConfig, rng: np.random.Generator) -> Table:
    """Span avoidance and MG over nu at ten users and K = 6, unmasked."""
    table = Table(columns=["nu", "p_not_in_col_union", "span_avoid", "stderr", "mg"])
    for nu in config.nu_grid():
        dist = SignatureDistribution.binary(MG_NU_K, nu=nu)
        first = column_union_avoid(dist, MG_NU_USERS)
        try:
            _, second = colspan_decomposition(dist, MG_NU_USERS)
            avoid, stderr = first - second, 0.0
        except SupportTooLargeError:
            avoid, stderr, _ = span_avoid(dist, MG_NU_USERS, config.trials, rng)
        table.rows.append([nu, first, avoid, stderr, avoid / MG_NU_K])
    return table


FIGURE_BUILDERS: Dict[str, Callable[[ExperimentConfig, np.random.Generator], Table]] = {
    "smg-vs-users": smg_vs_users,
    "scheme-rates": scheme_rates,
    "best-epsilon": best_epsilon,
    "scheme-gains": scheme_gains,
    "nu-sweep": nu_sweep,
    "mg-vs-nu": mg_vs_nu,
}

COMMAND_BUILDERS: Dict[str, Callable[[ExperimentConfig, np.random.Generator], Table]] = {
    "smg": smg_table,
    "rate": rate_table,
    "design": design_table,
    "infer": infer_table,
    "optimality": optimality_table,
}


def build_table(config: ExperimentConfig) -> Table:
    """Run the configured command with a generator seeded from config.seed."""
    rng = np.random.default_rng(config.seed)
    if config.command == "figures":
        builder = FIGURE_BUILDERS[config.figure]
    else:
        builder = COMMAND_BUILDERS[config.command]
    logger.info(f"Building {config.command}{' ' + config.figure if config.figure else ''} (seed {config.seed})")
    table = builder(config, rng)
    logger.info(f"Built {len(table.rows)} row(s)")
    return table

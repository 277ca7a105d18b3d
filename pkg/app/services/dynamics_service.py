"""Expected payoffs of the optional public goods game with fractional punishment,
the replicator vector field and its closed-form derivatives.

The ``*_terms`` kernels are written with elementwise arithmetic only, so they
accept plain floats (used inside the time-stepping loops) as well as numpy
arrays (used to evaluate whole trajectories at once).
"""

import logging
import math

import numpy as np

from app.core.config import settings
from app.core.exceptions import DomainError, ResourceLimitError
from app.schemas.game import GameParams, PayoffVector, SimplexState, Strategy

logger = logging.getLogger(__name__)


def ab_terms(z, n: int):
    """a, b and their z-derivatives from the polynomial sums (regular at z = 1)."""
    a = 0.0
    b = 0.0
    da = 0.0
    db = 0.0
    power = 1.0
    previous = 0.0
    for k in range(n):
        a = a + power
        if k <= n - 2:
            b = b + (n - 1 - k) * power
        if k >= 1:
            da = da + k * previous
            if k <= n - 2:
                db = db + k * (n - 1 - k) * previous
        previous = power
        power = power * z
    return a / n, b / n, da / n, db / n


def payoff_terms(x, z, v, n: int, r: float, sigma: float):
    a, b, _, _ = ab_terms(z, n)
    z_pow = z ** (n - 1)
    p_x = sigma * z_pow + r * a + r * x * b + (1.0 - r) * z_pow - 1.0
    p_y = sigma * z_pow + (1.0 - v) * r * x * b
    return p_x, p_y, sigma


def field_terms(x, y, z, v, n: int, r: float, sigma: float):
    p_x, p_y, p_z = payoff_terms(x, z, v, n, r, sigma)
    # average normalised by x+y+z so that the components sum to zero off the simplex too
    p_bar = (x * p_x + y * p_y + z * p_z) / (x + y + z)
    return x * (p_x - p_bar), y * (p_y - p_bar), z * (p_z - p_bar)


def jacobian_terms(x, y, z, v, n: int, r: float, sigma: float):
    a, b, da, db = ab_terms(z, n)
    z_pow = z ** (n - 1)
    dz_pow = (n - 1) * z ** (n - 2) if n > 2 else 1.0

    p_x = sigma * z_pow + r * a + r * x * b + (1.0 - r) * z_pow - 1.0
    p_y = sigma * z_pow + (1.0 - v) * r * x * b
    p_z = sigma
    payoffs = (p_x, p_y, p_z)

    # rows: payoff, columns: d/dx, d/dy, d/dz
    dp = (
        (r * b, 0.0, (sigma + 1.0 - r) * dz_pow + r * da + r * x * db),
        ((1.0 - v) * r * b, 0.0, sigma * dz_pow + (1.0 - v) * r * x * db),
        (0.0, 0.0, 0.0),
    )
    w = (x, y, z)
    total = x + y + z
    p_bar = (x * p_x + y * p_y + z * p_z) / total
    dp_bar = tuple(
        (payoffs[k] + w[0] * dp[0][k] + w[1] * dp[1][k] + w[2] * dp[2][k] - p_bar) / total
        for k in range(3)
    )
    return tuple(
        tuple(
            (payoffs[i] - p_bar if i == k else 0.0) + w[i] * (dp[i][k] - dp_bar[k])
            for k in range(3)
        )
        for i in range(3)
    )


def sensitivity_terms(x, y, z, n: int, r: float):
    _, b, _, _ = ab_terms(z, n)
    dp_y = -r * x * b
    dp_bar = y * dp_y / (x + y + z)
    return -x * dp_bar, y * (dp_y - dp_bar), -z * dp_bar


def field_array(states: np.ndarray, controls, params: GameParams) -> np.ndarray:
    """Vector field at every row of ``states`` (shape (M, 3))."""
    x, y, z = states[:, 0], states[:, 1], states[:, 2]
    terms = field_terms(x, y, z, controls, params.n, params.r, params.sigma)
    return np.stack(np.broadcast_arrays(*terms), axis=-1)


def jacobian_array(states: np.ndarray, controls, params: GameParams) -> np.ndarray:
    """Jacobians at every row of ``states``, shape (M, 3, 3)."""
    x, y, z = states[:, 0], states[:, 1], states[:, 2]
    terms = jacobian_terms(x, y, z, controls, params.n, params.r, params.sigma)
    flat = np.broadcast_arrays(x, *(entry for row in terms for entry in row))[1:]
    return np.stack(flat, axis=-1).reshape(len(x), 3, 3)


def sensitivity_array(states: np.ndarray, params: GameParams) -> np.ndarray:
    x, y, z = states[:, 0], states[:, 1], states[:, 2]
    terms = sensitivity_terms(x, y, z, params.n, params.r)
    return np.stack(np.broadcast_arrays(*terms), axis=-1)


def _check_control(v: float) -> None:
    if not 0.0 <= v <= 1.0:
        raise DomainError(f"punishment fraction must lie in [0, 1], got {v}")


def helper_ab(z: float, n: int) -> tuple[float, float]:
    if not 0.0 <= z <= 1.0:
        raise DomainError(f"loner frequency must lie in [0, 1], got {z}")
    if n < 2:
        raise DomainError(f"group size must be at least 2, got {n}")
    a, b, _, _ = ab_terms(z, n)
    return a, b


def expected_payoffs(w: SimplexState, v: float, params: GameParams) -> PayoffVector:
    _check_control(v)
    p_x, p_y, p_z = payoff_terms(w.x, w.z, v, params.n, params.r, params.sigma)
    return PayoffVector(
        p_x=p_x,
        p_y=p_y,
        p_z=p_z,
        p_bar=w.x * p_x + w.y * p_y + w.z * p_z,
    )


def group_payoff(
    strategy: Strategy,
    n_c: int,
    n_d: int,
    v: float,
    params: GameParams,
) -> float:
    """Payoff of a focal player whose own strategy is counted in (n_c, n_d)."""
    _check_control(v)
    if strategy == Strategy.LONER:
        return params.sigma
    if n_c < 0 or n_d < 0 or n_c + n_d > params.n:
        raise DomainError(f"invalid group composition n_c={n_c}, n_d={n_d} for n={params.n}")
    if strategy == Strategy.COOPERATOR and n_c < 1:
        raise DomainError("a cooperator must be counted in n_c")
    if strategy == Strategy.DEFECTOR and n_d < 1:
        raise DomainError("a defector must be counted in n_d")

    participants = n_c + n_d
    if participants == 1:
        # no game without co-participants
        return params.sigma
    share = params.r * n_c / participants
    if strategy == Strategy.COOPERATOR:
        return share - 1.0
    # punished defectors get 0, averaged over the punished fraction
    return (1.0 - v) * share


def expected_payoff_bruteforce(
    w: SimplexState,
    v: float,
    params: GameParams,
    strategy: Strategy,
) -> float:
    if params.n > settings.BRUTEFORCE_MAX_N:
        raise ResourceLimitError(
            f"enumeration capped at n={settings.BRUTEFORCE_MAX_N}, got n={params.n}"
        )
    _check_control(v)

    co_players = params.n - 1
    total = 0.0
    for n_c in range(co_players + 1):
        for n_d in range(co_players - n_c + 1):
            n_l = co_players - n_c - n_d
            probability = (
                math.comb(co_players, n_c)
                * math.comb(co_players - n_c, n_d)
                * w.x**n_c
                * w.y**n_d
                * w.z**n_l
            )
            if probability == 0.0:
                continue
            if strategy == Strategy.COOPERATOR:
                payoff = group_payoff(strategy, n_c + 1, n_d, v, params)
            elif strategy == Strategy.DEFECTOR:
                payoff = group_payoff(strategy, n_c, n_d + 1, v, params)
            else:
                payoff = params.sigma
            total += probability * payoff
    return total


def vector_field(w: SimplexState, v: float, params: GameParams) -> np.ndarray:
    _check_control(v)
    return np.array(field_terms(w.x, w.y, w.z, v, params.n, params.r, params.sigma))


def vector_field_jacobian(w: SimplexState, v: float, params: GameParams) -> np.ndarray:
    _check_control(v)
    return np.array(jacobian_terms(w.x, w.y, w.z, v, params.n, params.r, params.sigma))


def control_sensitivity(w: SimplexState, params: GameParams) -> np.ndarray:
    return np.array(sensitivity_terms(w.x, w.y, w.z, params.n, params.r))


def critical_punishment(params: GameParams) -> float:
    """Smallest constant punishment that makes full cooperation an attractor.

    Solves (1 - v) r (n - 1) / n < r - 1 at x = 1, i.e.
    v_c = 1 - n (r - 1) / (r (n - 1)) = (n - r) / (r (n - 1)).
    """
    v_c = (params.n - params.r) / (params.r * (params.n - 1))
    return min(max(v_c, 0.0), 1.0)

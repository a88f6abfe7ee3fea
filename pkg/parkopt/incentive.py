"""
Incentive-based load shifting.

A user offered price :code:`p` moves the fraction
:code:`gamma * p / (d + 1) ** alpha` of its inelastic load forward by
:code:`d` slots, up to the cap :code:`eta`.  The price that induces a
shift is the price of the slot the load moves to.
"""
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar

from parkopt.errors import (
    DegenerateDenominator,
    InsufficientData,
    InvalidConfig,
    RankDeficient,
    ShareMismatch,
)

Delays = Union[int, Sequence[int], np.ndarray]


@dataclass(frozen=True, eq=False)
class ShiftModel:
    """
    Shifting parameters per user plus the park-wide cap and window.
    :code:`beta` are the users' consumption shares, when known.
    """

    alpha: np.ndarray
    gamma: np.ndarray
    beta: Optional[np.ndarray] = None
    eta: float = 0.15
    window: int = 4

    def __post_init__(self):
        alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float))
        gamma = np.atleast_1d(np.asarray(self.gamma, dtype=float))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "gamma", gamma)
        if self.beta is not None:
            object.__setattr__(
                self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=float))
            )

        if alpha.shape != gamma.shape:
            raise InvalidConfig("alpha and gamma differ in length", field="shift")
        if np.any(alpha <= 0):
            raise InvalidConfig("must be positive", field="alpha")
        if np.any(gamma < 0):
            raise InvalidConfig("must be nonnegative", field="gamma")
        if not 0 <= self.eta < 1:
            raise InvalidConfig(f"{self.eta} is not in [0, 1)", field="eta")
        if self.window < 1:
            raise InvalidConfig("must be at least one slot", field="window")

    @property
    def n_users(self) -> int:
        return len(self.alpha)

    def shares(self) -> np.ndarray:
        if self.beta is None:
            return np.full(self.n_users, 1.0 / self.n_users)
        return self.beta

    def slopes(self, delays: Delays) -> np.ndarray:
        """
        Per-user derivative of the shifted fraction with respect to
        the price, summed over `delays`.
        """
        d = np.atleast_1d(np.asarray(delays, dtype=float))
        if d.size == 0:
            return np.zeros(self.n_users)
        return (
            self.gamma[:, None] / (d[None, :] + 1.0) ** self.alpha[:, None]
        ).sum(axis=1)

    def profile(self, p, delays: Delays) -> np.ndarray:
        """
        Fractions of each user's load moved by each delay, shape
        (users, delays).  `p` is one price, or one price per delay for
        the slots the load moves to.  Every entry and every row total
        stay within :code:`eta`.
        """
        d = np.atleast_1d(np.asarray(delays, dtype=float))
        if d.size == 0:
            return np.zeros((self.n_users, 0))
        p = np.clip(np.broadcast_to(np.asarray(p, dtype=float), d.shape), 0.0, None)
        raw = self.gamma[:, None] * p[None, :] / (d[None, :] + 1.0) ** self.alpha[:, None]
        raw = np.minimum(raw, self.eta)
        total = raw.sum(axis=1)
        scale = np.ones_like(total)
        over = total > self.eta
        scale[over] = self.eta / total[over]
        return raw * scale[:, None]


@dataclass(frozen=True, eq=False)
class ShiftMatrix:
    """
    Energy moved from slot t (rows) to slot t' (columns).
    """

    values: np.ndarray
    residual_norm: float = 0.0
    kernel: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidConfig("shift matrix must be square", field="A")
        if np.any(values < 0):
            raise InvalidConfig("shifted energy must be nonnegative", field="A")
        object.__setattr__(self, "values", values)

    @property
    def horizon(self) -> int:
        return self.values.shape[0]

    def within_cap(self, x_il: np.ndarray, eta: float, atol: float = 1e-9) -> bool:
        return bool(np.all(self.values.sum(axis=1) <= eta * x_il + atol))


def _matrix(a) -> np.ndarray:
    return a.values if isinstance(a, ShiftMatrix) else np.asarray(a, dtype=float)


def shift_fraction(m: ShiftModel, user: int, p: float, d: int) -> float:
    raw = m.gamma[user] * p / (d + 1.0) ** m.alpha[user]
    return float(min(raw, m.eta))


def integral_shift(m: ShiftModel, beta, p: float, d: int) -> float:
    beta = np.asarray(beta, dtype=float)
    if abs(beta.sum() - 1.0) > 1e-9:
        raise ShareMismatch(f"consumption shares sum to {beta.sum()}, not 1")
    fractions = [shift_fraction(m, i, p, d) for i in range(m.n_users)]
    return float(np.dot(beta, fractions))


def shifted_amount(x_il: float, p: float, d: int, m: ShiftModel) -> float:
    if d < 1 or d > m.window:
        return 0.0
    return float(x_il) * integral_shift(m, m.shares(), p, d)


def demand_delta(a, t: int) -> float:
    values = _matrix(a)
    inbound = values[:, t].sum() - values[t, t]
    outbound = values[t, :].sum() - values[t, t]
    return float(inbound - outbound)


def _delay_bases(x_il, prices, width: int):
    """
    For every delay d in 1..width, the load leaving each slot t times
    the price of slot t + d, shape (T - d,).
    """
    x_il = np.asarray(x_il, dtype=float)
    prices = np.asarray(prices, dtype=float)
    horizon = len(x_il)
    return [x_il[: horizon - d] * prices[d:horizon] for d in range(1, width + 1)]


def _delay_design(bases, horizon: int) -> np.ndarray:
    """
    Column d-1 maps the delay-d kernel onto every slot's demand
    change: energy arriving from t-d minus energy leaving for t+d.
    """
    design = np.zeros((horizon, len(bases)))
    for d, base in enumerate(bases, start=1):
        design[d:, d - 1] += base
        design[: horizon - d, d - 1] -= base
    return design


def solve_shift_matrix(
    j, prices, x_il, window: int, ridge: float = 1e-8
) -> ShiftMatrix:
    """
    Recovers the shift matrix from the per-slot demand changes.

    The shifted energy is modelled as
    :code:`A[t, t + d] = x_il[t] * prices[t + d] * h[d]` for a kernel
    :code:`h` over the delays in the window, which turns the
    demand-change equations into an overdetermined linear system in
    :code:`h`.  The kernel is solved with ridge-regularized normal
    equations and projected onto the nonnegative orthant.

    :raises RankDeficient: if the kernel is not identifiable from the data.
    """
    j = np.asarray(j, dtype=float)
    horizon = len(j)
    if horizon < 2:
        raise RankDeficient("at least two slots are required")

    width = min(int(window), horizon - 1)
    bases = _delay_bases(x_il, prices, width)
    design = _delay_design(bases, horizon)

    if np.linalg.matrix_rank(design) < width:
        raise RankDeficient(
            f"{horizon} slots do not determine {width} delay weights"
        )

    normal = design.T @ design + ridge * np.eye(width)
    kernel = np.linalg.solve(normal, design.T @ j)
    kernel = np.clip(kernel, 0.0, None)

    values = np.zeros((horizon, horizon))
    for d, base in enumerate(bases, start=1):
        rows = np.arange(horizon - d)
        values[rows, rows + d] = base * kernel[d - 1]

    residual = float(np.linalg.norm(design @ kernel - j))
    return ShiftMatrix(values=values, residual_norm=residual, kernel=kernel)


def _delay_weights(values, load, prices, ridge):
    horizon = values.shape[0]
    delays, weights = [], []
    for d, base in enumerate(_delay_bases(load, prices, horizon - 1), start=1):
        rows = np.arange(horizon - d)
        den = float(np.sum(base ** 2))
        if den <= 0:
            continue
        y = float(np.sum(values[rows, rows + d] * base)) / (den + ridge)
        if y > 0:
            delays.append(d)
            weights.append(y)
    return np.asarray(delays, dtype=float), np.asarray(weights)


def fit_shift_models(
    a,
    prices,
    x_il,
    ridge: float = 1e-8,
    eta: float = 0.15,
    window: int = 4,
) -> ShiftModel:
    """
    Estimates willingness to shift from observed shift matrices.

    Pass one matrix with the aggregate load to get a single aggregate
    model, or a stack of per-user matrices (users, T, T) with per-user
    loads (users, T) to get one model per user.  For each user the
    per-delay weight is solved from its normal equation, then
    :code:`ln gamma` and :code:`alpha` come from a least-squares line
    through :code:`ln weight` against :code:`ln(d + 1)`.

    :raises InsufficientData: if a user shows fewer than two delays.
    """
    if isinstance(a, ShiftMatrix) or np.asarray(_matrix(a)).ndim == 2:
        matrices = [_matrix(a)]
        loads = [np.asarray(x_il, dtype=float)]
    else:
        matrices = [_matrix(m) for m in a]
        loads = [np.asarray(x, dtype=float) for x in x_il]
    prices = np.asarray(prices, dtype=float)

    alphas, gammas = [], []
    for user, (values, load) in enumerate(zip(matrices, loads)):
        delays, weights = _delay_weights(values, load, prices, ridge)
        if len(np.unique(delays)) < 2:
            raise InsufficientData(
                f"user {user} shows {len(delays)} shift delays, need 2"
            )
        design = np.column_stack([np.ones_like(delays), -np.log(delays + 1.0)])
        (log_gamma, alpha), *_ = np.linalg.lstsq(design, np.log(weights), rcond=None)
        alphas.append(alpha)
        gammas.append(np.exp(log_gamma))

    totals = np.array([load.sum() for load in loads])
    beta = totals / totals.sum() if totals.sum() > 0 else None
    return ShiftModel(
        alpha=np.asarray(alphas),
        gamma=np.asarray(gammas),
        beta=beta,
        eta=eta,
        window=window,
    )


def incentive_objective(p, x, a, b, slopes, eta) -> float:
    """
    Incentive terms of the slot objective as a function of the price,
    with every user's shifted fraction capped at `eta`.
    """
    f = np.minimum(slopes * p, eta)
    return float(
        np.sum(p * x * f - a * x ** 2 * (1.0 - f) ** 2 + b * x * (1.0 - f))
    )


def incentive_first_order_residual(p, x, a, b, slopes) -> float:
    return float(
        np.sum(
            2.0 * x * slopes * p
            + 2.0 * a * x ** 2 * slopes * (1.0 - slopes * p)
            - b * x * slopes
        )
    )


def optimal_incentive_price(
    x_i,
    a,
    b,
    m: ShiftModel,
    delays: Delays,
    p_cap: Optional[float] = None,
) -> float:
    """
    Closed-form incentive price for loads `x_i` offered shifts by
    `delays`, clamped to :code:`[0, p_cap]`.  When a user's shifted
    fraction would exceed the cap at that price, the capped objective
    is minimized with a bounded golden-section search instead.

    :raises DegenerateDenominator: if no user responds to the price.
    """
    x = np.asarray(x_i, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    slopes = m.slopes(delays)

    num = float(np.sum(x * slopes * (2.0 * a * x - b)))
    den = float(np.sum(x * slopes * (2.0 * a * x * slopes - 2.0)))
    if abs(den) < 1e-12:
        raise DegenerateDenominator(
            "no user responds to the incentive price"
        )

    upper = np.inf if p_cap is None else float(p_cap)
    p = min(max(num / den, 0.0), upper)

    if np.all(slopes * p <= m.eta):
        return p

    if not np.isfinite(upper):
        responsive = slopes > 0
        upper = float(np.max(m.eta / slopes[responsive]))

    def objective(price):
        return incentive_objective(price, x, a, b, slopes, m.eta)

    found = minimize_scalar(
        objective, bounds=(0.0, upper), method="bounded", options={"xatol": 1e-10}
    )
    candidates = [0.0, upper, float(found.x)]
    return min(candidates, key=lambda price: (objective(price), price))


def incentive_cost(prices, amounts) -> float:
    return float(np.sum(np.asarray(prices, dtype=float) * np.asarray(amounts, dtype=float)))


def iter_delays(t: int, horizon: int, window: int) -> Iterable[int]:
    return range(1, min(window, horizon - 1 - t) + 1)

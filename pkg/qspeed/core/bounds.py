"""
Quantum speed limits on observables.

The observable is split into coherent (off-diagonal) and incoherent
(diagonal) parts in the eigenbasis of rho. Together with the coherent and
incoherent quantum Fisher information they give the sandwich

    max(b_CI^-, b_IC^-) <= |a_dot| <= min(b_CI^+, b_IC^+),
    b_mn^(+/-) = |a_dot_m| +/- Delta A_n sqrt(I^F_n).
"""

import logging
from dataclasses import asdict, dataclass
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .evolution import Scenario, rho_dot
from .parallel import map_ordered
from .quantum import (
    DEFAULT_TOL_DEGEN,
    DensityMatrix,
    EigenDecomposition,
    Operator,
    eig_hermitian,
    expectation,
)

logger = logging.getLogger(__name__)

EPS_P = 1e-12
PURITY_TOL = 1e-8
SANDWICH_TOL = 1e-9
GOLDEN_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class CoherentIncoherentSplit:
    a_c_operator: Operator
    a_i_operator: Operator
    delta_a_c: float
    delta_a_i: float


@dataclass(frozen=True)
class QfiPair:
    qfi_c: float
    qfi_i: float


@dataclass(frozen=True)
class BoundsRecord:
    l: float
    a: float
    a_dot: float
    a_dot_c: float
    a_dot_i: float
    b_ci_plus: float
    b_ci_minus: float
    b_ic_plus: float
    b_ic_minus: float
    lower: float
    upper: float
    mt: Optional[float]
    pure_upper: Optional[float]
    qfi_c: float
    qfi_i: float
    delta_ac: float
    delta_ai: float
    purity: float

    @property
    def speed(self) -> float:
        return abs(self.a_dot)

    def within_sandwich(self, tol: float = SANDWICH_TOL) -> bool:
        return self.lower - tol <= self.speed <= self.upper + tol

    def within_components(self, tol: float = SANDWICH_TOL) -> bool:
        return abs(self.a_dot_c) <= self.delta_ac * np.sqrt(self.qfi_c) + tol and abs(
            self.a_dot_i
        ) <= self.delta_ai * np.sqrt(self.qfi_i) + tol

    def as_dict(self) -> dict:
        return asdict(self)


def _moments_delta(diag_weights: np.ndarray, x: np.ndarray) -> float:
    mean = float(np.sum(diag_weights * np.real(np.diag(x))))
    second = float(np.sum(diag_weights * np.real(np.diag(x @ x))))
    return float(np.sqrt(max(second - mean**2, 0.0)))


def split_observable(a: Operator, eig: EigenDecomposition) -> CoherentIncoherentSplit:
    """Coherent/incoherent parts of ``a`` in the eigenbasis held by ``eig``"""
    v = np.asarray(eig.eigenvectors)
    p = np.clip(eig.eigenvalues, 0.0, None)
    rotated = v.conj().T @ np.asarray(a.entries) @ v
    incoherent = np.diag(np.diag(rotated))
    coherent = rotated - incoherent
    return CoherentIncoherentSplit(
        a_c_operator=Operator(v @ coherent @ v.conj().T),
        a_i_operator=Operator(v @ incoherent @ v.conj().T),
        delta_a_c=_moments_delta(p, coherent),
        delta_a_i=_moments_delta(p, incoherent),
    )


def qfi_components(eig: EigenDecomposition, rho_dot: np.ndarray, eps_p: float = EPS_P) -> QfiPair:
    """Coherent and incoherent quantum Fisher information of rho_dot"""
    v = np.asarray(eig.eigenvectors)
    p = np.asarray(eig.eigenvalues)
    r = v.conj().T @ np.asarray(rho_dot) @ v
    pair_sum = p[:, None] + p[None, :]
    magnitude = np.abs(r) ** 2
    off_diagonal = ~np.eye(len(p), dtype=bool) & (pair_sum > eps_p)
    qfi_c = 2.0 * float(np.sum(magnitude[off_diagonal] / pair_sum[off_diagonal]))
    populated = p > eps_p
    qfi_i = float(np.sum(np.real(np.diag(r))[populated] ** 2 / p[populated]))
    return QfiPair(qfi_c, qfi_i)


def _trace_real(x: np.ndarray, y: np.ndarray) -> float:
    return float(np.real(np.sum(x * y.T)))


def bounds_at(
    rho: DensityMatrix,
    rho_dot: np.ndarray,
    a_obs: Operator,
    h: Optional[Operator] = None,
    l: float = 0.0,
    tol_degen: float = DEFAULT_TOL_DEGEN,
    eps_p: float = EPS_P,
) -> BoundsRecord:
    """Every speed and bound ingredient at one point of the evolution"""
    eig = eig_hermitian(rho, tol_degen, observable=a_obs)
    split = split_observable(a_obs, eig)
    qfi = qfi_components(eig, rho_dot, eps_p)

    a = expectation(rho, a_obs)
    a_dot = _trace_real(rho_dot, np.asarray(a_obs.entries))
    a_dot_c = _trace_real(rho_dot, np.asarray(split.a_c_operator.entries))
    a_dot_i = _trace_real(rho_dot, np.asarray(split.a_i_operator.entries))

    coherent_term = split.delta_a_c * np.sqrt(qfi.qfi_c)
    incoherent_term = split.delta_a_i * np.sqrt(qfi.qfi_i)
    b_ci_plus = abs(a_dot_c) + incoherent_term
    b_ci_minus = abs(a_dot_c) - incoherent_term
    b_ic_plus = abs(a_dot_i) + coherent_term
    b_ic_minus = abs(a_dot_i) - coherent_term

    mt = None
    if h is not None:
        mt = 2.0 * _spread(rho, a_obs) * _spread(rho, h)

    rho_purity = rho.purity()
    pure_upper = None
    if rho_purity >= 1.0 - PURITY_TOL:
        pure_upper = float(np.sqrt(max(a * (1.0 - a), 0.0) * qfi.qfi_c))

    return BoundsRecord(
        l=float(l),
        a=a,
        a_dot=a_dot,
        a_dot_c=a_dot_c,
        a_dot_i=a_dot_i,
        b_ci_plus=b_ci_plus,
        b_ci_minus=b_ci_minus,
        b_ic_plus=b_ic_plus,
        b_ic_minus=b_ic_minus,
        lower=max(b_ci_minus, b_ic_minus),
        upper=min(b_ci_plus, b_ic_plus),
        mt=mt,
        pure_upper=pure_upper,
        qfi_c=qfi.qfi_c,
        qfi_i=qfi.qfi_i,
        delta_ac=split.delta_a_c,
        delta_ai=split.delta_a_i,
        purity=rho_purity,
    )


def _spread(rho: DensityMatrix, x: Operator) -> float:
    entries = np.asarray(x.entries)
    mean = expectation(rho, x)
    second = _trace_real(np.asarray(rho.entries), entries @ entries)
    return float(np.sqrt(max(second - mean**2, 0.0)))


def bounds_over(
    scenario: Scenario,
    a_obs: Operator,
    l_grid: Sequence[float],
    h: Optional[Operator] = None,
    method: str = "auto",
    workers: int = 1,
) -> List[BoundsRecord]:
    """BoundsRecord for every grid point, ordered by l"""

    def at(l: float) -> BoundsRecord:
        return bounds_at(scenario.state_at(l), rho_dot(scenario, l, method), a_obs, h, l=l)

    logger.debug("Computing bounds for %s on %d points", scenario.tag or "scenario", len(l_grid))
    return map_ordered(at, [float(l) for l in l_grid], workers)


def speed_function(scenario: Scenario, a_obs: Operator, method: str = "auto") -> Callable:
    """|a_dot(l)| as a function of l"""
    entries = np.asarray(a_obs.entries)
    return lambda l: abs(_trace_real(rho_dot(scenario, l, method), entries))


def refine_maximum(
    grid: Sequence[float],
    values: Sequence[float],
    evaluate: Optional[Callable[[float], float]] = None,
    tol: float = GOLDEN_TOL,
) -> Tuple[float, float]:
    """
    Grid argmax refined by golden-section search on the bracketing interval

    Ties go to the smaller l. Without ``evaluate`` the grid maximum is returned.
    """
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    if grid.size == 0:
        raise ValueError("cannot take the maximum of an empty record list")
    best = int(np.argmax(values))
    l_best, v_best = float(grid[best]), float(values[best])
    if evaluate is None or grid.size < 2:
        return l_best, v_best

    lo = float(grid[max(best - 1, 0)])
    hi = float(grid[min(best + 1, grid.size - 1)])

    def negative(x: float) -> float:
        return -evaluate(x)

    try:
        if 0 < best < grid.size - 1:
            result = minimize_scalar(
                negative, bracket=(lo, l_best, hi), method="golden", options={"xtol": tol}
            )
        else:
            raise ValueError("maximum on the grid edge")
    except ValueError:
        result = minimize_scalar(
            negative, bounds=(lo, hi), method="bounded", options={"xatol": tol}
        )
    l_ref = float(result.x)
    v_ref = -float(result.fun)
    if lo <= l_ref <= hi and v_ref > v_best:
        return l_ref, v_ref
    return l_best, v_best


def max_speed(
    records: Sequence[BoundsRecord], evaluate: Optional[Callable[[float], float]] = None
) -> Tuple[float, float]:
    """(l_star, max |a_dot|) over the records, refined with ``evaluate`` when given"""
    if not records:
        raise ValueError("cannot take the maximum of an empty record list")
    return refine_maximum([r.l for r in records], [r.speed for r in records], evaluate)


def max_bound(
    records: Sequence[BoundsRecord], evaluate: Optional[Callable[[float], float]] = None
) -> Tuple[float, float]:
    """(l, max upper bound); uses the pure-state bound where it is defined"""
    if not records:
        raise ValueError("cannot take the maximum of an empty record list")
    values = [r.pure_upper if r.pure_upper is not None else r.upper for r in records]
    return refine_maximum([r.l for r in records], values, evaluate)


def bound_function(scenario: Scenario, a_obs: Operator, method: str = "auto") -> Callable:
    """The bound maximized by max_bound as a function of l"""

    def evaluate(l: float) -> float:
        record = bounds_at(scenario.state_at(l), rho_dot(scenario, l, method), a_obs, l=l)
        return record.pure_upper if record.pure_upper is not None else record.upper

    return evaluate

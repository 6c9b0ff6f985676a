"""Correlations, conditional expectations, CHSH combinations and reference bounds.

Two independent exact routes exist on purpose: :func:`correlate` sums directly
over (state, slot) with the model's generators, while
:func:`correlate_via_table` sums over a tabulated joint distribution and never
calls a generator. Tests cross-check the two.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from math import fsum, sqrt, cos
from typing import Callable, Hashable, Mapping

import numpy as np

from .density import JointTable
from .errors import StationMismatchError, UnsupportedSizeError, ZeroTrialsError
from .model import LocalModel, Setting, Station, evaluate_outcome
from .util import fmt12, stable_seed

BOUND_TOL = 1e-9


@dataclass(frozen=True)
class CorrelationReport:
    """Pair correlation, one-sided marginals and per-state conditionals."""

    setting_a: Setting
    setting_b: Setting
    e_ab: float
    marginal_a: float
    marginal_b: float
    cond_a: Mapping[Hashable, float]
    cond_b: Mapping[Hashable, float]
    method: str
    trials: int
    std_error: float

    def to_dict(self) -> dict:
        return {
            "a": self.setting_a.angle,
            "b": self.setting_b.angle,
            "e_ab": self.e_ab,
            "marginal_a": self.marginal_a,
            "marginal_b": self.marginal_b,
            "cond_a": {str(k): v for k, v in self.cond_a.items()},
            "cond_b": {str(k): v for k, v in self.cond_b.items()},
            "method": self.method,
            "trials": self.trials,
            "std_error": self.std_error,
        }


@dataclass(frozen=True)
class ChshResult:
    """Four pair correlations combined as e(a,b) - e(a,b') + e(a',b) + e(a',b')."""

    settings: tuple[Setting, Setting, Setting, Setting]
    correlations: tuple[float, float, float, float]
    s_value: float
    local_bound: float
    within_local_bound: bool

    def __post_init__(self):
        e = self.correlations
        combo = e[0] - e[1] + e[2] + e[3]
        if abs(self.s_value - combo) > 1e-12:
            raise ValueError("CHSH value does not match its four correlations")
        if abs(self.s_value) > 4.0 + 1e-12:
            raise ValueError("CHSH value outside [-4, 4]")

    def to_dict(self) -> dict:
        a, ap, b, bp = self.settings
        return {
            "a": a.angle,
            "aprime": ap.angle,
            "b": b.angle,
            "bprime": bp.angle,
            "correlations": list(self.correlations),
            "s_value": self.s_value,
            "local_bound": self.local_bound,
            "within_local_bound": self.within_local_bound,
        }


def _check_pair(a: Setting, b: Setting) -> None:
    if a.station is not Station.S1:
        raise StationMismatchError("first setting must be S1-typed")
    if b.station is not Station.S2:
        raise StationMismatchError("second setting must be S2-typed")


def conditional_table(
    model: LocalModel, setting: Setting, station_seed: int | None = None
) -> dict[Hashable, float]:
    """Exact per-state conditional expectation E{outcome | state} at one setting."""
    station = setting.station
    return {
        lam: fsum(
            model.grid.weight(m)
            * evaluate_outcome(model, station, setting, lam, m, station_seed)
            for m in model.grid.slots
        )
        for lam in model.source.states
    }


def _outcome_matrices(model: LocalModel, a: Setting, b: Setting):
    states = model.source.states
    slots = list(model.grid.slots)
    A = [[evaluate_outcome(model, Station.S1, a, lam, m) for m in slots] for lam in states]
    B = [[evaluate_outcome(model, Station.S2, b, lam, m) for m in slots] for lam in states]
    return A, B


def correlate(
    model: LocalModel,
    a: Setting,
    b: Setting,
    method: str = "exact",
    trials: int = 0,
    seed: int = 0,
) -> CorrelationReport:
    """Pair statistics for one setting pair.

    ``exact`` performs the full weighted sum over (state, slot); the model is
    finite so this is always available. ``monte_carlo`` draws (state, slot)
    i.i.d. with the model's weights and reports empirical means with the
    standard error of the pair product.
    """
    _check_pair(a, b)
    if method == "exact":
        return _correlate_exact(model, a, b)
    if method == "monte_carlo":
        return _correlate_monte_carlo(model, a, b, trials, seed)
    raise ValueError(f"unknown method {method!r}")


def _correlate_exact(model: LocalModel, a: Setting, b: Setting) -> CorrelationReport:
    states = model.source.states
    slots = list(model.grid.slots)
    A, B = _outcome_matrices(model, a, b)
    w = [model.grid.weight(m) for m in slots]
    p = [model.source.weight(lam) for lam in states]
    e_ab = fsum(
        p[i] * w[j] * A[i][j] * B[i][j] for i in range(len(states)) for j in range(len(slots))
    )
    cond_a = {lam: fsum(w[j] * A[i][j] for j in range(len(slots))) for i, lam in enumerate(states)}
    cond_b = {lam: fsum(w[j] * B[i][j] for j in range(len(slots))) for i, lam in enumerate(states)}
    marginal_a = fsum(p[i] * cond_a[lam] for i, lam in enumerate(states))
    marginal_b = fsum(p[i] * cond_b[lam] for i, lam in enumerate(states))
    return CorrelationReport(a, b, e_ab, marginal_a, marginal_b, cond_a, cond_b, "exact", 0, 0.0)


def _correlate_monte_carlo(
    model: LocalModel, a: Setting, b: Setting, trials: int, seed: int
) -> CorrelationReport:
    if trials < 1:
        raise ZeroTrialsError("monte_carlo needs trials >= 1")
    states = model.source.states
    n_slots = model.grid.slot_count
    A, B = _outcome_matrices(model, a, b)
    A = np.asarray(A, dtype=np.int8)
    B = np.asarray(B, dtype=np.int8)
    rng = np.random.default_rng(stable_seed("correlate", seed, fmt12(a.angle), fmt12(b.angle)))
    prior = np.asarray(model.source.prior)
    weights = np.asarray([model.grid.weight(m) for m in model.grid.slots])
    li = rng.choice(len(states), size=trials, p=prior / prior.sum())
    mi = rng.choice(n_slots, size=trials, p=weights / weights.sum())
    av = A[li, mi].astype(np.float64)
    bv = B[li, mi].astype(np.float64)
    prod = av * bv
    e_ab = float(prod.mean())
    std_error = float(prod.std(ddof=1) / sqrt(trials)) if trials > 1 else 0.0
    cond_a = {}
    cond_b = {}
    for i, lam in enumerate(states):
        mask = li == i
        if mask.any():
            cond_a[lam] = float(av[mask].mean())
            cond_b[lam] = float(bv[mask].mean())
    return CorrelationReport(
        a, b, e_ab, float(av.mean()), float(bv.mean()), cond_a, cond_b, "monte_carlo",
        trials, std_error,
    )


def correlate_via_table(model: LocalModel, table: JointTable) -> CorrelationReport:
    """Independent exact route: sum over a tabulated joint distribution.

    Outcome modifiers are reapplied inline here so this path shares no
    arithmetic with the direct (state, slot) sum.
    """
    a, b = table.setting_a, table.setting_b
    _check_pair(a, b)
    terms_ab, terms_a, terms_b = [], [], []
    cond_a: dict[Hashable, list[float]] = {lam: [] for lam in table.states}
    cond_b: dict[Hashable, list[float]] = {lam: [] for lam in table.states}
    lam_mass: dict[Hashable, list[float]] = {lam: [] for lam in table.states}
    for (v1, v2, lam, m), p in table.entries.items():
        oa = int(model.out1.rule(a, lam, v1, m))
        ob = int(model.out2.rule(b, lam, v2, m))
        if model.sign is not None:
            r = model.sign.values[m - 1]
            if model.sign_station in (None, Station.S1):
                oa *= r
            if model.sign_station in (None, Station.S2):
                ob *= r
        if model.flip_mask is not None:
            oa *= model.flip_mask[m - 1]
            ob *= model.flip_mask[m - 1]
        if model.lambda_sign is not None:
            oa *= model.lambda_sign[lam]
            ob *= model.lambda_sign[lam]
        terms_ab.append(p * oa * ob)
        terms_a.append(p * oa)
        terms_b.append(p * ob)
        cond_a[lam].append(p * oa)
        cond_b[lam].append(p * ob)
        lam_mass[lam].append(p)
    cond_a_out = {}
    cond_b_out = {}
    for lam in table.states:
        mass = fsum(lam_mass[lam])
        if mass > 0.0:
            cond_a_out[lam] = fsum(cond_a[lam]) / mass
            cond_b_out[lam] = fsum(cond_b[lam]) / mass
    return CorrelationReport(
        a, b, fsum(terms_ab), fsum(terms_a), fsum(terms_b), cond_a_out, cond_b_out,
        "exact", 0, 0.0,
    )


def chsh(
    model: LocalModel,
    a: Setting,
    a_prime: Setting,
    b: Setting,
    b_prime: Setting,
    method: str = "exact",
    trials: int = 0,
    seed: int = 0,
    tol: float = BOUND_TOL,
) -> ChshResult:
    """Assemble the four-correlation combination from :func:`correlate` calls.

    Monte-Carlo seeds are derived per setting pair, so evaluating the four
    pairs in any order (or in parallel) gives bit-identical results.
    """
    pairs = ((a, b), (a, b_prime), (a_prime, b), (a_prime, b_prime))
    es = []
    for x, y in pairs:
        pair_seed = stable_seed("chsh-pair", seed, fmt12(x.angle), fmt12(y.angle))
        es.append(correlate(model, x, y, method=method, trials=trials, seed=pair_seed).e_ab)
    s = es[0] - es[1] + es[2] + es[3]
    return ChshResult((a, a_prime, b, b_prime), tuple(es), s, 2.0, abs(s) <= 2.0 + tol)


def chsh_from_correlations(
    corr: Callable[[Setting, Setting], float],
    a: Setting,
    a_prime: Setting,
    b: Setting,
    b_prime: Setting,
    tol: float = BOUND_TOL,
) -> ChshResult:
    """CHSH combination of an arbitrary correlation function (e.g. the cosine
    reference table), bypassing any local model."""
    es = (corr(a, b), corr(a, b_prime), corr(a_prime, b), corr(a_prime, b_prime))
    s = es[0] - es[1] + es[2] + es[3]
    return ChshResult((a, a_prime, b, b_prime), es, s, 2.0, abs(s) <= 2.0 + tol)


def reference_correlation(a: Setting, b: Setting) -> float:
    """Singlet-state reference value -cos(a - b); used only for gap reporting."""
    _check_pair(a, b)
    return -cos(a.angle - b.angle)


def deterministic_strategies(n_settings_per_side: int):
    """All deterministic +-1 assignments for n settings per side."""
    for avals in product((-1, 1), repeat=n_settings_per_side):
        for bvals in product((-1, 1), repeat=n_settings_per_side):
            yield avals, bvals


def deterministic_bound(n_settings_per_side: int = 2) -> float:
    """Maximum of the CHSH combination over all deterministic strategies.

    For three settings per side the same embedded 2x2 combination is
    maximized, so the bound is unchanged; enumeration is exhaustive either way.
    """
    if n_settings_per_side not in (2, 3):
        raise UnsupportedSizeError(
            f"deterministic enumeration supports 2 or 3 settings per side, got {n_settings_per_side}"
        )
    best = -float("inf")
    for avals, bvals in deterministic_strategies(n_settings_per_side):
        s = avals[0] * bvals[0] - avals[0] * bvals[1] + avals[1] * bvals[0] + avals[1] * bvals[1]
        best = max(best, float(s))
    return best

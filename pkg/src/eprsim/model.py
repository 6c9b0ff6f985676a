"""Core types for finite two-station coincidence experiments.

A LocalModel describes one experiment completely and finitely: a source
distribution over hidden states, a shared clock grid of time slots, a
per-station instrument-parameter generator, and a per-station outcome
function. All randomness (state draws, slot scheduling, setting
choices) lives in the harness; models are pure, immutable, and safe to share
across threads.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from math import fsum
from typing import Callable, Hashable, Mapping

from .errors import (
    CodomainViolationError,
    GridMismatchError,
    HarnessError,
    InvalidWeightsError,
    StationMismatchError,
)

TWO_PI = 2.0 * math.pi

# Canonical four-angle test grid; contains the configuration that maximizes the
# CHSH combination against the singlet cosine reference.
TEST_ANGLES = (0.0, math.pi / 4, math.pi / 2, 3 * math.pi / 4)

# (a, a_prime, b, b_prime) at which the cosine reference reaches |S| = 2*sqrt(2).
CHSH_OPTIMAL_ANGLES = (0.0, math.pi / 2, math.pi / 4, 3 * math.pi / 4)

WEIGHT_TOL = 1e-12


class Station(enum.Enum):
    S1 = "S1"
    S2 = "S2"


@dataclass(frozen=True)
class Setting:
    """A measurement setting: an angle in [0, 2*pi) typed to one station."""

    angle: float
    station: Station

    def __post_init__(self):
        if not isinstance(self.station, Station):
            raise StationMismatchError(f"setting station must be a Station, got {self.station!r}")
        object.__setattr__(self, "angle", float(self.angle) % TWO_PI)


def s1(angle: float) -> Setting:
    return Setting(angle, Station.S1)


def s2(angle: float) -> Setting:
    return Setting(angle, Station.S2)


def _check_distribution(weights, what: str) -> None:
    if len(weights) == 0:
        raise InvalidWeightsError(f"{what}: needs at least one entry")
    if any(w < 0.0 for w in weights):
        raise InvalidWeightsError(f"{what}: negative weight")
    total = fsum(weights)
    if abs(total - 1.0) > WEIGHT_TOL:
        raise InvalidWeightsError(f"{what}: weights sum to {total!r}, not 1")


@dataclass(frozen=True)
class SourceSpace:
    """Finite set of source states with a prior over them."""

    states: tuple[Hashable, ...]
    prior: tuple[float, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        object.__setattr__(self, "prior", tuple(float(p) for p in self.prior))
        if len(self.states) != len(self.prior):
            raise InvalidWeightsError("source: states and prior differ in length")
        if len(set(self.states)) != len(self.states):
            raise InvalidWeightsError("source: duplicate state labels")
        _check_distribution(self.prior, "source prior")
        object.__setattr__(self, "_index", {lam: i for i, lam in enumerate(self.states)})

    def has(self, lam: Hashable) -> bool:
        return lam in self._index

    def index(self, lam: Hashable) -> int:
        return self._index[lam]

    def weight(self, lam: Hashable) -> float:
        return self.prior[self._index[lam]]


@dataclass(frozen=True)
class TimeGrid:
    """Shared clock: slots labelled 1..slot_count, uniform unless overridden."""

    slot_count: int
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.slot_count < 1:
            raise InvalidWeightsError("grid: slot_count must be >= 1")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            object.__setattr__(self, "weights", w)
            if len(w) != self.slot_count:
                raise InvalidWeightsError("grid: weights length != slot_count")
            _check_distribution(w, "grid weights")

    @property
    def slots(self) -> range:
        return range(1, self.slot_count + 1)

    @property
    def is_uniform(self) -> bool:
        if self.weights is None:
            return True
        return max(self.weights) - min(self.weights) <= WEIGHT_TOL

    def weight(self, m: int) -> float:
        if self.weights is None:
            return 1.0 / self.slot_count
        return self.weights[m - 1]


@dataclass(frozen=True)
class SignFunction:
    """A per-slot sign r(m) in {-1, +1} with its grid-weighted mean cached."""

    values: tuple[int, ...]
    mean: float

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if any(v not in (-1, 1) for v in self.values):
            raise CodomainViolationError("sign function values must be -1 or +1")

    def recomputed_mean(self, grid: TimeGrid) -> float:
        if len(self.values) != grid.slot_count:
            raise GridMismatchError("sign function does not match the grid")
        return fsum(grid.weight(m) * self.values[m - 1] for m in grid.slots)


@dataclass(frozen=True)
class InstrumentParamGen:
    """Deterministic per-station instrument-parameter source.

    ``rule(setting, m, seed)`` must be total on the station's settings and the
    grid slots, and must return a member of ``value_space``. The station's
    default seed is part of the model identity; a run schedule may override it.
    """

    station: Station
    value_space: tuple[Hashable, ...]
    rule: Callable[[Setting, int, int], Hashable]
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "value_space", tuple(self.value_space))
        if len(self.value_space) == 0:
            raise InvalidWeightsError("generator: empty value space")

    def evaluate(self, setting: Setting, m: int, seed: int | None = None) -> Hashable:
        if setting.station is not self.station:
            raise StationMismatchError(
                f"{self.station.value} generator received a {setting.station.value} setting"
            )
        value = self.rule(setting, m, self.seed if seed is None else seed)
        if value not in self.value_space:
            raise CodomainViolationError(
                f"{self.station.value} generator produced {value!r}, outside its value space"
            )
        return value


@dataclass(frozen=True)
class OutcomeFn:
    """Deterministic spin-value rule: (local setting, state, local value, m) -> +-1."""

    station: Station
    rule: Callable[[Setting, Hashable, Hashable, int], int]


@dataclass(frozen=True)
class LocalModel:
    """One complete, finite experiment description.

    ``sign``, ``flip_mask`` and ``lambda_sign`` are outcome modifiers installed
    by the transforms in :mod:`eprsim.symmetry`; they multiply the raw outcome
    and never touch the instrument-parameter distribution.
    """

    name: str
    source: SourceSpace
    grid: TimeGrid
    gen1: InstrumentParamGen
    gen2: InstrumentParamGen
    out1: OutcomeFn
    out2: OutcomeFn
    sign: SignFunction | None = None
    sign_station: Station | None = None
    flip_mask: tuple[int, ...] | None = None
    lambda_sign: Mapping[Hashable, int] | None = None
    m_constant_outcomes: bool = False
    transforms: tuple[str, ...] = ()

    def __post_init__(self):
        if self.gen1.station is not Station.S1 or self.out1.station is not Station.S1:
            raise StationMismatchError(f"{self.name}: gen1/out1 must be S1-typed")
        if self.gen2.station is not Station.S2 or self.out2.station is not Station.S2:
            raise StationMismatchError(f"{self.name}: gen2/out2 must be S2-typed")
        if self.sign is not None and len(self.sign.values) != self.grid.slot_count:
            raise GridMismatchError(f"{self.name}: sign function does not cover the grid")
        if self.flip_mask is not None:
            self._check_flip_mask()
        if self.lambda_sign is not None:
            missing = [lam for lam in self.source.states if lam not in self.lambda_sign]
            if missing:
                raise HarnessError(f"{self.name}: lambda_sign misses states {missing!r}")
            if any(v not in (-1, 1) for v in self.lambda_sign.values()):
                raise CodomainViolationError(f"{self.name}: lambda_sign values must be +-1")

    def _check_flip_mask(self):
        mask = tuple(int(v) for v in self.flip_mask)
        object.__setattr__(self, "flip_mask", mask)
        n = self.grid.slot_count
        if len(mask) != n:
            raise GridMismatchError(f"{self.name}: flip mask length != slot count")
        if n % 2 != 0:
            raise HarnessError(f"{self.name}: flip mask requires an even slot count")
        if any(v not in (-1, 1) for v in mask):
            raise CodomainViolationError(f"{self.name}: flip mask values must be +-1")
        # Paired layout: each (2k-1, 2k) pair holds one +1 and one -1.
        for k in range(n // 2):
            if mask[2 * k] + mask[2 * k + 1] != 0:
                raise HarnessError(f"{self.name}: flip mask pair {k + 1} does not cancel")

    def gen(self, station: Station) -> InstrumentParamGen:
        return self.gen1 if station is Station.S1 else self.gen2

    def out(self, station: Station) -> OutcomeFn:
        return self.out1 if station is Station.S1 else self.out2


def outcome_given_value(
    model: LocalModel,
    station: Station,
    setting: Setting,
    lam: Hashable,
    value: Hashable,
    m: int,
) -> int:
    """Apply the station's outcome rule to an explicit instrument value.

    Installed modifiers (time sign, layer flip mask, source-conditioned sign)
    multiply the raw outcome, in that order.
    """
    if setting.station is not station:
        raise StationMismatchError(
            f"{station.value} evaluation received a {setting.station.value} setting"
        )
    raw = model.out(station).rule(setting, lam, value, m)
    if raw not in (-1, 1):
        raise CodomainViolationError(
            f"{model.name}: outcome rule returned {raw!r}, expected -1 or +1"
        )
    o = int(raw)
    if model.sign is not None and model.sign_station in (None, station):
        o *= model.sign.values[m - 1]
    if model.flip_mask is not None:
        o *= model.flip_mask[m - 1]
    if model.lambda_sign is not None:
        o *= model.lambda_sign[lam]
    return o


def evaluate_outcome(
    model: LocalModel,
    station: Station,
    setting: Setting,
    lam: Hashable,
    m: int,
    station_seed: int | None = None,
) -> int:
    """Evaluate one station's outcome for (setting, state, slot).

    Pure in all arguments; the instrument value is produced by the station's
    own generator, so the other station's setting cannot enter by construction.
    """
    if not model.source.has(lam):
        raise HarnessError(f"{model.name}: unknown source state {lam!r}")
    if not 1 <= m <= model.grid.slot_count:
        raise HarnessError(f"{model.name}: slot {m} outside 1..{model.grid.slot_count}")
    value = model.gen(station).evaluate(setting, m, station_seed)
    return outcome_given_value(model, station, setting, lam, value, m)


def composite_is_m_constant(model: LocalModel, angles=TEST_ANGLES) -> bool:
    """True when both stations' outcomes are slot-independent at the probe angles."""
    for station in (Station.S1, Station.S2):
        for angle in angles:
            setting = Setting(angle, station)
            for lam in model.source.states:
                seen = {evaluate_outcome(model, station, setting, lam, m) for m in model.grid.slots}
                if len(seen) > 1:
                    return False
    return True

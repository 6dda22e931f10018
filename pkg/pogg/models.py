import math

from typing import Optional, List, Tuple, Dict, Any
import sys

if sys.version_info >= (3, 11):
    from enum import StrEnum
else:  # pragma: no cover - compatibility shim mirroring enum.StrEnum for Python 3.10
    from enum import Enum

    class StrEnum(str, Enum):
        def __str__(self) -> str:
            return str.__str__(self)

        def __format__(self, format_spec: str) -> str:
            return str.__format__(str(self), format_spec)

        @staticmethod
        def _generate_next_value_(name, start, count, last_values):
            return name.lower()

import pydantic
from pydantic import BaseModel, ConfigDict, Field, FiniteFloat, NonNegativeInt, PositiveInt, model_validator

from . import errors


class SampleClass(StrEnum):
    root = "root"
    clean = "clean"
    dirty = "dirty"


class Action(StrEnum):
    C = "C"
    D = "D"


class Conditioning(StrEnum):
    contribute = "contribute"
    defect = "defect"


class Verdict(StrEnum):
    equilibrium = "equilibrium"
    not_equilibrium = "not-equilibrium"
    indifferent_mixed = "indifferent-mixed"


class Source(StrEnum):
    closedform = "closedform"
    oracle = "oracle"


class ThresholdMode(StrEnum):
    max = "max"
    average = "average"


class GameConfig(BaseModel):
    """
    Group structure of the game.

    b: number of groups (positions 1..b)
    sizes: players per position, n_1..n_b
    m: sample window, 1 <= m < b
    r: return on the common fund, 0 <= r <= N

    The symmetric shortcut {"b": 4, "n": 2} expands to sizes (2, 2, 2, 2).
    """

    model_config = ConfigDict(frozen=True)

    b: int = Field(ge=2)
    sizes: Tuple[PositiveInt, ...]
    m: int = Field(default=1, ge=1)
    r: float = Field(default=0.0, ge=0)

    @model_validator(mode="before")
    @classmethod
    def sizes_or_n(cls, values):
        if not isinstance(values, dict):
            return values
        values = dict(values)
        n = values.pop("n", None)
        sizes = values.get("sizes")

        if n is not None and sizes is not None:
            raise ValueError('The fields "n" and "sizes" cannot be set together, one must be empty')
        if n is None and sizes is None:
            raise ValueError('One of the fields "n" or "sizes" must be set')

        if n is not None:
            b = values.get("b")
            values["sizes"] = [n] * b if isinstance(b, int) and b > 0 else [n]
        return values

    @model_validator(mode="after")
    def check_structure(self):
        if len(self.sizes) != self.b:
            raise ValueError(f'The field "sizes" must list {self.b} group sizes, got {len(self.sizes)}')
        if self.m >= self.b:
            raise ValueError(f'The field "m" must be smaller than b={self.b}, got {self.m}')
        if self.r > self.N:
            raise ValueError(f'The field "r" must lie in [0, N={self.N}], got {self.r}')
        return self

    @property
    def N(self) -> int:
        return sum(self.sizes)

    @property
    def symmetric(self) -> bool:
        return len(set(self.sizes)) == 1

    @property
    def n(self) -> int:
        if not self.symmetric:
            raise errors.PoggBuildModelError(
                err=f"sizes {self.sizes} are asymmetric", message="Group size n is undefined"
            )
        return self.sizes[0]

    @property
    def mpcr(self) -> float:
        return self.r / self.N

    def size(self, position: int) -> int:
        return self.sizes[position - 1]

    def window(self, position: int) -> Tuple[int, ...]:
        """Positions sampled by a player at `position`, oldest first."""
        return tuple(range(max(1, position - self.m), position))

    def with_return(self, r: float) -> "GameConfig":
        return build_model(model=GameConfig, data={"b": self.b, "sizes": self.sizes, "m": self.m, "r": r})


class Sample(BaseModel):
    model_config = ConfigDict(frozen=True)

    groups_sampled: NonNegativeInt
    contributions_seen: NonNegativeInt


class StrategyProfile(BaseModel):
    """
    Contribution probabilities per sample class.
    grim = (1, 1, 0), forgiving = (1, 1, gamma)
    """

    model_config = ConfigDict(frozen=True)

    p_root: float = Field(default=1.0, ge=0, le=1)
    p_clean: float = Field(default=1.0, ge=0, le=1)
    p_dirty: float = Field(default=0.0, ge=0, le=1)

    @classmethod
    def grim(cls) -> "StrategyProfile":
        return cls(p_root=1.0, p_clean=1.0, p_dirty=0.0)

    @classmethod
    def forgiving(cls, gamma: float) -> "StrategyProfile":
        return build_model(model=cls, data={"p_root": 1.0, "p_clean": 1.0, "p_dirty": gamma})

    @property
    def contributes_on_path(self) -> bool:
        return self.p_root == 1.0 and self.p_clean == 1.0

    def prob(self, sample_class: SampleClass) -> float:
        return {
            SampleClass.root: self.p_root,
            SampleClass.clean: self.p_clean,
            SampleClass.dirty: self.p_dirty,
        }[sample_class]


class PayoffParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    mpcr: float = Field(ge=0)
    total_players: PositiveInt

    @classmethod
    def from_config(cls, config: GameConfig) -> "PayoffParams":
        return cls(mpcr=config.mpcr, total_players=config.N)


class CurvePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    gamma: float = Field(ge=0, le=1)
    value: FiniteFloat


class WindowState(BaseModel):
    """Contribution counts of the last min(m, t-1) groups, oldest first."""

    model_config = ConfigDict(frozen=True)

    outputs: Tuple[NonNegativeInt, ...] = ()


class BeliefVector(BaseModel):
    """Posterior over positions 2..b; probs[0] is position 2."""

    model_config = ConfigDict(frozen=True)

    probs: Tuple[float, ...]

    @model_validator(mode="after")
    def check_distribution(self):
        if any(p < -1e-15 for p in self.probs):
            raise ValueError("Belief entries must be nonnegative")
        if not math.isclose(sum(self.probs), 1.0, abs_tol=1e-9):
            raise ValueError(f"Belief entries must sum to 1, got {sum(self.probs)}")
        return self

    def at(self, position: int) -> float:
        return self.probs[position - 2]

    def as_dict(self) -> Dict[int, float]:
        return {t: p for t, p in enumerate(self.probs, start=2)}


def judge(profile: StrategyProfile, gains: Dict[SampleClass, float], tolerance: float) -> Verdict:
    """
    gains are contribution advantages u(C) - u(D) per sample class.
    Prescribed C needs gain >= -tol, prescribed D needs gain <= tol, mixing needs |gain| <= tol.
    """
    mixed = False
    for sample_class, gain in gains.items():
        p = profile.prob(sample_class)
        if p == 1.0:
            ok = gain >= -tolerance
        elif p == 0.0:
            ok = gain <= tolerance
        else:
            ok = abs(gain) <= tolerance
            mixed = True
        if not ok:
            return Verdict.not_equilibrium
    return Verdict.indifferent_mixed if mixed else Verdict.equilibrium


class DeviationReport(BaseModel):
    gain_root: float
    gain_clean: float
    gain_dirty: float
    verdict: Verdict
    tolerance: float = Field(gt=0)
    profile: StrategyProfile

    @model_validator(mode="after")
    def check_verdict(self):
        gains = {
            SampleClass.root: self.gain_root,
            SampleClass.clean: self.gain_clean,
            SampleClass.dirty: self.gain_dirty,
        }
        expected = judge(self.profile, gains, self.tolerance)
        if expected != self.verdict:
            raise ValueError(f'The field "verdict" is {self.verdict} but the gains imply {expected}')
        return self


class EnumerationReport(BaseModel):
    """
    Expected utilities per sample class from explicit enumeration.
    order 0: the class occurs on path; order 1: it occurs only after a single tremble.
    """

    utility_contribute: Dict[SampleClass, float]
    utility_defect: Dict[SampleClass, float]
    gains: Dict[SampleClass, float]
    order: Dict[SampleClass, int]


class RootSet(BaseModel):
    roots: Tuple[float, ...] = ()
    residuals: Tuple[float, ...] = ()
    source: Source
    tolerance: float = Field(gt=0)

    @model_validator(mode="after")
    def check_roots(self):
        if len(self.roots) != len(self.residuals):
            raise ValueError("Every root needs a residual")
        if any(not 0.0 < g < 1.0 for g in self.roots):
            raise ValueError("Roots must lie in (0, 1)")
        if any(a >= b for a, b in zip(self.roots, self.roots[1:])):
            raise ValueError("Roots must be strictly increasing")
        if any(res > self.tolerance for res in self.residuals):
            raise ValueError("Residuals exceed the solver tolerance")
        return self


class CriticalPair(BaseModel):
    r_sharp: float = Field(gt=0)
    gamma_sharp: float = Field(gt=0, lt=1)
    max_s: float = Field(gt=1)
    source: Source
    other_maxima: Tuple[float, ...] = ()


class RegionRow(BaseModel):
    r: float
    verdict: Verdict
    report: DeviationReport


class ExplorationRow(BaseModel):
    r: float
    roots: RootSet
    endpoint_gains: Tuple[float, float]


class ExplorationTable(BaseModel):
    rows: List[ExplorationRow]
    critical_r: Optional[float] = None


class SimStats(BaseModel):
    runs: PositiveInt
    mean_total_contribution: float = Field(ge=0)
    per_position_means: Tuple[float, ...]
    per_position_std_errors: Tuple[float, ...]
    std_error: float = Field(ge=0)
    seed: int
    start_position: PositiveInt = 1
    rng: str = "numpy.PCG64/SeedSequence.spawn"


class ReconcileRow(BaseModel):
    """Closed-form columns stay empty where no closed form applies (m > 1)."""

    gamma: float
    psi_diff: Optional[float] = None
    psi_ratio_diff: Optional[float] = None
    phi_diff: Optional[float] = None
    h_closedform: Optional[float] = None
    h_oracle: float


class ReconcileReport(BaseModel):
    rows: List[ReconcileRow]
    max_h_diff: Optional[float] = None
    stated_example_threshold: float = 5 / 9
    example_bound_max: float
    example_bound_average: float
    example_exact_threshold: float
    note: str


class RunManifest(BaseModel):
    manifest_id: str
    command: str
    config: Dict[str, Any]
    version: str
    seeds: List[int] = []
    outputs: List[str] = []
    created_at: Optional[str] = None


class CommandReport(BaseModel):
    manifest: RunManifest
    result: Dict[str, Any]


def build_model(model: BaseModel, data: dict) -> BaseModel:
    try:
        built_model = model(**data)
        return built_model
    except pydantic.ValidationError as e:
        raise errors.PoggBuildModelError(err=e)

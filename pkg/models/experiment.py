"""Pydantic schemas for experiment configuration files and run reports."""
from __future__ import annotations

from typing import Annotated, Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from calc.tolerances import TOLERANCE_DEFAULTS

MetricFamily = Literal[
    "pseudo_euclidean",
    "minkowski",
    "berwald_moor",
    "weighted_product",
    "conformal",
    "pullback",
    "rescaled",
]
ProbeStatus = Literal["pass", "fail", "error"]


class _Schema(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _check_tolerance_codes(value: Dict[str, float]) -> Dict[str, float]:
    unknown = sorted(set(value) - set(TOLERANCE_DEFAULTS))
    if unknown:
        raise ValueError(f"未定義の許容値コードです: {', '.join(unknown)}")
    negative = sorted(code for code, tol in value.items() if tol < 0)
    if negative:
        raise ValueError(f"許容値は0以上で指定してください: {', '.join(negative)}")
    return value


class PseudoEuclideanDef(_Schema):
    family: Literal["pseudo_euclidean"]
    name: str
    signs: List[Literal[1, -1]] = Field(min_length=1)


class MinkowskiDef(_Schema):
    family: Literal["minkowski"]
    name: str
    n: int = Field(ge=1)


class BerwaldMoorDef(_Schema):
    family: Literal["berwald_moor"]
    name: str
    n: int = Field(ge=2)


class WeightedProductDef(_Schema):
    family: Literal["weighted_product"]
    name: str
    first: str
    second: str
    alpha: float = Field(gt=0.0, lt=1.0)


class ConformalDef(_Schema):
    family: Literal["conformal"]
    name: str
    base: str
    sigma: str


class PullbackDef(_Schema):
    family: Literal["pullback"]
    name: str
    base: str
    map: str


class RescaledDef(_Schema):
    family: Literal["rescaled"]
    name: str
    base: str
    field: str


MetricDef = Annotated[
    Union[
        PseudoEuclideanDef,
        MinkowskiDef,
        BerwaldMoorDef,
        WeightedProductDef,
        ConformalDef,
        PullbackDef,
        RescaledDef,
    ],
    Field(discriminator="family"),
]


class MapDef(_Schema):
    name: str
    components: List[str] = Field(min_length=1)
    kind: Literal["componentwise", "general"] = "general"
    inverse: Optional[List[str]] = None


class FieldDef(_Schema):
    name: str
    components: List[str] = Field(min_length=1)


class ProbeDef(_Schema):
    """One probe: an operation name, its arguments, tolerances, sample budget and seed."""

    name: str
    op: str
    args: Dict[str, Any] = Field(default_factory=dict)
    tolerances: Dict[str, float] = Field(default_factory=dict)
    samples: int = Field(default=32, ge=1, le=100_000)
    seed: Optional[int] = None
    export_trajectory: bool = False

    @field_validator("tolerances")
    @classmethod
    def _known_tolerances(cls, value: Dict[str, float]) -> Dict[str, float]:
        return _check_tolerance_codes(value)


class OutputDef(_Schema):
    directory: str = "out"
    trajectories: bool = True


class ExperimentSpec(_Schema):
    name: str = "experiment"
    dimension: int = Field(ge=1, le=8)
    seed: int
    metrics: List[MetricDef] = Field(default_factory=list)
    maps: List[MapDef] = Field(default_factory=list)
    fields: List[FieldDef] = Field(default_factory=list)
    probes: List[ProbeDef] = Field(default_factory=list)
    output: OutputDef = Field(default_factory=OutputDef)
    tolerances: Dict[str, float] = Field(default_factory=dict)
    jobs: int = Field(default=1, ge=1)

    @field_validator("tolerances")
    @classmethod
    def _known_tolerances(cls, value: Dict[str, float]) -> Dict[str, float]:
        return _check_tolerance_codes(value)

    @model_validator(mode="after")
    def _unique_names(self) -> "ExperimentSpec":
        for label, items in (("metrics", self.metrics), ("maps", self.maps), ("fields", self.fields), ("probes", self.probes)):
            seen: set[str] = set()
            for item in items:
                if item.name in seen:
                    raise ValueError(f"{label} に同じ名前が重複しています: {item.name}")
                seen.add(item.name)
        return self


class ProbeResult(_Schema):
    """Outcome of a single probe as stored in ``report.json``."""

    name: str
    op: str
    status: ProbeStatus
    verdict: Optional[str] = None
    seed: int
    statistics: Dict[str, Dict[str, float]] = Field(default_factory=dict)
    values: Dict[str, Any] = Field(default_factory=dict)
    witness: Optional[Dict[str, Any]] = None
    tolerances: Dict[str, float] = Field(default_factory=dict)
    notes: List[str] = Field(default_factory=list)
    error: Optional[str] = None
    trajectory_file: Optional[str] = None
    wall_time_s: float = 0.0


class Report(_Schema):
    name: str
    config_hash: str
    library_version: str
    seed: int
    generated_at: str
    probes: List[ProbeResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(probe.status == "pass" for probe in self.probes)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1


__all__ = [
    "MetricFamily",
    "ProbeStatus",
    "PseudoEuclideanDef",
    "MinkowskiDef",
    "BerwaldMoorDef",
    "WeightedProductDef",
    "ConformalDef",
    "PullbackDef",
    "RescaledDef",
    "MetricDef",
    "MapDef",
    "FieldDef",
    "ProbeDef",
    "OutputDef",
    "ExperimentSpec",
    "ProbeResult",
    "Report",
]

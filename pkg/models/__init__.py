"""Model package exports."""

from .errors import (
    AllSamplesNull,
    ConfigError,
    DegenerateMetric,
    DomainError,
    FlowBlowup,
    GeometryError,
    GridTooCoarse,
    InconclusiveSampling,
    IndexOutOfRange,
    NotAdmissible,
    NotConformalAt,
    NotNull,
    NullDirection,
    OrderUnsupported,
    ParseError,
    ReportIOError,
    SamplingExhausted,
    SingularJacobian,
    UnknownIdentifier,
    YDependentSigma,
)
from .geometry import (
    CausalCharacter,
    ConformalVerdict,
    Jet,
    MetricValue,
    OrderMask,
    SprayValue,
    Trajectory,
)

__all__ = [
    "AllSamplesNull",
    "ConfigError",
    "DegenerateMetric",
    "DomainError",
    "FlowBlowup",
    "GeometryError",
    "GridTooCoarse",
    "InconclusiveSampling",
    "IndexOutOfRange",
    "NotAdmissible",
    "NotConformalAt",
    "NotNull",
    "NullDirection",
    "OrderUnsupported",
    "ParseError",
    "ReportIOError",
    "SamplingExhausted",
    "SingularJacobian",
    "UnknownIdentifier",
    "YDependentSigma",
    "CausalCharacter",
    "ConformalVerdict",
    "Jet",
    "MetricValue",
    "OrderMask",
    "SprayValue",
    "Trajectory",
]

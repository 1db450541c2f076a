"""Error types raised by the geometry kernels, the expression language and the runner."""
from __future__ import annotations

from typing import Any, Dict, Iterable, List, Sequence, Tuple


class GeometryError(Exception):
    """Base class of every domain failure raised by this package."""


class DomainError(GeometryError):
    """A field was evaluated outside of its domain (log of a non-positive number, ...)."""


class OrderUnsupported(GeometryError):
    """The requested derivative orders exceed what the jet evaluator provides."""


class SingularJacobian(GeometryError):
    """The differential of a map is not invertible at the evaluated point."""

    def __init__(self, message: str, *, determinant: float | None = None) -> None:
        super().__init__(message)
        self.determinant = determinant


class ParseError(GeometryError):
    """Syntax error in an expression source, located by byte offset."""

    def __init__(self, offset: int, found: str, expected: Iterable[str], source: str = "") -> None:
        self.offset = int(offset)
        self.found = found
        self.expected: Tuple[str, ...] = tuple(sorted(set(expected)))
        self.source = source
        expected_text = ", ".join(self.expected) if self.expected else "end of input"
        super().__init__(f"offset {self.offset}: found {found!r}, expected one of: {expected_text}")


class UnknownIdentifier(ParseError):
    """An identifier that is neither a variable nor a known function."""

    def __init__(self, offset: int, name: str, source: str = "") -> None:
        super().__init__(offset, name, ("variable x<i>/y<i>", "function name"), source)
        self.name = name
        self.args = (f"offset {offset}: unknown identifier {name!r}",)


class IndexOutOfRange(ParseError):
    """A variable index is not smaller than the dimension of the context."""

    def __init__(self, offset: int, name: str, dimension: int, source: str = "") -> None:
        super().__init__(offset, name, (f"index < {dimension}",), source)
        self.name = name
        self.dimension = dimension
        self.args = (f"offset {offset}: variable {name!r} out of range for dimension {dimension}",)


class YDependentSigma(GeometryError):
    """A conformal factor expression mentions a direction variable."""

    def __init__(self, variables: Iterable[str]) -> None:
        self.variables = tuple(sorted(variables))
        super().__init__(f"conformal factor must depend on x only, found {', '.join(self.variables)}")


class DegenerateMetric(GeometryError):
    """The metric tensor is singular (or numerically so) at the evaluated point."""


class NotAdmissible(GeometryError):
    """The point (x, y) lies outside the admissible set A."""


class NullDirection(GeometryError):
    """An operation defined only off the null cone received a null direction."""


class SamplingExhausted(GeometryError):
    """Rejection sampling did not find enough admissible directions."""


class GridTooCoarse(GeometryError):
    """A sampled curve has too few samples for finite differences."""


class NotConformalAt(GeometryError):
    """The pulled-back Lagrangian is not a y-independent multiple of L at a base point."""

    def __init__(self, message: str, *, point: Sequence[float] | None = None) -> None:
        super().__init__(message)
        self.point = None if point is None else tuple(float(v) for v in point)


class AllSamplesNull(GeometryError):
    """Every direction drawn at a base point is (numerically) null."""


class FlowBlowup(GeometryError):
    """The flow of a vector field left every bounded region."""


class InconclusiveSampling(GeometryError):
    """A witness search exhausted its sample budget without a witness."""


class NotNull(GeometryError):
    """A trajectory expected to be lightlike starts with a non-zero energy."""


class ReportIOError(GeometryError):
    """Writing report artefacts failed."""


class ConfigError(GeometryError):
    """Experiment configuration error carrying per-field details."""

    def __init__(self, errors: List[Dict[str, Any]]) -> None:
        self._errors = []
        for detail in errors:
            entry: Dict[str, Any] = {"loc": tuple(detail.get("loc", ())), "msg": str(detail.get("msg", "invalid value"))}
            if detail.get("type"):
                entry["type"] = str(detail["type"])
            self._errors.append(entry)
        first = self._errors[0] if self._errors else {"loc": (), "msg": "invalid configuration"}
        location = ".".join(str(part) for part in first["loc"])
        super().__init__(f"{location}: {first['msg']}" if location else first["msg"])

    def errors(self) -> List[Dict[str, Any]]:
        return self._errors

    def types(self) -> List[str]:
        return [entry["type"] for entry in self._errors if "type" in entry]


__all__ = [
    "GeometryError",
    "DomainError",
    "OrderUnsupported",
    "SingularJacobian",
    "ParseError",
    "UnknownIdentifier",
    "IndexOutOfRange",
    "YDependentSigma",
    "DegenerateMetric",
    "NotAdmissible",
    "NullDirection",
    "SamplingExhausted",
    "GridTooCoarse",
    "NotConformalAt",
    "AllSamplesNull",
    "FlowBlowup",
    "InconclusiveSampling",
    "NotNull",
    "ReportIOError",
    "ConfigError",
]

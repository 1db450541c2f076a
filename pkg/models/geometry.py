"""Dataclass value objects produced by the geometry kernels."""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Any, Dict, FrozenSet, List, Literal, Mapping, Optional, Tuple

import numpy as np

from .errors import OrderUnsupported

CausalTag = Literal["timelike", "null", "spacelike"]
CurveClass = Literal["timelike", "null", "spacelike", "mixed"]
VerdictTag = Literal["conformal", "killing", "not-conformal"]
MapClass = Literal["isometry", "similarity", "general"]

MAX_X_ORDER = 1
MAX_Y_ORDER = 3

# Block name, x-order, y-order.
JET_BLOCKS: Tuple[Tuple[str, int, int], ...] = (
    ("dx", 1, 0),
    ("dy", 0, 1),
    ("dydy", 0, 2),
    ("dxdy", 1, 1),
    ("dydydy", 0, 3),
    ("dxdydy", 1, 2),
)


def _convert_for_dump(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_convert_for_dump(item) for item in value]
    if isinstance(value, (set, frozenset)):
        return sorted(_convert_for_dump(item) for item in value)
    if isinstance(value, Mapping):
        return {str(key): _convert_for_dump(val) for key, val in value.items()}
    if hasattr(value, "model_dump"):
        return value.model_dump()
    return value


class ModelMixin:
    """Provide a ``model_dump`` helper producing JSON-ready structures."""

    def model_dump(self) -> Dict[str, Any]:
        return {item.name: _convert_for_dump(getattr(self, item.name)) for item in fields(self)}  # type: ignore[arg-type]


@dataclass(frozen=True)
class OrderMask(ModelMixin):
    """Requested derivative orders of a jet: at most 1 in x and 3 in y."""

    x: int = 1
    y: int = 2

    def __post_init__(self) -> None:
        if not (0 <= self.x <= MAX_X_ORDER) or not (0 <= self.y <= MAX_Y_ORDER):
            raise OrderUnsupported(
                f"requested orders (x:{self.x}, y:{self.y}) exceed (x:{MAX_X_ORDER}, y:{MAX_Y_ORDER})"
            )

    @property
    def depth(self) -> int:
        return max(self.x, self.y)

    def allows(self, x_order: int, y_order: int) -> bool:
        return x_order <= self.x and y_order <= self.y and x_order + y_order <= self.depth

    def blocks(self) -> FrozenSet[str]:
        return frozenset(name for name, ox, oy in JET_BLOCKS if self.allows(ox, oy))


@dataclass(frozen=True, eq=False)
class Jet(ModelMixin):
    """Value and partial derivatives of a scalar field at one point (x, y).

    ``dxdy[i][j]`` is the mixed derivative in y^i and x^j, ``dxdydy[k][h][j]`` the
    third derivative in x^k, y^h, y^j. Blocks outside the order mask are ``None``.
    """

    n: int
    value: float
    order_mask: OrderMask
    dx: Optional[np.ndarray] = None
    dy: Optional[np.ndarray] = None
    dydy: Optional[np.ndarray] = None
    dxdy: Optional[np.ndarray] = None
    dydydy: Optional[np.ndarray] = None
    dxdydy: Optional[np.ndarray] = None

    @property
    def filled(self) -> FrozenSet[str]:
        return frozenset(name for name, _, _ in JET_BLOCKS if getattr(self, name) is not None)

    def require(self, block: str) -> np.ndarray:
        value = getattr(self, block)
        if value is None:
            raise OrderUnsupported(f"jet block {block!r} was not requested")
        return value

    def symmetry_defect(self) -> float:
        """Largest relative asymmetry of the y-symmetric blocks (0 when absent)."""

        worst = 0.0
        if self.dydy is not None:
            worst = max(worst, _relative_asymmetry(self.dydy, [(1, 0)]))
        if self.dydydy is not None:
            worst = max(worst, _relative_asymmetry(self.dydydy, [(1, 0, 2), (0, 2, 1), (2, 1, 0)]))
        if self.dxdydy is not None:
            worst = max(worst, _relative_asymmetry(self.dxdydy, [(0, 2, 1)]))
        return worst


def _relative_asymmetry(block: np.ndarray, permutations: List[Tuple[int, ...]]) -> float:
    scale = float(np.max(np.abs(block))) if block.size else 0.0
    if scale == 0.0:
        return 0.0
    defect = max(float(np.max(np.abs(block - np.transpose(block, perm)))) for perm in permutations)
    return defect / scale


@dataclass(frozen=True, eq=False)
class JacobianValue(ModelMixin):
    matrix: np.ndarray
    det: float


@dataclass(frozen=True)
class FDReport(ModelMixin):
    """Largest relative discrepancy between jet blocks and finite differences."""

    max_relative: float
    blocks: Dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class MetricValue(ModelMixin):
    """Metric tensor with inverse, eigenvalues and signature (negatives, positives)."""

    g: np.ndarray
    g_inv: np.ndarray
    signature: Tuple[int, int]
    det: float
    eigenvalues: np.ndarray
    notes: Tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class AngularMetric(ModelMixin):
    h: np.ndarray
    h_upper: np.ndarray
    y_lower: np.ndarray


@dataclass(frozen=True, eq=False)
class SprayValue(ModelMixin):
    """``G2`` holds the quantity 2G^i; ``Gcoeff`` the connection G^i_j when requested."""

    G2: np.ndarray
    Gcoeff: Optional[np.ndarray] = None


@dataclass(frozen=True)
class CausalCharacter(ModelMixin):
    tag: CausalTag
    L_value: float
    tol: float


@dataclass(frozen=True)
class StructureProfile(ModelMixin):
    signature: Tuple[int, int]
    positive_definite: bool
    finsler_spacetime: bool
    pseudo_riemannian: bool
    flat_in_chart: bool
    samples: int


@dataclass(frozen=True, eq=False)
class Trajectory(ModelMixin):
    """Time-sampled geodesic with per-sample positions ``x`` and velocities ``y``."""

    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    L0: float
    step: float
    order: int = 4
    admissible: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    truncated: bool = False
    reason: Optional[str] = None
    label: str = ""

    def __post_init__(self) -> None:
        if self.x.shape != self.y.shape or self.x.shape[0] != self.t.shape[0]:
            raise ValueError("trajectory arrays must share their sample axis")

    @property
    def n(self) -> int:
        return int(self.x.shape[1])

    def __len__(self) -> int:
        return int(self.t.shape[0])


@dataclass(frozen=True, eq=False)
class SprayDefect(ModelMixin):
    """Spray difference split into a part along y and a g-transverse part."""

    D: np.ndarray
    parallel: float
    transverse: np.ndarray
    transverse_norm: float
    null: bool


@dataclass(frozen=True)
class ConformalVerdict(ModelMixin):
    """Outcome of a conformality check over a sample set."""

    max_residual: float
    factors: Tuple[float, ...]
    anisotropy: float
    verdict: VerdictTag
    tolerances: Dict[str, float]
    skipped: int = 0
    map_class: Optional[MapClass] = None
    on_cone_max: Optional[float] = None
    anisotropic_points: Tuple[Tuple[float, ...], ...] = ()


@dataclass(frozen=True)
class FactorEstimate(ModelMixin):
    sigma: float
    anisotropy: float
    used: int
    skipped: int


@dataclass(frozen=True)
class Witness(ModelMixin):
    x: Tuple[float, ...]
    y: Tuple[float, ...]
    value: float


@dataclass(frozen=True)
class WeylReport(ModelMixin):
    """Spray-defect scan of a conformal deformation.

    Constant factors must leave the spray unchanged; non-constant ones need a
    transverse witness.
    """

    constant_sigma: bool
    max_transverse: float
    max_defect: float
    witness: Optional[Witness]
    passed: bool
    samples: int


@dataclass(frozen=True)
class LemmaEntry(ModelMixin):
    eps: float
    fitted_factor: float
    finsler_factor: float
    factor_gap: float
    proportionality: float
    signatures_ok: bool


@dataclass(frozen=True)
class LemmaReport(ModelMixin):
    entries: Tuple[LemmaEntry, ...]
    max_gap: float
    passed: bool


@dataclass(frozen=True)
class EssentialScan(ModelMixin):
    """Causal profile of L(x, ξ(x)) over a grid and, when nowhere null, the Killing check of L/α."""

    tags: Tuple[str, ...]
    null_points: Tuple[Tuple[float, ...], ...]
    not_admissible: Tuple[Tuple[float, ...], ...]
    alpha_min: float
    alpha_max: float
    essential_candidate: bool
    rescaled_verdict: Optional[ConformalVerdict] = None

    @property
    def killing_after_rescaling(self) -> bool:
        return self.rescaled_verdict is not None and self.rescaled_verdict.verdict == "killing"


__all__ = [
    "CausalTag",
    "CurveClass",
    "VerdictTag",
    "MapClass",
    "JET_BLOCKS",
    "ModelMixin",
    "OrderMask",
    "Jet",
    "JacobianValue",
    "FDReport",
    "MetricValue",
    "AngularMetric",
    "SprayValue",
    "CausalCharacter",
    "StructureProfile",
    "Trajectory",
    "SprayDefect",
    "ConformalVerdict",
    "FactorEstimate",
    "Witness",
    "WeylReport",
    "LemmaEntry",
    "LemmaReport",
    "EssentialScan",
]

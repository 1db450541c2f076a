"""Validation helpers for experiment configurations."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

from pydantic import ValidationError

from core.expressions import free_vars, parse, y_variables
from core.probes import EXPRESSION_ARGS, PROBE_SPECS, REFERENCE_ARGS, missing_arguments
from models.errors import ConfigError, ParseError
from models.experiment import (
    BerwaldMoorDef,
    ConformalDef,
    ExperimentSpec,
    MinkowskiDef,
    PseudoEuclideanDef,
    PullbackDef,
    RescaledDef,
    WeightedProductDef,
)


@dataclass(frozen=True)
class ValidationIssue:
    """Represents a validation error for a specific field."""

    field: str
    message: str
    kind: str = "value_error"


def _issues_from_error(prefix: str, error: ValidationError) -> List[ValidationIssue]:
    issues: List[ValidationIssue] = []
    for detail in error.errors():
        path = ".".join(str(part) for part in detail.get("loc", ()))
        message = detail.get("msg", "不正な値です。")
        field = f"{prefix}.{path}" if prefix and path else prefix or path
        issues.append(ValidationIssue(field=field, message=message, kind=str(detail.get("type", "value_error"))))
    return issues


def _check_expression(field: str, source: str, n: int, *, x_only: bool = True) -> Optional[ValidationIssue]:
    try:
        expr = parse(source, n)
    except ParseError as exc:
        return ValidationIssue(field=field, message=f"式を解析できません ({exc})", kind="parse_error")
    offending = y_variables(expr)
    if x_only and offending:
        names = ", ".join(sorted(offending))
        return ValidationIssue(
            field=field,
            message=f"共形因子は x のみに依存する必要があります (y 変数: {names})",
            kind="y_dependent_sigma",
        )
    return None


def _metric_dimensions(spec: ExperimentSpec, issues: List[ValidationIssue]) -> Dict[str, int]:
    """Dimension of each metric; references must point to earlier definitions."""

    dims: Dict[str, int] = {}
    map_dims = {item.name: len(item.components) for item in spec.maps}
    field_dims = {item.name: len(item.components) for item in spec.fields}
    for index, metric in enumerate(spec.metrics):
        loc = f"metrics.{index}"

        def base_dim(name: str, key: str) -> Optional[int]:
            if name not in dims:
                issues.append(ValidationIssue(f"{loc}.{key}", f"先に定義されたメトリクスを参照してください: {name}", "unknown_reference"))
                return None
            return dims[name]

        dim: Optional[int] = None
        if isinstance(metric, PseudoEuclideanDef):
            dim = len(metric.signs)
        elif isinstance(metric, (MinkowskiDef, BerwaldMoorDef)):
            dim = metric.n
        elif isinstance(metric, WeightedProductDef):
            first = base_dim(metric.first, "first")
            second = base_dim(metric.second, "second")
            if first is not None and second is not None:
                dim = first + second
        elif isinstance(metric, ConformalDef):
            dim = base_dim(metric.base, "base")
            if dim is not None:
                issue = _check_expression(f"{loc}.sigma", metric.sigma, dim)
                if issue:
                    issues.append(issue)
        elif isinstance(metric, PullbackDef):
            dim = base_dim(metric.base, "base")
            if metric.map not in map_dims:
                issues.append(ValidationIssue(f"{loc}.map", f"未定義の写像です: {metric.map}", "unknown_reference"))
            elif dim is not None and map_dims[metric.map] != dim:
                issues.append(ValidationIssue(f"{loc}.map", "写像の次元がメトリクスと一致しません", "dimension_mismatch"))
        elif isinstance(metric, RescaledDef):
            dim = base_dim(metric.base, "base")
            if metric.field not in field_dims:
                issues.append(ValidationIssue(f"{loc}.field", f"未定義のベクトル場です: {metric.field}", "unknown_reference"))
            elif dim is not None and field_dims[metric.field] != dim:
                issues.append(ValidationIssue(f"{loc}.field", "ベクトル場の次元がメトリクスと一致しません", "dimension_mismatch"))
        if dim is not None:
            dims[metric.name] = dim
    return dims


def _check_dimensions(spec: ExperimentSpec, dims: Mapping[str, int], issues: List[ValidationIssue]) -> None:
    factors = {m.first for m in spec.metrics if isinstance(m, WeightedProductDef)}
    factors |= {m.second for m in spec.metrics if isinstance(m, WeightedProductDef)}
    for index, metric in enumerate(spec.metrics):
        if metric.name in dims and metric.name not in factors and dims[metric.name] != spec.dimension:
            issues.append(
                ValidationIssue(f"metrics.{index}", f"次元 {dims[metric.name]} が dimension={spec.dimension} と一致しません", "dimension_mismatch")
            )
    for label, items in (("maps", spec.maps), ("fields", spec.fields)):
        for index, item in enumerate(items):
            if len(item.components) != spec.dimension:
                issues.append(
                    ValidationIssue(f"{label}.{index}.components", f"成分数は dimension={spec.dimension} と一致させてください", "dimension_mismatch")
                )


def _check_sources(spec: ExperimentSpec, issues: List[ValidationIssue]) -> None:
    for label, items in (("maps", spec.maps), ("fields", spec.fields)):
        for index, item in enumerate(items):
            n = len(item.components)
            sources = list(enumerate(item.components))
            inverse = getattr(item, "inverse", None) or []
            for position, source in sources:
                issue = _check_expression(f"{label}.{index}.components.{position}", source, n)
                if issue:
                    issues.append(issue)
                elif getattr(item, "kind", "general") == "componentwise" and not free_vars(parse(source, n)) <= {f"x{position}"}:
                    issues.append(
                        ValidationIssue(f"{label}.{index}.components.{position}", f"成分ごとの写像では x{position} のみ使用できます", "componentwise")
                    )
            for position, source in enumerate(inverse):
                issue = _check_expression(f"{label}.{index}.inverse.{position}", source, n)
                if issue:
                    issues.append(issue)


def _check_probes(spec: ExperimentSpec, dims: Mapping[str, int], issues: List[ValidationIssue]) -> None:
    declared = {
        "metrics": {m.name for m in spec.metrics},
        "maps": {m.name for m in spec.maps},
        "fields": {f.name for f in spec.fields},
    }
    for index, probe in enumerate(spec.probes):
        loc = f"probes.{index}"
        if probe.op not in PROBE_SPECS:
            issues.append(ValidationIssue(f"{loc}.op", f"未定義の操作です: {probe.op}", "unknown_op"))
            continue
        for name in missing_arguments(probe.op, probe.args):
            issues.append(ValidationIssue(f"{loc}.args.{name}", "必須の引数がありません", "missing"))
        for key, kind in REFERENCE_ARGS.items():
            if key in probe.args and probe.args[key] not in declared[kind]:
                issues.append(ValidationIssue(f"{loc}.args.{key}", f"未定義の参照です: {probe.args[key]}", "unknown_reference"))
        n = dims.get(str(probe.args.get("metric")), spec.dimension)
        for key in EXPRESSION_ARGS:
            if key in probe.args:
                issue = _check_expression(f"{loc}.args.{key}", str(probe.args[key]), n)
                if issue:
                    issues.append(issue)


def validate_experiment(data: Dict[str, Any]) -> Tuple[ExperimentSpec | None, List[ValidationIssue]]:
    """Schema validation followed by reference, dimension and expression checks."""

    try:
        spec = ExperimentSpec.model_validate(data)
    except ValidationError as exc:
        return None, _issues_from_error("", exc)

    issues: List[ValidationIssue] = []
    dims = _metric_dimensions(spec, issues)
    _check_dimensions(spec, dims, issues)
    _check_sources(spec, issues)
    _check_probes(spec, dims, issues)
    if issues:
        return None, issues
    return spec, []


def to_config_error(issues: Iterable[ValidationIssue]) -> ConfigError:
    return ConfigError(
        [{"loc": tuple(issue.field.split(".")), "msg": issue.message, "type": issue.kind} for issue in issues]
    )


def collect_error_messages(issues: Iterable[ValidationIssue]) -> str:
    return "\n".join(f"[{issue.field}] {issue.message}" for issue in issues)


__all__ = [
    "ValidationIssue",
    "validate_experiment",
    "to_config_error",
    "collect_error_messages",
]

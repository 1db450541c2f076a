"""Named acceptance suites, each a list of experiment configs run by ``verify``."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

from core.io import parse_experiment
from core.runner import RunResult, run

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20240501
GRID = {"low": 0.25, "high": 2.0, "count": 8}


@dataclass(frozen=True)
class Suite:
    description: str
    experiments: Sequence[Dict[str, Any]]


def _experiment(
    name: str,
    dimension: int,
    metrics: List[Dict[str, Any]],
    probes: List[Dict[str, Any]],
    *,
    maps: Sequence[Dict[str, Any]] = (),
    fields: Sequence[Dict[str, Any]] = (),
    tolerances: Optional[Dict[str, float]] = None,
) -> Dict[str, Any]:
    return {
        "name": name,
        "dimension": dimension,
        "seed": DEFAULT_SEED,
        "metrics": metrics,
        "maps": list(maps),
        "fields": list(fields),
        "probes": probes,
        "tolerances": tolerances or {},
    }


def _signs(n: int) -> List[int]:
    return [1] + [-1] * (n - 1)


def _jacobian_sigma(n: int, kind: str) -> str:
    if kind == "cubic":
        product = "*".join(f"(1+3*x{i}^2)" for i in range(n))
        return f"(2/{n})*ln({product})"
    return f"(2/{n})*(" + "+".join(f"x{i}" for i in range(n)) + ")"


def _homogeneity_suite() -> List[Dict[str, Any]]:
    experiments = []
    for n in (2, 3, 4):
        metrics: List[Dict[str, Any]] = [
            {"family": "pseudo_euclidean", "name": f"pe{n}", "signs": _signs(n)},
            {"family": "berwald_moor", "name": f"bm{n}", "n": n},
            {"family": "conformal", "name": f"conf{n}", "base": f"pe{n}", "sigma": "sin(x0)+x1"},
        ]
        if n == 3:
            metrics += [
                {"family": "pseudo_euclidean", "name": "line", "signs": [1]},
                {"family": "minkowski", "name": "mink2", "n": 2},
                {"family": "weighted_product", "name": "wp_k1", "first": "line", "second": "mink2", "alpha": 0.4},
            ]
        if n == 4:
            metrics += [
                {"family": "minkowski", "name": "mink2", "n": 2},
                {"family": "weighted_product", "name": "wp_k2", "first": "mink2", "second": "mink2", "alpha": 0.3},
            ]
        top = [m["name"] for m in metrics if m["name"] not in ("line", "mink2")]
        probes = [{"name": f"homogeneity-{name}", "op": "homogeneity", "args": {"metric": name}, "samples": 200} for name in top]
        if n == 3:
            probes.append({"name": "fd-bm3", "op": "fd_check", "args": {"metric": "bm3", "y_order": 3}, "samples": 5})
        experiments.append(_experiment(f"homogeneity-n{n}", n, metrics, probes))
    return experiments


def _bm_conformal_suite() -> List[Dict[str, Any]]:
    experiments = []
    for n in (2, 3, 4):
        maps = [
            {"name": "cubic", "kind": "componentwise", "components": [f"x{i}+x{i}^3" for i in range(n)]},
            {"name": "exp", "kind": "componentwise", "components": [f"exp(x{i})" for i in range(n)]},
        ]
        probes = []
        for kind in ("cubic", "exp"):
            sigma = _jacobian_sigma(n, kind)
            args = {"metric": "bm", "target": "bm", "map": kind}
            probes.append(
                {"name": f"residual-{kind}", "op": "conformal_residual", "args": {**args, "sigma": sigma}, "samples": 1000,
                 "tolerances": {"residual": 1e-12, "anisotropy": 1e-12}}
            )
            probes.append(
                {"name": f"factor-{kind}", "op": "conformal_factor", "args": {**args, "expected": sigma, "directions": 8}, "samples": 20,
                 "tolerances": {"sigma_match": 1e-10, "anisotropy": 1e-12}}
            )
        experiments.append(_experiment(f"bm-conformal-n{n}", n, [{"family": "berwald_moor", "name": "bm", "n": n}], probes, maps=maps))
    return experiments


def _weighted_product_suite() -> List[Dict[str, Any]]:
    metrics = [
        {"family": "pseudo_euclidean", "name": "line", "signs": [1]},
        {"family": "minkowski", "name": "mink2", "n": 2},
        {"family": "weighted_product", "name": "wp_a", "first": "line", "second": "mink2", "alpha": 0.4},
        {"family": "weighted_product", "name": "wp_b", "first": "mink2", "second": "line", "alpha": 0.4},
    ]
    maps = [
        {"name": "monotone", "kind": "componentwise", "components": ["x0+x0^3", "x1", "x2"]},
        {"name": "inversion", "components": ["x0/(x0^2-x1^2)", "x1/(x0^2-x1^2)", "x2"]},
    ]
    sigma_a = "0.4*2*ln(1+3*x0^2)"
    sigma_b = "0.4*(-2)*ln(x0^2-x1^2)"
    box_b = [[1.5, 2.5], [0.0, 0.5], [0.5, 1.5]]
    tol = {"residual": 1e-10, "sigma_match": 1e-10}
    probes = [
        {"name": "residual-monotone", "op": "conformal_residual", "args": {"metric": "wp_a", "target": "wp_a", "map": "monotone", "sigma": sigma_a}, "samples": 200, "tolerances": tol},
        {"name": "factor-monotone", "op": "conformal_factor", "args": {"metric": "wp_a", "target": "wp_a", "map": "monotone", "expected": sigma_a}, "samples": 20, "tolerances": tol},
        {"name": "residual-inversion", "op": "conformal_residual", "args": {"metric": "wp_b", "target": "wp_b", "map": "inversion", "sigma": sigma_b, "box": box_b}, "samples": 200, "tolerances": tol},
        {"name": "factor-inversion", "op": "conformal_factor", "args": {"metric": "wp_b", "target": "wp_b", "map": "inversion", "expected": sigma_b, "box": box_b}, "samples": 20, "tolerances": tol},
    ]
    return [_experiment("weighted-product", 3, metrics, probes, maps=maps)]


def _spray_relation_suite() -> List[Dict[str, Any]]:
    experiments = []
    for n, metrics in (
        (2, [{"family": "minkowski", "name": "mink", "n": 2}, {"family": "berwald_moor", "name": "bm", "n": 2}]),
        (4, [{"family": "minkowski", "name": "mink", "n": 4}]),
    ):
        probes = [
            {"name": f"spray-{m['name']}-{label}", "op": "spray_relation", "args": {"metric": m["name"], "sigma": sigma}, "samples": 200}
            for m in metrics
            for label, sigma in (("x0", "x0"), ("sin", "sin(x0)+x1"))
        ]
        experiments.append(_experiment(f"spray-relation-n{n}", n, metrics, probes))
    return experiments


def _weyl_suite() -> List[Dict[str, Any]]:
    metrics = [{"family": "minkowski", "name": "mink", "n": 2}, {"family": "berwald_moor", "name": "bm", "n": 2}]
    probes = [
        {"name": "similarity", "op": "weyl", "args": {"metric": "mink", "sigma": "1"}, "samples": 100},
        {"name": "witness-mink", "op": "weyl", "args": {"metric": "mink", "sigma": "x0"}, "samples": 200},
        {"name": "witness-bm", "op": "weyl", "args": {"metric": "bm", "sigma": "x0+x1"}, "samples": 200},
    ]
    return [_experiment("weyl", 2, metrics, probes)]


def _null_geodesics_suite() -> List[Dict[str, Any]]:
    probes = [
        {
            "name": "null-images",
            "op": "null_geodesics",
            "args": {"metric": "mink", "sigma": "sin(x0)", "starts": 10, "controls": 1, "t_end": 1.0, "h": 1e-3, "box": [0.0, 0.5]},
            "export_trajectory": True,
        }
    ]
    return [_experiment("null-geodesics", 2, [{"family": "minkowski", "name": "mink", "n": 2}], probes)]


def _conservation_suite() -> List[Dict[str, Any]]:
    flat = _experiment(
        "conservation-flat",
        2,
        [{"family": "minkowski", "name": "mink", "n": 2}],
        [
            {"name": "radial", "op": "conservation", "args": {"metric": "mink", "field": "radial", "starts": 10, "h": 1e-3}},
            {"name": "constant", "op": "conservation", "args": {"metric": "mink", "field": "constant", "starts": 10, "h": 1e-3}},
        ],
        fields=[{"name": "radial", "components": ["x0", "x1"]}, {"name": "constant", "components": ["1", "0.5"]}],
    )
    curved_chart = _experiment(
        "conservation-chart",
        2,
        [{"family": "minkowski", "name": "mink", "n": 2}, {"family": "pullback", "name": "chart", "base": "mink", "map": "stretch"}],
        [
            {"name": "killing", "op": "conservation", "args": {"metric": "chart", "field": "killing", "starts": 2, "h": 1e-2}},
            {"name": "dilation", "op": "conservation", "args": {"metric": "chart", "field": "dilation", "starts": 2, "h": 1e-2}},
        ],
        maps=[{"name": "stretch", "kind": "componentwise", "components": ["x0+x0^3", "x1"]}],
        fields=[
            {"name": "killing", "components": ["1/(1+3*x0^2)", "0"]},
            {"name": "dilation", "components": ["(x0+x0^3)/(1+3*x0^2)", "x1"]},
        ],
    )
    return [flat, curved_chart]


def _energy_suite() -> List[Dict[str, Any]]:
    metrics = [
        {"family": "minkowski", "name": "mink", "n": 2},
        {"family": "conformal", "name": "wavy", "base": "mink", "sigma": "sin(x0)"},
        {"family": "berwald_moor", "name": "bm", "n": 2},
        {"family": "conformal", "name": "bm_tilted", "base": "bm", "sigma": "0.3*(x0+x1)"},
    ]
    probes = [
        {"name": f"energy-{m['name']}", "op": "energy", "args": {"metric": m["name"], "starts": 3, "t_end": 1.0, "h": 1e-3, "order_h": 0.05}}
        for m in metrics
    ]
    return [_experiment("energy", 2, metrics, probes)]


def _associated_lemma_suite() -> List[Dict[str, Any]]:
    probes = [
        {"name": "signature", "op": "associated_metric", "args": {"metric": "bm", "field": "radial", "box": [0.25, 2.0]}, "samples": 50},
        {"name": "lemma", "op": "associated_lemma", "args": {"metric": "bm", "field": "radial", "eps": [0.05, 0.1, 0.2], "box": [0.25, 2.0]}, "samples": 10},
    ]
    return [
        _experiment(
            "associated-lemma",
            2,
            [{"family": "berwald_moor", "name": "bm", "n": 2}],
            probes,
            fields=[{"name": "radial", "components": ["x0", "x1"]}],
        )
    ]


def _rescaling_suite() -> List[Dict[str, Any]]:
    probes = [
        {"name": "radial-bm", "op": "essential_scan", "args": {"metric": "bm", "field": "radial", "grid": GRID, "expect_null": False}},
        {"name": "boost-mink", "op": "essential_scan", "args": {"metric": "mink", "field": "boost", "grid": GRID, "expect_null": True}},
    ]
    return [
        _experiment(
            "rescaling",
            2,
            [{"family": "berwald_moor", "name": "bm", "n": 2}, {"family": "minkowski", "name": "mink", "n": 2}],
            probes,
            fields=[{"name": "radial", "components": ["x0", "x1"]}, {"name": "boost", "components": ["x1", "x0"]}],
        )
    ]


def _conformal_fields_suite() -> List[Dict[str, Any]]:
    bm4 = _experiment(
        "conformal-fields-bm4",
        4,
        [{"family": "berwald_moor", "name": "bm", "n": 4}],
        [
            {"name": "radial", "op": "conformal_field", "args": {"metric": "bm", "field": "radial", "expect": "conformal", "expected_mu": "2"}, "samples": 10},
            {"name": "lie-vs-flow", "op": "lie_derivative", "args": {"metric": "bm", "field": "radial"}, "samples": 20},
        ],
        fields=[{"name": "radial", "components": ["x0", "x1", "x2", "x3"]}],
    )
    mink = _experiment(
        "conformal-fields-mink2",
        2,
        [{"family": "minkowski", "name": "mink", "n": 2}],
        [
            {"name": "constant", "op": "conformal_field", "args": {"metric": "mink", "field": "constant", "expect": "killing"}, "samples": 10},
            {"name": "boost", "op": "conformal_field", "args": {"metric": "mink", "field": "boost", "expect": "killing"}, "samples": 10},
            {"name": "lie-vs-flow", "op": "lie_derivative", "args": {"metric": "mink", "field": "boost"}, "samples": 30},
        ],
        fields=[{"name": "constant", "components": ["1", "0.5"]}, {"name": "boost", "components": ["x1", "x0"]}],
    )
    return [bm4, mink]


SUITES: Dict[str, Suite] = {
    "homogeneity": Suite("斉次性・Euler 恒等式・角計量 (n=2..4)", _homogeneity_suite()),
    "bm_conformal": Suite("Berwald–Moor の成分ごとの共形写像", _bm_conformal_suite()),
    "weighted_product": Suite("重み付き直積の共形因子", _weighted_product_suite()),
    "spray_relation": Suite("共形変形のスプレー関係式", _spray_relation_suite()),
    "weyl": Suite("相似写像と射影性の反例", _weyl_suite()),
    "null_geodesics": Suite("光的測地線の像の保存", _null_geodesics_suite()),
    "conservation": Suite("共形ベクトル場の保存量", _conservation_suite()),
    "energy": Suite("測地線に沿った L の保存と RK4 の次数", _energy_suite()),
    "associated_lemma": Suite("随伴計量と共形因子", _associated_lemma_suite()),
    "rescaling": Suite("非光的共形場の再スケールと Killing 性", _rescaling_suite()),
    "conformal_fields": Suite("共形ベクトル場の判定と Lie 微分", _conformal_fields_suite()),
}


def suite_names() -> List[str]:
    return list(SUITES)


def verify(name: str, *, seed: Optional[int] = None, jobs: Optional[int] = None) -> List[RunResult]:
    """Run every experiment of a suite; unknown names raise ``KeyError``."""

    suite = SUITES[name]
    results = []
    for data in suite.experiments:
        spec = parse_experiment(data)
        logger.info("suite %s: running %s", name, spec.name)
        results.append(run(spec, jobs=jobs, seed=seed))
    return results


__all__ = ["DEFAULT_SEED", "Suite", "SUITES", "suite_names", "verify"]

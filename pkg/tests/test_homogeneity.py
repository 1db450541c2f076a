from __future__ import annotations

import dataclasses

from calc.autodiff import ScalarField
from calc.tolerances import resolve
from core.io import parse_experiment
from core.probes import ProbeContext, probe_homogeneity
from core.runner import run
from models.experiment import ProbeDef
from tests.helpers import minimal_config


def test_homogeneity_skips_degenerate_metric(minkowski2):
    # g = diag(1, -1e-13) trips the degeneracy cutoff off the null cone
    thin = dataclasses.replace(
        minkowski2,
        field=ScalarField(2, lambda x, y: y[0] * y[0] - 1e-13 * y[1] * y[1], "thin"),
        signature=None,
    )
    probe = ProbeDef(name="thin", op="homogeneity", args={"metric": "thin"}, samples=20)
    outcome = probe_homogeneity(ProbeContext(dimension=2, metrics={"thin": thin}), probe, resolve(), 1)
    assert outcome.passed
    assert outcome.values["degenerate_skipped"] == 20
    assert outcome.values["angular_samples"] == 0
    assert len(outcome.series["scaling"]) == 20


def test_homogeneity_on_product_of_two_minkowski_planes():
    data = minimal_config(
        dimension=4,
        metrics=[
            {"family": "minkowski", "name": "mink2", "n": 2},
            {"family": "weighted_product", "name": "wp", "first": "mink2", "second": "mink2", "alpha": 0.3},
        ],
        probes=[{"name": "homogeneity", "op": "homogeneity", "args": {"metric": "wp"}, "samples": 200}],
    )
    (probe,) = run(parse_experiment(data)).report.probes
    assert probe.status == "pass"
    assert probe.values["angular_samples"] + probe.values["degenerate_skipped"] == 200

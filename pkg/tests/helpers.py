"""Small config builders shared by the runner and CLI tests."""
from __future__ import annotations

from typing import Any, Dict


def minimal_config(**overrides: Any) -> Dict[str, Any]:
    data: Dict[str, Any] = {
        "name": "minimal",
        "dimension": 2,
        "seed": 3,
        "metrics": [{"family": "minkowski", "name": "mink", "n": 2}],
        "probes": [],
    }
    data.update(overrides)
    return data

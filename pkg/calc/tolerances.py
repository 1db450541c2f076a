"""Shared numerical tolerances and their documented defaults."""
from __future__ import annotations

from typing import Dict, List, Mapping, Tuple

# Code, default value, description tuples. Every acceptance threshold used by a
# probe is looked up here and may be overridden per probe in the config.
TOLERANCES: List[Tuple[str, float, str]] = [
    ("null", 1e-9, "L の値がこの閾値(‖y‖²スケール)以下なら光的方向とみなす"),
    ("null_snap", 1e-12, "光的初期方向の二分法停止条件 |L| ≤ tol·‖y‖²"),
    ("null_cone", 1e-10, "錐上の Lie 微分チェックで用いる |L| の上限"),
    ("mu_floor", 1e-6, "μ̂ 推定に使う標本の |L| 下限"),
    ("eigen_cutoff", 1e-12, "固有値の符号判定に使う相対カットオフ"),
    ("degenerate", 1e-12, "|det g| ≤ tol·scaleⁿ で退化とみなす"),
    ("singular_jacobian", 1e-12, "|det Df| ≤ tol·scaleⁿ で特異とみなす"),
    ("domain_zero", 1e-12, "Berwald–Moor の |y^i| 下限"),
    ("symmetry", 1e-12, "ジェットの対称性チェック(相対)"),
    ("homogeneity", 1e-10, "L(x,2y)−4L と Euler 恒等式の許容誤差(相対)"),
    ("angular", 1e-9, "h_ij y^i の許容誤差(スケール倍)"),
    ("angular_trace", 1e-8, "h^ij g_ij − (n−1) の許容誤差"),
    ("spray_homogeneity", 1e-8, "G2(x,2y) − 4G2 の許容誤差(相対)"),
    ("horizontal", 1e-8, "δ_i L の許容誤差(スケール倍)"),
    ("connection_fd", 1e-5, "接続係数と差分の許容誤差(相対)"),
    ("fd", 1e-6, "有限差分オラクルとの許容誤差(相対)"),
    ("residual", 1e-8, "共形残差の許容誤差(相対)"),
    ("anisotropy", 1e-8, "共形因子推定の y 方向ばらつき"),
    ("sigma_match", 1e-10, "推定 σ̂ と閉形式との一致"),
    ("killing", 1e-8, "Killing 判定の max|μ̂|"),
    ("on_cone", 1e-8, "錐上での |𝓛L| の許容誤差(スケール倍)"),
    ("spray_relation", 1e-8, "スプレー関係式の許容誤差(相対)"),
    ("weyl", 1e-10, "相似写像におけるスプレー欠損の上限"),
    ("witness", 1e-3, "非射影性の証拠とみなす横断ノルム(スケール倍)"),
    ("image", 1e-4, "光的測地線の像距離の上限"),
    ("timelike_gap", 1e-3, "時間的測地線の像距離の下限(対照実験)"),
    ("resample", 1e-10, "再標本化の誤差上限"),
    ("conservation", 1e-7, "g(ċ,ξ) のドリフト上限"),
    ("conservation_ratio", 0.125, "刻み半減時のドリフト比の上限"),
    ("conservation_floor", 1e-12, "ドリフト比較を打ち切る下限"),
    ("energy", 1e-8, "L のドリフト上限"),
    ("order_low", 12.0, "刻み半減比の下限(RK4)"),
    ("order_high", 20.0, "刻み半減比の上限(RK4)"),
    ("energy_floor", 1e-13, "収束比を評価しないドリフト下限"),
    ("lemma", 1e-8, "g^ξ の引き戻し因子と Finsler 因子の一致"),
    ("flow_blowup", 1e12, "流れの発散判定ノルム"),
]


TOLERANCE_DEFAULTS: Dict[str, float] = {code: value for code, value, _ in TOLERANCES}

TOLERANCE_LABELS: Dict[str, str] = {code: label for code, _, label in TOLERANCES}

# Finite-difference steps used by the oracles.
FD_STEP: float = 1e-5
FLOW_FD_STEP: float = 1e-5
SAMPLING_REJECTION_FACTOR: int = 10_000
# Weighted-product samples keep L_k ≥ margin·‖y_k‖² in each factor.
PRODUCT_FACTOR_MARGIN: float = 1e-2
FLOW_SUBSTEPS: int = 100


def resolve(overrides: Mapping[str, float] | None = None) -> Dict[str, float]:
    """Return the default table merged with ``overrides``; unknown codes raise ``KeyError``."""

    merged = dict(TOLERANCE_DEFAULTS)
    for code, value in (overrides or {}).items():
        if code not in merged:
            raise KeyError(code)
        merged[code] = float(value)
    return merged


__all__ = [
    "TOLERANCES",
    "TOLERANCE_DEFAULTS",
    "TOLERANCE_LABELS",
    "FD_STEP",
    "FLOW_FD_STEP",
    "SAMPLING_REJECTION_FACTOR",
    "PRODUCT_FACTOR_MARGIN",
    "FLOW_SUBSTEPS",
    "resolve",
]

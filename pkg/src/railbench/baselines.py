"""Published MAE/MSE tables (percent) for the seven methods, kept as
render-only reference values. They are never used in any computation."""

from __future__ import annotations

KPIS = ("L", "T", "CDR", "RLF", "SE", "HOPP", "HOP")
METHODS = ("ABR", "GBR", "CBR", "SVR", "MLP", "KNNR", "KRR")
LABEL = "paper-reported (not reproduced)"

# (method, variant) -> values in KPIS order; variant "nested" is the starred row
_MAE = {
    ("ABR", "non-nested"): (0.48, 1.57, 36.92, 8.9, 36.73, 0.48, 1.5),
    ("ABR", "nested"): (0.28, 0.35, 7.5, 1.73, 7.5, 0.048, 0.23),
    ("GBR", "non-nested"): (0.3, 1.45, 35.40, 8.2, 35.40, 0.48, 1.48),
    ("GBR", "nested"): (0.02, 0.006, 0.09, 0.03, 0.09, 0.001, 0.03),
    ("CBR", "non-nested"): (0.3, 1.44, 35.68, 8.2, 35.68, 0.48, 1.48),
    ("CBR", "nested"): (0.04, 0.054, 2.22, 0.32, 2.22, 0.012, 0.4),
    ("SVR", "non-nested"): (1.79, 5.92, 207.2, 33.3, 207.2, 0.85, 3.8),
    ("SVR", "nested"): (1.76, 6.14, 204.3, 34.63, 204.3, 1.38, 5.02),
    ("MLP", "non-nested"): (1.13, 1.65, 158.8, 9.68, 157.9, 0.45, 1.08),
    ("MLP", "nested"): (1.01, 1.8, 151.2, 10.2, 149.8, 0.56, 1.22),
    ("KNNR", "non-nested"): (1.09, 2.2, 113.14, 12.36, 113.14, 0.5, 1.51),
    ("KNNR", "nested"): (0.72, 1.88, 62.45, 10.65, 62.45, 0.66, 1.9),
    ("KRR", "non-nested"): (0.91, 1.63, 114, 9.22, 114, 1.08, 2.62),
    ("KRR", "nested"): (0.83, 1.81, 106.9, 10.31, 106.87, 1.54, 3.7),
}

_MSE = {
    ("ABR", "non-nested"): (0.003, 0.036, 26.53, 1.15, 26.41, 0.006, 0.051),
    ("ABR", "nested"): (0.002, 0.003, 1.3, 0.07, 1.3, 4e-5, 9e-4),
    ("GBR", "non-nested"): (0.002, 0.033, 25.25, 1.07, 25.25, 0.006, 0.049),
    ("GBR", "nested"): (8e-5, 2e-5, 0.006, 0.0005, 0.006, 4e-7, 1e-6),
    ("CBR", "non-nested"): (0.002, 0.033, 25.32, 1.08, 25.32, 0.006, 0.049),
    ("CBR", "nested"): (5e-5, 0.0001, 0.15, 0.005, 0.15, 13e-5, 13e-5),
    ("SVR", "non-nested"): (0.089, 0.492, 1296, 15.67, 1296, 0.05, 0.45),
    ("SVR", "nested"): (0.088, 0.54, 1329, 17.12, 1329, 0.086, 0.7),
    ("MLP", "non-nested"): (0.019, 0.053, 380.3, 1.85, 377.25, 0.005, 0.036),
    ("MLP", "nested"): (0.017, 0.060, 340.93, 1.9, 334.37, 0.012, 0.054),
    ("KNNR", "non-nested"): (0.039, 0.079, 409.49, 2.5, 409.49, 0.006, 0.055),
    ("KNNR", "nested"): (0.026, 0.086, 256.83, 2.8, 256.83, 0.04, 0.21),
    ("KRR", "non-nested"): (0.013, 0.051, 235.72, 1.67, 235.72, 0.029, 0.173),
    ("KRR", "nested"): (0.012, 0.055, 201.6, 1.8, 201.6, 0.045, 0.26),
}


def baseline_table(metric: str) -> dict[tuple[str, str, str], float]:
    """(method, variant, kpi) -> percent value for ``metric`` in {"mae", "mse"}."""
    source = {"mae": _MAE, "mse": _MSE}[metric.lower()]
    return {(m, v, k): float(val) for (m, v), row in source.items() for k, val in zip(KPIS, row)}

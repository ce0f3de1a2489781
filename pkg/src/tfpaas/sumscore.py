"""Summated usability metric: four standardized component scores combined
into one weighted number.

The four components are task time, error rate, task completion and
satisfaction. Time and satisfaction are standardized against their own
sample spread (n-1 standard deviation); the two ratios are mapped through
the inverse standard normal CDF, clamped to the +/-3.49 range of a printed
normal table, so a zero error rate scores -3.49 and full completion +3.49.

Sign conventions are kept as declared, not "corrected": satisfaction above
the 3.0 scale midpoint contributes negatively.
"""

from __future__ import annotations

import argparse
import math
import statistics
import sys
from dataclasses import dataclass
from pathlib import Path

from .conventions import read_config
from .errors import (
    BadConfigError,
    BadWeightsError,
    DomainError,
    FieldError,
    IoError,
    TfpError,
    ZeroVarianceError,
)

Z_CLAMP = 3.49
EQUAL_WEIGHTS = (0.25, 0.25, 0.25, 0.25)

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Rational approximation coefficients for the normal quantile (Acklam).
_A = (
    -3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
    1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00,
)
_B = (
    -5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
    6.680131188771972e+01, -1.328068155288572e+01,
)
_C = (
    -7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
    -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00,
)
_D = (
    7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
    3.754408661907416e+00,
)
_P_LOW = 0.02425


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def inv_norm_cdf(p: float) -> float:
    """Standard normal quantile, |CDF(z) - p| < 1e-6 on (0, 1).

    A rational approximation sharpened by one Halley refinement step.
    """
    if not (isinstance(p, (int, float)) and 0.0 < p < 1.0):
        raise DomainError(f"p must be in (0, 1), got {p!r}")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = (
            ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        ) / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    elif p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        x = (
            ((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]
        ) * q / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0
        )
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(
            ((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]
        ) / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    # Halley refinement against the exact CDF.
    e = _norm_cdf(x) - p
    u = e * _SQRT_2PI * math.exp(x * x / 2.0)
    return x - u / (1.0 + x * u / 2.0)


def _clamped_z(p: float) -> float:
    if p <= 0.0:
        return -Z_CLAMP
    if p >= 1.0:
        return Z_CLAMP
    z = inv_norm_cdf(p)
    return max(-Z_CLAMP, min(Z_CLAMP, z))


def _sample_stddev(values: list[float] | tuple[float, ...], what: str) -> float:
    if len(values) < 2:
        raise DomainError(f"{what}: need at least 2 observations")
    sd = statistics.stdev(values)
    if sd == 0.0:
        raise ZeroVarianceError(f"{what}: all observations identical")
    return sd


def z_task_time(times_s, ideal_time_s: float) -> float:
    """Standardized headroom against the ideal task time: positive when the
    ideal exceeds the observed mean."""
    times = [float(t) for t in times_s]
    if any(not math.isfinite(t) or t < 0 for t in times):
        raise DomainError("task times must be finite and >= 0")
    if not (math.isfinite(ideal_time_s) and ideal_time_s > 0):
        raise DomainError(f"ideal time must be > 0, got {ideal_time_s!r}")
    return (ideal_time_s - statistics.fmean(times)) / _sample_stddev(times, "task times")


def z_error_rate(errors: int, opportunities: int) -> float:
    if not (isinstance(opportunities, int) and opportunities >= 1):
        raise DomainError("error opportunities must be a positive integer")
    if not (isinstance(errors, int) and 0 <= errors <= opportunities):
        raise DomainError("errors must be an integer in [0, opportunities]")
    return _clamped_z(errors / opportunities)


def z_completion(completed: int, attempted: int) -> float:
    if not (isinstance(attempted, int) and attempted >= 1):
        raise DomainError("attempted tasks must be a positive integer")
    if not (isinstance(completed, int) and 0 <= completed <= attempted):
        raise DomainError("completed must be an integer in [0, attempted]")
    return _clamped_z(completed / attempted)


def z_satisfaction(ratings) -> float:
    values = [float(r) for r in ratings]
    if any(not (1.0 <= r <= 5.0) for r in values):
        raise DomainError("ratings must lie in [1, 5]")
    return (3.0 - statistics.fmean(values)) / _sample_stddev(values, "ratings")


def _dot(weights, zs) -> float:
    return sum(w * z for w, z in zip(weights, zs))


@dataclass(frozen=True)
class SumScore:
    """The composite: four z-scores, their weights, and the weighted sum."""

    z_time: float
    z_error: float
    z_completion: float
    z_satisfaction: float
    weights: tuple[float, float, float, float] = EQUAL_WEIGHTS
    sum: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", tuple(self.weights))
        if self.sum != _dot(self.weights, self.zs):
            raise FieldError("sum", "must equal the weighted sum of the z-scores")

    @property
    def zs(self) -> tuple[float, float, float, float]:
        return (self.z_time, self.z_error, self.z_completion, self.z_satisfaction)

    @property
    def weighted(self) -> tuple[float, float, float, float]:
        return tuple(w * z for w, z in zip(self.weights, self.zs))


def _check_weights(weights) -> tuple[float, float, float, float]:
    weights = tuple(float(w) for w in weights)
    if len(weights) != 4:
        raise BadWeightsError(f"need exactly 4 weights, got {len(weights)}")
    if any(not math.isfinite(w) for w in weights):
        raise BadWeightsError("weights must be finite")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise BadWeightsError(f"weights must sum to 1, got {sum(weights)!r}")
    return weights


def sum_score(
    z_time: float,
    z_error: float,
    z_completion: float,
    z_satisfaction: float,
    weights=EQUAL_WEIGHTS,
) -> SumScore:
    weights = _check_weights(weights)
    zs = (z_time, z_error, z_completion, z_satisfaction)
    return SumScore(*zs, weights=weights, sum=_dot(weights, zs))


@dataclass(frozen=True)
class SumInputs:
    """Raw study observations the composite is computed from."""

    task_times_s: tuple[float, ...]
    ideal_time_s: float
    errors: int
    error_opportunities: int
    completed_tasks: int
    attempted_tasks: int
    ratings: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "task_times_s", tuple(self.task_times_s))
        object.__setattr__(self, "ratings", tuple(self.ratings))
        if len(self.task_times_s) < 2:
            raise DomainError("need at least 2 task times")
        if len(self.ratings) < 2:
            raise DomainError("need at least 2 ratings")
        if not (isinstance(self.attempted_tasks, int) and self.attempted_tasks >= 1):
            raise DomainError("attempted tasks must be a positive integer")
        if not 0 <= self.completed_tasks <= self.attempted_tasks:
            raise DomainError("completed must lie in [0, attempted]")
        if not (isinstance(self.error_opportunities, int) and self.error_opportunities >= 1):
            raise DomainError("error opportunities must be a positive integer")
        if not 0 <= self.errors <= self.error_opportunities:
            raise DomainError("errors must lie in [0, opportunities]")

    @property
    def error_ratio(self) -> float:
        return self.errors / self.error_opportunities

    @property
    def completion_ratio(self) -> float:
        return self.completed_tasks / self.attempted_tasks


def compute_sum(inputs: SumInputs, weights=EQUAL_WEIGHTS) -> SumScore:
    return sum_score(
        z_task_time(inputs.task_times_s, inputs.ideal_time_s),
        z_error_rate(inputs.errors, inputs.error_opportunities),
        z_completion(inputs.completed_tasks, inputs.attempted_tasks),
        z_satisfaction(inputs.ratings),
        weights=weights,
    )


# ---------------------------------------------------------------------------
# CLI


def _floats(entry: str) -> tuple[float, ...]:
    return tuple(float(token) for token in entry.split(",") if token.strip())


def _require(entries: dict[str, str], key: str) -> str:
    if key not in entries:
        raise BadConfigError(f"missing key {key!r}")
    return entries[key]


def parse_inputs(entries: dict[str, str]) -> tuple[SumInputs, tuple[float, ...]]:
    try:
        inputs = SumInputs(
            task_times_s=_floats(_require(entries, "task_times")),
            ideal_time_s=float(_require(entries, "ideal_time")),
            errors=int(_require(entries, "errors")),
            error_opportunities=int(_require(entries, "opportunities")),
            completed_tasks=int(_require(entries, "completed")),
            attempted_tasks=int(_require(entries, "attempted")),
            ratings=_floats(_require(entries, "ratings")),
        )
    except ValueError as exc:
        raise BadConfigError(f"bad numeric value: {exc}") from exc
    weights = EQUAL_WEIGHTS
    if "weights" in entries:
        try:
            weights = _floats(entries["weights"])
        except ValueError as exc:
            raise BadConfigError(f"bad weights: {exc}") from exc
    return inputs, weights


def _fmt(value: float) -> str:
    return f"{value:.6g}"


def render_table(inputs: SumInputs, score: SumScore) -> str:
    rows = [
        ("task time", "", score.z_time),
        ("error rate", _fmt(inputs.error_ratio), score.z_error),
        ("task completion", _fmt(inputs.completion_ratio), score.z_completion),
        ("satisfaction", "", score.z_satisfaction),
    ]
    lines = [f"{'metric':<16} {'ratio':>8} {'z-value':>10} {'weight':>8} {'weighted':>10}"]
    for (label, ratio, z), weight, weighted in zip(rows, score.weights, score.weighted):
        lines.append(
            f"{label:<16} {ratio:>8} {_fmt(z):>10} {_fmt(weight):>8} {_fmt(weighted):>10}"
        )
    lines.append(f"SUM {_fmt(score.sum)}")
    return "\n".join(lines)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="tfpsum",
        description="Compute the summated usability score from raw observations.",
    )
    parser.add_argument(
        "--input", required=True, metavar="FILE",
        help="key=value file: task_times, ideal_time, errors, opportunities, "
        "completed, attempted, ratings (and optional weights)",
    )
    args = parser.parse_args(argv)
    try:
        entries = read_config(Path(args.input))
        inputs, weights = parse_inputs(entries)
        score = compute_sum(inputs, weights)
    except IoError as exc:
        print(exc, file=sys.stderr)
        return 5
    except TfpError as exc:
        print(exc, file=sys.stderr)
        return 2
    print(render_table(inputs, score))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

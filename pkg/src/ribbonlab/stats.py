"""Paired-difference statistics in the exact reporting format of the
comparative study: paired t, one-tailed p, two-sided 95% CI, Likert
aggregation, and preference counts.

The Student-t machinery is self-contained for deterministic results:
the regularized incomplete beta function is evaluated by a modified
Lentz continued fraction to 1e-12, and critical t values come from
bisection on the forward CDF. one_tailed_p(t, df) is the left-tail
probability P(T <= t); callers pick the tail that matches their
hypothesis direction.
"""
from __future__ import annotations

import csv
import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ContractError, ParseError

_CF_EPS = 1e-12
_CF_TINY = 1e-300
_CF_MAX_ITER = 500


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_TINY:
        d = _CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_TINY:
            d = _CF_TINY
        c = 1.0 + aa / c
        if abs(c) < _CF_TINY:
            c = _CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ContractError("incomplete beta continued fraction did not converge")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ContractError("betainc requires a, b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def student_t_cdf(t: float, df: float) -> float:
    """P(T_df <= t)."""
    if df < 1:
        raise ContractError("degrees of freedom must be >= 1")
    if t == 0.0:
        return 0.5
    if math.isinf(t):
        return 0.0 if t < 0 else 1.0
    x = df / (df + t * t)
    tail = 0.5 * betainc_regularized(df / 2.0, 0.5, x)
    return tail if t < 0 else 1.0 - tail


def one_tailed_p(t: float, df: float) -> float:
    """Left-tail probability P(T_df <= t).

    Monotone increasing in t, so it is the one-tailed p for a
    negative-direction hypothesis; use one_tailed_p(-t, df) for the
    positive direction. one_tailed_p(t) + one_tailed_p(-t) == 1 exactly.
    """
    return student_t_cdf(t, df)


def t_critical(confidence: float, df: float) -> float:
    """Inverse t CDF by bisection on the forward CDF (confidence in (0, 1))."""
    if not (0.0 < confidence < 1.0):
        raise ContractError("confidence must lie in (0, 1)")
    if df < 1:
        raise ContractError("degrees of freedom must be >= 1")
    if confidence == 0.5:
        return 0.0
    lo, hi = (0.0, 1.0) if confidence > 0.5 else (-1.0, 0.0)
    # expand the bracket until it contains the quantile
    for _ in range(200):
        if confidence > 0.5 and student_t_cdf(hi, df) >= confidence:
            break
        if confidence < 0.5 and student_t_cdf(lo, df) <= confidence:
            break
        lo, hi = (hi, hi * 2.0) if confidence > 0.5 else (lo * 2.0, lo)
    else:
        raise ContractError("t quantile bracket expansion failed")
    if confidence > 0.5:
        lo = 0.0
    else:
        hi = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if student_t_cdf(mid, df) < confidence:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-13 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# paired-difference summaries
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PairedSummary:
    """Paired-difference report: n, mean, sample std (n-1), sem, t, one-tailed p, 95% CI."""

    n: int
    mean_diff: float
    std_diff: float
    sem: float
    t: float
    p_one_tailed: float
    ci95: tuple[float, float]


def t_from_summary(mean_diff: float, std: float, n: int) -> float:
    """t statistic from summary numbers: mean / (std / sqrt(n))."""
    if n < 2:
        raise ContractError("t_from_summary requires n >= 2")
    if std <= 0:
        raise ContractError("t_from_summary requires std > 0")
    return mean_diff / (std / math.sqrt(n))


def ci95(mean_diff: float, std: float, n: int) -> tuple[float, float]:
    """Two-sided 95% confidence interval: mean -/+ t_crit(0.975, n-1) * sem."""
    if n < 2:
        raise ContractError("ci95 requires n >= 2")
    if std < 0:
        raise ContractError("ci95 requires std >= 0")
    half = t_critical(0.975, n - 1) * std / math.sqrt(n)
    return (mean_diff - half, mean_diff + half)


def summary_from_moments(mean_diff: float, std: float, n: int,
                         direction: str = "less") -> PairedSummary:
    """PairedSummary from published (diff, std, n) numbers.

    direction: "less" reports P(T <= t); "greater" reports P(T >= t).
    """
    if n < 2:
        raise ContractError("paired summary requires n >= 2")
    if direction not in ("less", "greater"):
        raise ContractError("direction must be 'less' or 'greater'")
    sem = std / math.sqrt(n)
    if std == 0.0:
        if mean_diff == 0.0:
            t = 0.0
            p = 0.5
        else:
            t = math.inf if mean_diff > 0 else -math.inf
            p = student_t_cdf(t, n - 1) if direction == "less" else 1.0 - student_t_cdf(t, n - 1)
        return PairedSummary(n=n, mean_diff=mean_diff, std_diff=0.0, sem=0.0,
                             t=t, p_one_tailed=p, ci95=(mean_diff, mean_diff))
    t = t_from_summary(mean_diff, std, n)
    p = one_tailed_p(t, n - 1) if direction == "less" else one_tailed_p(-t, n - 1)
    return PairedSummary(n=n, mean_diff=mean_diff, std_diff=std, sem=sem,
                         t=t, p_one_tailed=p, ci95=ci95(mean_diff, std, n))


def paired_t(diffs: Sequence[float], direction: str = "less") -> PairedSummary:
    """Paired t-test over a sequence of within-pair differences.

    Zero variance with zero mean degenerates to t = 0, p = 0.5; zero
    variance with a nonzero mean reports t = +/-inf with p = 0 or 1.
    """
    diffs = [float(d) for d in diffs]
    if len(diffs) < 2:
        raise ContractError("paired_t requires at least 2 differences")
    n = len(diffs)
    mean = sum(diffs) / n
    var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
    std = math.sqrt(var)
    return summary_from_moments(mean, std, n, direction=direction)


# ---------------------------------------------------------------------------
# Likert scores & preference counts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LikertRecord:
    participant: str
    shape: str
    tool: str
    score: int

    def __post_init__(self):
        if not (1 <= self.score <= 5):
            raise ContractError(f"Likert score {self.score} outside 1..5")


def aggregate_likert(records: Sequence[LikertRecord]) -> dict[tuple[str, str], dict[str, float]]:
    """Per-(shape, tool) mean and median score."""
    if not records:
        raise ContractError("aggregate_likert requires at least one record")
    groups: dict[tuple[str, str], list[int]] = {}
    for rec in records:
        groups.setdefault((rec.shape, rec.tool), []).append(rec.score)
    return {
        key: {"avg": statistics.fmean(scores), "median": float(statistics.median(scores))}
        for key, scores in groups.items()
    }


def preference_counts(pairs: Sequence[tuple[float, float]]) -> tuple[int, int, int]:
    """(a_wins, ties, b_wins) over paired scores."""
    if not pairs:
        raise ContractError("preference_counts requires at least one pair")
    a_wins = sum(1 for a, b in pairs if a > b)
    ties = sum(1 for a, b in pairs if a == b)
    b_wins = sum(1 for a, b in pairs if a < b)
    return (a_wins, ties, b_wins)


# ---------------------------------------------------------------------------
# CSV ingestion / emission
# ---------------------------------------------------------------------------

MEASURES_COLUMNS = ["participant", "shape", "tool", "measure", "value"]


@dataclass(frozen=True)
class MeasureRecord:
    participant: str
    shape: str
    tool: str
    measure: str
    value: float


def read_measures_csv(path: str) -> list[MeasureRecord]:
    """Long-format study data: participant, shape, tool, measure, value."""
    out: list[MeasureRecord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in MEASURES_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ParseError(f"measures CSV lacks columns: {', '.join(missing)}")
        for i, row in enumerate(reader, start=2):
            try:
                out.append(MeasureRecord(
                    participant=row["participant"], shape=row["shape"],
                    tool=row["tool"], measure=row["measure"],
                    value=float(row["value"])))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"bad measures row: {exc}", line=i)
    return out


def paired_diffs(records: Iterable[MeasureRecord], measure: str,
                 tool_a: str, tool_b: str) -> list[float]:
    """Within-(participant, shape) differences tool_a - tool_b for one measure."""
    a_vals: dict[tuple[str, str], float] = {}
    b_vals: dict[tuple[str, str], float] = {}
    for rec in records:
        if rec.measure != measure:
            continue
        key = (rec.participant, rec.shape)
        if rec.tool == tool_a:
            a_vals[key] = rec.value
        elif rec.tool == tool_b:
            b_vals[key] = rec.value
    keys = sorted(set(a_vals) & set(b_vals))
    if not keys:
        raise ContractError(f"no paired observations for measure {measure!r}")
    return [a_vals[k] - b_vals[k] for k in keys]


def summary_rows(summaries: dict[str, PairedSummary]) -> list[list[str]]:
    header = ["measure", "n", "mean_diff", "std_diff", "sem", "t", "p_one_tailed",
              "ci95_lo", "ci95_hi"]
    rows = [header]
    for name in sorted(summaries):
        s = summaries[name]
        rows.append([name, str(s.n), repr(s.mean_diff), repr(s.std_diff), repr(s.sem),
                     repr(s.t), repr(s.p_one_tailed), repr(s.ci95[0]), repr(s.ci95[1])])
    return rows


def summaries_to_json(summaries: dict[str, PairedSummary]) -> str:
    """Canonical JSON document of PairedSummary tables (one key per measure)."""
    import json

    doc = {
        name: {
            "n": s.n, "mean_diff": s.mean_diff, "std_diff": s.std_diff,
            "sem": s.sem, "t": s.t, "p_one_tailed": s.p_one_tailed,
            "ci95": list(s.ci95),
        }
        for name, s in summaries.items()
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"

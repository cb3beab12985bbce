"""Correlation statistics against human scores, annotation aggregation
with IQR outlier removal, per-object/overall reporting, and a
Swiss-tournament scoring simulator.

Subjects score each distorted mesh 0..6 by winning pairwise comparisons
over six rounds; scores are aggregated to a mean opinion score per
(object, distortion) after discarding outliers beyond 1.5 IQR from the
quartiles. A metric is evaluated by correlating its (negated) distances
with the mean opinion scores per object and averaging the per-object
coefficients.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "AnnotationRecord",
    "AnnotationSet",
    "CorrelationReport",
    "average_ranks",
    "plcc",
    "srocc",
    "krocc",
    "iqr_filter",
    "confidence_interval",
    "mean_opinion_score",
    "mos_table",
    "correlation_report",
    "write_correlation_csv",
    "swiss_tournament",
    "load_annotations",
]

SCORE_MIN, SCORE_MAX = 0, 6


@dataclass(frozen=True)
class AnnotationRecord:
    object_id: str
    distortion_id: str
    material_id: str
    subject_id: str
    score: int


class AnnotationSet:
    """Validated collection of per-subject scores.

    Scores are integers in [0, 6]; the (object, distortion, material,
    subject) key must be unique.
    """

    def __init__(self, records):
        records = tuple(records)
        seen = set()
        for r in records:
            if not isinstance(r.score, (int, np.integer)) or not SCORE_MIN <= r.score <= SCORE_MAX:
                raise ValueError(
                    f"score must be an integer in [{SCORE_MIN}, {SCORE_MAX}], got {r.score!r}"
                )
            key = (r.object_id, r.distortion_id, r.material_id, r.subject_id)
            if key in seen:
                raise ValueError(f"duplicate annotation for {key}")
            seen.add(key)
        self.records = records

    def __len__(self):
        return len(self.records)

    def objects(self) -> list:
        return sorted({r.object_id for r in self.records})

    def distortions(self, object_id) -> list:
        return sorted(
            {r.distortion_id for r in self.records if r.object_id == object_id}
        )

    def select(self, object_id=None, distortion_id=None, material_id=None) -> list:
        out = []
        for r in self.records:
            if object_id is not None and r.object_id != object_id:
                continue
            if distortion_id is not None and r.distortion_id != distortion_id:
                continue
            if material_id is not None and r.material_id != material_id:
                continue
            out.append(r)
        return out


def load_annotations(path) -> AnnotationSet:
    """Read annotations from CSV (header object,distortion,material,
    subject,score) or from a JSON array of record objects."""
    path = Path(path)
    if path.suffix.lower() == ".json":
        rows = json.loads(path.read_text())
        records = [
            AnnotationRecord(
                object_id=str(r["object"]),
                distortion_id=str(r["distortion"]),
                material_id=str(r.get("material", "0")),
                subject_id=str(r["subject"]),
                score=int(r["score"]),
            )
            for r in rows
        ]
        return AnnotationSet(records)
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"object", "distortion", "material", "subject", "score"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise ValueError(
                f"{path}: annotation CSV needs columns {sorted(required)}"
            )
        records = [
            AnnotationRecord(
                object_id=row["object"],
                distortion_id=row["distortion"],
                material_id=row["material"],
                subject_id=row["subject"],
                score=int(row["score"]),
            )
            for row in reader
        ]
    return AnnotationSet(records)


# ---------------------------------------------------------------------------
# Correlation coefficients


def average_ranks(values) -> np.ndarray:
    """1-based ranks with ties averaged."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(len(v), dtype=np.float64)
    ranks[order] = np.arange(1, len(v) + 1, dtype=np.float64)
    for val in np.unique(v):
        mask = v == val
        if mask.sum() > 1:
            ranks[mask] = ranks[mask].mean()
    return ranks


def plcc(m, h) -> float:
    """Pearson's linear correlation coefficient."""
    m = np.asarray(m, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if len(m) != len(h) or len(m) < 3:
        raise ValueError("plcc needs two equal-length vectors with n >= 3")
    mc = m - m.mean()
    hc = h - h.mean()
    denom = np.sqrt((mc * mc).sum() * (hc * hc).sum())
    if denom == 0.0:
        raise ValueError("plcc undefined for constant input")
    return float((mc * hc).sum() / denom)


def srocc(m, h) -> float:
    """Spearman's rank order correlation via 1 - 6 sum(d^2) / (n(n^2-1)),
    with average ranks on ties."""
    m = np.asarray(m, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if len(m) != len(h) or len(m) < 3:
        raise ValueError("srocc needs two equal-length vectors with n >= 3")
    n = len(m)
    d = average_ranks(m) - average_ranks(h)
    return float(1.0 - 6.0 * (d * d).sum() / (n * (n * n - 1)))


def krocc(m, h) -> float:
    """Kendall's tau-a: (concordant - discordant) / (n(n-1)/2)."""
    m = np.asarray(m, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    if len(m) != len(h) or len(m) < 2:
        raise ValueError("krocc needs two equal-length vectors with n >= 2")
    n = len(m)
    sm = np.sign(m[:, None] - m[None, :])
    sh = np.sign(h[:, None] - h[None, :])
    upper = np.triu_indices(n, k=1)
    total = (sm[upper] * sh[upper]).sum()
    return float(total / (n * (n - 1) / 2))


# ---------------------------------------------------------------------------
# Score aggregation


def iqr_filter(scores) -> np.ndarray:
    """Keep scores within [Q1 - 1.5 IQR, Q3 + 1.5 IQR]; quartiles use
    linear interpolation of order statistics."""
    s = np.asarray(scores, dtype=np.float64)
    if len(s) < 4:
        raise ValueError("iqr_filter needs at least 4 scores")
    q1, q3 = np.percentile(s, [25, 75])
    iqr = q3 - q1
    return s[(s >= q1 - 1.5 * iqr) & (s <= q3 + 1.5 * iqr)]


def confidence_interval(scores, z: float = 1.96) -> float:
    """Half-width z * sigma / sqrt(N) with sample standard deviation."""
    s = np.asarray(scores, dtype=np.float64)
    if len(s) < 2:
        raise ValueError("confidence interval needs at least 2 scores")
    return float(z * s.std(ddof=1) / np.sqrt(len(s)))


def mean_opinion_score(annotations: AnnotationSet, object_id, distortion_id) -> float:
    """Mean of retained scores for one (object, distortion).

    IQR filtering runs per material cell (skipped for cells with fewer
    than 4 scores); the cell means are then averaged unweighted.
    """
    records = annotations.select(object_id=object_id, distortion_id=distortion_id)
    if not records:
        raise ValueError(f"no annotations for ({object_id}, {distortion_id})")
    cells = {}
    for r in records:
        cells.setdefault(r.material_id, []).append(r.score)
    means = []
    for scores in cells.values():
        retained = iqr_filter(scores) if len(scores) >= 4 else np.asarray(scores, float)
        if len(retained) == 0:
            raise ValueError(
                f"all scores removed by IQR for ({object_id}, {distortion_id})"
            )
        means.append(retained.mean())
    return float(np.mean(means))


def mos_table(annotations: AnnotationSet) -> dict:
    """{(object, distortion): mean opinion score} over the whole set."""
    out = {}
    for obj in annotations.objects():
        for dist in annotations.distortions(obj):
            out[(obj, dist)] = mean_opinion_score(annotations, obj, dist)
    return out


# ---------------------------------------------------------------------------
# Reporting


@dataclass(frozen=True)
class CorrelationReport:
    """Per-object correlation coefficients plus their unweighted mean.

    ``per_object`` maps object id to (plcc, srocc, krocc); ``overall``
    is the componentwise mean across objects.
    """

    metric_name: str
    per_object: dict
    overall: tuple

    def rows(self) -> list:
        out = [
            (self.metric_name, obj, *self.per_object[obj])
            for obj in sorted(self.per_object)
        ]
        out.append((self.metric_name, "Overall", *self.overall))
        return out


def correlation_report(
    metric_scores: dict,
    mos: dict,
    metric_name: str = "metric",
    higher_is_better: bool = False,
) -> CorrelationReport:
    """Correlate metric outputs with mean opinion scores per object.

    ``metric_scores`` and ``mos`` map (object, distortion) to values.
    Distances (lower is better) are negated before correlating so a
    well-aligned metric produces positive coefficients; pass
    ``higher_is_better=True`` for score-like metrics.
    """
    objects = sorted({obj for obj, _ in mos})
    per_object = {}
    for obj in objects:
        dists = sorted(d for o, d in mos if o == obj)
        if len(dists) < 3:
            raise ValueError(f"object {obj!r} has fewer than 3 distortions")
        missing = [d for d in dists if (obj, d) not in metric_scores]
        if missing:
            raise ValueError(f"metric scores missing for {obj!r}: {missing}")
        m = np.array([metric_scores[(obj, d)] for d in dists], dtype=np.float64)
        if not higher_is_better:
            m = -m
        h = np.array([mos[(obj, d)] for d in dists], dtype=np.float64)
        per_object[obj] = (plcc(m, h), srocc(m, h), krocc(m, h))
    coeffs = np.array(list(per_object.values()))
    overall = tuple(float(x) for x in coeffs.mean(axis=0))
    return CorrelationReport(metric_name=metric_name, per_object=per_object, overall=overall)


def write_correlation_csv(reports, path) -> None:
    """One row per (metric, object) plus an Overall row per metric."""
    if isinstance(reports, CorrelationReport):
        reports = [reports]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "object", "plcc", "srocc", "krocc"])
        for report in reports:
            for row in report.rows():
                writer.writerow(
                    [row[0], row[1]] + [f"{x:.6f}" for x in row[2:]]
                )


# ---------------------------------------------------------------------------
# Annotation simulator


def swiss_tournament(judge, items: int = 28, rounds: int = 6, seed: int = 0) -> np.ndarray:
    """Swiss-system pairwise scoring: per item, the final score is its
    number of round wins in [0, rounds].

    Round 1 pairs a random shuffle of the items; each later round sorts
    items by current score (ascending, stable) and pairs adjacent ones.
    ``judge(a, b)`` returns the index of the item judged closer to the
    reference. The total points awarded equal rounds * items / 2.
    """
    if items % 2 != 0:
        raise ValueError("swiss tournament needs an even item count")
    rng = np.random.default_rng(seed)
    scores = np.zeros(items, dtype=np.int64)
    order = rng.permutation(items)
    for rnd in range(rounds):
        if rnd > 0:
            order = np.argsort(scores, kind="stable")
        for k in range(0, items, 2):
            a, b = int(order[k]), int(order[k + 1])
            winner = judge(a, b)
            if winner not in (a, b):
                raise ValueError(f"judge returned {winner!r} for pair ({a}, {b})")
            scores[winner] += 1
    return scores

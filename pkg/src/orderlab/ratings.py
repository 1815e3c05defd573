"""Human acceptability ratings: ingestion, subject filtering, preferences.

Ratings are 1-5 integers. Subject filters mirror the usual crowdsourcing
criteria: native speakers with comprehension accuracy at or above threshold.
Preference values are mean rating differences (variant minus base), so they
sit on the rating scale rather than in bits.
"""

from __future__ import annotations

import csv
import itertools
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

from .contrasts import ContrastSpec, PreferenceRow, PreferenceTable
from .errors import DataError
from .stimuli import Experiment

_HEADER = ["subject_id", "native_speaker", "comprehension_accuracy", "item_id", "condition_key", "rating"]

_TRUE = {"true", "1", "yes", "y"}
_FALSE = {"false", "0", "no", "n"}


@dataclass(frozen=True)
class SubjectInfo:
    native_speaker: bool
    comprehension_accuracy: float


@dataclass(frozen=True)
class RatingRow:
    subject_id: str
    item_id: str
    condition_key: str
    rating: int


@dataclass
class RatingsTable:
    rows: list[RatingRow]
    subjects: dict[str, SubjectInfo]

    @property
    def subject_ids(self) -> list[str]:
        return sorted(self.subjects)

    def __eq__(self, other):
        if not isinstance(other, RatingsTable):
            return NotImplemented
        return self.rows == other.rows and self.subjects == other.subjects


@dataclass
class FilterReport:
    min_accuracy: float
    require_native: bool
    subjects_in: int
    subjects_kept: int
    dropped_subjects: list[str]
    rows_in: int
    rows_retained: int
    rows_dropped: int


def _parse_bool(raw: str, lineno: int) -> bool:
    low = raw.strip().lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    raise DataError(f"ratings line {lineno}: bad native_speaker value {raw!r}")


def load_ratings(path: str | Path, experiment: Experiment | None = None) -> RatingsTable:
    """Load and validate the ratings CSV.

    With an experiment given, item ids and condition keys are checked against
    its grid.
    """
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot read ratings file {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != _HEADER:
            raise DataError(
                f"ratings file {path} must have header {','.join(_HEADER)!r}, "
                f"got {reader.fieldnames}"
            )
        rows: list[RatingRow] = []
        subjects: dict[str, SubjectInfo] = {}
        seen: set[tuple[str, str, str]] = set()
        known_items = {item.id for item in experiment.items} if experiment else None
        known_keys = set(experiment.condition_keys()) if experiment else None
        for lineno, rec in enumerate(reader, start=2):
            try:
                rating = int(rec["rating"])
                accuracy = float(rec["comprehension_accuracy"])
            except (TypeError, ValueError):
                raise DataError(f"ratings line {lineno}: non-numeric rating or accuracy") from None
            if not 1 <= rating <= 5:
                raise DataError(f"ratings line {lineno}: rating {rating} outside 1-5")
            if not 0.0 <= accuracy <= 1.0:
                raise DataError(f"ratings line {lineno}: accuracy {accuracy} outside [0,1]")
            info = SubjectInfo(_parse_bool(rec["native_speaker"], lineno), accuracy)
            sid = rec["subject_id"]
            if sid in subjects and subjects[sid] != info:
                raise DataError(f"ratings line {lineno}: subject {sid!r} metadata changed mid-file")
            subjects[sid] = info
            key = (sid, rec["item_id"], rec["condition_key"])
            if key in seen:
                raise DataError(
                    f"ratings line {lineno}: duplicate (subject, item, condition) {key}"
                )
            seen.add(key)
            if known_items is not None and rec["item_id"] not in known_items:
                raise DataError(f"ratings line {lineno}: unknown item {rec['item_id']!r}")
            if known_keys is not None and rec["condition_key"] not in known_keys:
                raise DataError(
                    f"ratings line {lineno}: unknown condition key {rec['condition_key']!r}"
                )
            rows.append(RatingRow(sid, rec["item_id"], rec["condition_key"], rating))
    return RatingsTable(rows=rows, subjects=subjects)


def filter_subjects(
    rt: RatingsTable, min_accuracy: float = 0.8, require_native: bool = True
) -> tuple[RatingsTable, FilterReport]:
    """Retain subjects meeting the accuracy threshold (>=) and, if required,
    the native-speaker criterion. Idempotent."""
    keep = {
        sid
        for sid, info in rt.subjects.items()
        if info.comprehension_accuracy >= min_accuracy
        and (info.native_speaker or not require_native)
    }
    kept_rows = [r for r in rt.rows if r.subject_id in keep]
    report = FilterReport(
        min_accuracy=min_accuracy,
        require_native=require_native,
        subjects_in=len(rt.subjects),
        subjects_kept=len(keep),
        dropped_subjects=sorted(set(rt.subjects) - keep),
        rows_in=len(rt.rows),
        rows_retained=len(kept_rows),
        rows_dropped=len(rt.rows) - len(kept_rows),
    )
    filtered = RatingsTable(
        rows=kept_rows, subjects={sid: rt.subjects[sid] for sid in sorted(keep)}
    )
    return filtered, report


def _demeaned_ratings(rt: RatingsTable) -> dict[RatingRow, float]:
    """Subtract by-subject and by-item grand means, adding the grand mean back
    so values stay on the rating scale (Masson & Loftus style)."""
    by_subject: dict[str, list[int]] = defaultdict(list)
    by_item: dict[str, list[int]] = defaultdict(list)
    for r in rt.rows:
        by_subject[r.subject_id].append(r.rating)
        by_item[r.item_id].append(r.rating)
    grand = sum(r.rating for r in rt.rows) / len(rt.rows)
    s_mean = {s: sum(v) / len(v) for s, v in by_subject.items()}
    i_mean = {i: sum(v) / len(v) for i, v in by_item.items()}
    return {
        r: r.rating - s_mean[r.subject_id] - i_mean[r.item_id] + grand
        for r in rt.rows
    }


def _zscored(values: dict[RatingRow, float]) -> dict[RatingRow, float]:
    by_subject: dict[str, list[float]] = defaultdict(list)
    for r, v in values.items():
        by_subject[r.subject_id].append(v)
    stats = {}
    for s, vs in by_subject.items():
        mean = sum(vs) / len(vs)
        var = sum((v - mean) ** 2 for v in vs) / max(len(vs) - 1, 1)
        stats[s] = (mean, var**0.5 or 1.0)
    return {
        r: (v - stats[r.subject_id][0]) / stats[r.subject_id][1]
        for r, v in values.items()
    }


def cell_means(
    rt: RatingsTable, demean: bool = False, z_score: bool = False
) -> dict[tuple[str, str], float]:
    """Mean rating per (item, condition key), optionally demeaned/z-scored."""
    if not rt.rows:
        raise DataError("ratings table is empty")
    values: dict[RatingRow, float] = (
        _demeaned_ratings(rt) if demean else {r: float(r.rating) for r in rt.rows}
    )
    if z_score:
        values = _zscored(values)
    sums: dict[tuple[str, str], list[float]] = defaultdict(list)
    for r, v in values.items():
        sums[(r.item_id, r.condition_key)].append(v)
    return {cell: sum(vs) / len(vs) for cell, vs in sums.items()}


def human_preferences(
    rt: RatingsTable,
    spec: ContrastSpec,
    experiment: Experiment,
    demean: bool = False,
    z_score: bool = False,
    source_id: str = "human",
) -> PreferenceTable:
    """Per item and remaining condition cell: mean rating(variant) - mean
    rating(base).

    Demeaning is for interval estimation; point estimates use raw cell means
    so they stay interpretable on the 1-5 scale. Items missing a needed cell
    are excluded and recorded.
    """
    spec.validate_against(experiment)
    means = cell_means(rt, demean=demean, z_score=z_score)
    residual_factors = [
        f for f in experiment.within_factors if f.name != spec.order_factor
    ]
    rows: list[PreferenceRow] = []
    excluded: list[tuple[str, str]] = []
    residual_levels = [
        tuple(zip([f.name for f in residual_factors], combo))
        for combo in itertools.product(*[f.levels for f in residual_factors])
    ] or [()]
    for item in experiment.items:
        for stratum in residual_levels:
            assignments = dict(stratum)
            base_key = experiment.make_key({**assignments, spec.order_factor: spec.base})
            var_key = experiment.make_key({**assignments, spec.order_factor: spec.variant})
            base = means.get((item.id, base_key))
            var = means.get((item.id, var_key))
            if base is None or var is None:
                missing = base_key if base is None else var_key
                excluded.append((item.id, f"no retained ratings in cell {missing!r}"))
                continue
            levels = stratum + tuple(sorted(item.group_levels.items()))
            rows.append(
                PreferenceRow(source_id, item.id, spec.name, levels, var - base)
            )
    return PreferenceTable(
        source_id=source_id, contrast=spec.name, rows=rows, excluded_items=excluded
    )

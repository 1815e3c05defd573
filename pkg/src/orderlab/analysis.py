"""Order preferences, per-item interaction contrasts, and significance tests.

Analysis tag ``per_item_contrast``: with a 2x2 within-item design and one
observation per item-condition cell, the maximal mixed model's interaction
test reduces to the one-sample t test on per-item interaction contrasts, so
that test is what runs here. Human data is aggregated to by-item cell means
(after subject demeaning) and fed through the same machinery.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .contrasts import ContrastSpec, PreferenceRow, PreferenceTable
from .errors import DataError
from .ratings import RatingsTable, cell_means
from .scoring import SurprisalTable
from .stimuli import Experiment

ANALYSIS_TAG = "per_item_contrast"

FLAG_ZERO_VARIANCE = "zero_variance"
FLAG_INSUFFICIENT_ITEMS = "insufficient_items"


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: int
    p: float
    flags: tuple[str, ...] = ()


@dataclass
class InteractionResult:
    source_id: str
    contrast: str
    item_ids: list[str]
    values: list[float]
    mean: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None
    t: float | None = None
    df: int | None = None
    p_t: float | None = None
    p_perm: float | None = None
    n_perm: int | None = None
    seed: int | None = None
    flags: list[str] = field(default_factory=list)
    analysis: str = ANALYSIS_TAG

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    def to_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "contrast": self.contrast,
            "analysis": self.analysis,
            "n_items": self.n_items,
            "item_ids": self.item_ids,
            "values": self.values,
            "mean": self.mean,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "t": self.t,
            "df": self.df,
            "p_t": self.p_t,
            "p_perm": self.p_perm,
            "n_perm": self.n_perm,
            "seed": self.seed,
            "flags": self.flags,
        }


@dataclass
class ModelComparison:
    source_a: str
    source_b: str
    contrast: str
    item_ids: list[str]
    differences: list[float]
    mean_difference: float
    t: float
    df: int
    p: float
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "source_a": self.source_a,
            "source_b": self.source_b,
            "contrast": self.contrast,
            "analysis": ANALYSIS_TAG,
            "n_items": len(self.item_ids),
            "item_ids": self.item_ids,
            "differences": self.differences,
            "mean_difference": self.mean_difference,
            "t": self.t,
            "df": self.df,
            "p": self.p,
            "flags": self.flags,
        }


def t_test_one_sample(values, null: float = 0.0) -> TTestResult:
    """t = mean/(sd/sqrt(n)), df = n-1, two-sided p.

    Zero variance is flagged: p = 0 when the common value differs from the
    null, p = 1 when it equals it.
    """
    values = list(values)
    n = len(values)
    if n < 2:
        raise DataError(f"t test needs at least 2 values, got {n}")
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    sd = float(arr.std(ddof=1))
    df = n - 1
    if sd == 0.0:
        if mean == null:
            return TTestResult(t=0.0, df=df, p=1.0, flags=(FLAG_ZERO_VARIANCE,))
        return TTestResult(
            t=math.inf if mean > null else -math.inf,
            df=df,
            p=0.0,
            flags=(FLAG_ZERO_VARIANCE,),
        )
    t = (mean - null) / (sd / math.sqrt(n))
    p = 2.0 * float(stats.t.sf(abs(t), df))
    return TTestResult(t=t, df=df, p=p)


def contrast_ci(values, level: float = 0.95) -> tuple[float, float]:
    """One-sample t interval on per-item contrast values.

    Per-item contrasts are already by-item-demeaned quantities (differencing
    removes the item mean), so this is the contrast interval the figures use.
    """
    values = list(values)
    n = len(values)
    if n < 2:
        raise DataError(f"confidence interval needs at least 2 values, got {n}")
    if not 0.0 < level < 1.0:
        raise DataError(f"confidence level must be in (0,1), got {level}")
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    sd = float(arr.std(ddof=1))
    half = float(stats.t.ppf((1.0 + level) / 2.0, n - 1)) * sd / math.sqrt(n)
    return (mean - half, mean + half)


def _cell_value_lookup(st: SurprisalTable):
    return lambda item_id, key: st.total(item_id, key)


def _ratings_lookup(means: dict[tuple[str, str], float], source: str):
    def lookup(item_id: str, key: str) -> float:
        try:
            return means[(item_id, key)]
        except KeyError:
            raise DataError(f"{source}: no retained ratings for cell {item_id}::{key}") from None

    return lookup


def _residual_strata(exp: Experiment, spec: ContrastSpec) -> list[tuple[tuple[str, str], ...]]:
    skip = {spec.order_factor}
    if spec.moderator:
        skip.add(spec.moderator)
    residual = [f for f in exp.within_factors if f.name not in skip]
    strata = [
        tuple(zip([f.name for f in residual], combo))
        for combo in itertools.product(*[f.levels for f in residual])
    ]
    return strata or [()]


def order_preference(
    st: SurprisalTable, exp: Experiment, spec: ContrastSpec
) -> PreferenceTable:
    """Preference = S(variant) - S(base) in bits; positive favors the base order.

    One row per item and per level of the moderating factor (and residual
    within-item strata); between-item assignments ride along for grouping.
    """
    spec.validate_against(exp)
    lookup = _cell_value_lookup(st)
    return _preferences(lookup, exp, spec, st.backend_id)


def _preferences(lookup, exp: Experiment, spec: ContrastSpec, source_id: str) -> PreferenceTable:
    moderator_levels: tuple[str, ...]
    if spec.moderator:
        moderator_levels = tuple(spec.moderator_levels or exp.factor(spec.moderator).levels)
    rows: list[PreferenceRow] = []
    for item in exp.items:
        for stratum in _residual_strata(exp, spec):
            assignments = dict(stratum)
            mods = moderator_levels if spec.moderator else (None,)
            for m in mods:
                if m is not None:
                    assignments[spec.moderator] = m
                base_key = exp.make_key({**assignments, spec.order_factor: spec.base})
                var_key = exp.make_key({**assignments, spec.order_factor: spec.variant})
                value = lookup(item.id, var_key) - lookup(item.id, base_key)
                levels = tuple(sorted(assignments.items())) + tuple(sorted(item.group_levels.items()))
                rows.append(PreferenceRow(source_id, item.id, spec.name, levels, value))
    return PreferenceTable(source_id=source_id, contrast=spec.name, rows=rows)


def _interaction_cells(
    lookup, exp: Experiment, spec: ContrastSpec, items=None
) -> dict[str, tuple[float, float, float, float]]:
    """Per item: (S(m1,base), S(m1,variant), S(m2,base), S(m2,variant)),
    averaged over residual within-item strata."""
    if spec.moderator is None or spec.moderator_levels is None:
        raise DataError("interaction needs a moderator factor with two levels")
    m1, m2 = spec.moderator_levels
    out: dict[str, tuple[float, float, float, float]] = {}
    for item in items if items is not None else exp.items:
        acc = [0.0, 0.0, 0.0, 0.0]
        strata = _residual_strata(exp, spec)
        for stratum in strata:
            assignments = dict(stratum)
            for slot, (m, o) in enumerate(
                [(m1, spec.base), (m1, spec.variant), (m2, spec.base), (m2, spec.variant)]
            ):
                key = exp.make_key(
                    {**assignments, spec.moderator: m, spec.order_factor: o}
                )
                acc[slot] += lookup(item.id, key)
        n = len(strata)
        out[item.id] = tuple(v / n for v in acc)  # type: ignore[assignment]
    return out


def interaction_values(cells: dict[str, tuple[float, float, float, float]]) -> dict[str, float]:
    """I = (S(m1,base) - S(m1,variant)) - (S(m2,base) - S(m2,variant))."""
    return {
        item: (a - b) - (c - d) for item, (a, b, c, d) in cells.items()
    }


def _finish(result: InteractionResult, n_perm, seed, cells, level=0.95) -> InteractionResult:
    if result.n_items < 2:
        result.flags.append(FLAG_INSUFFICIENT_ITEMS)
        return result
    result.mean = float(np.mean(result.values))
    result.ci_low, result.ci_high = contrast_ci(result.values, level)
    tt = t_test_one_sample(result.values)
    result.t, result.df, result.p_t = tt.t, tt.df, tt.p
    result.flags.extend(f for f in tt.flags if f not in result.flags)
    if n_perm is not None:
        result.p_perm = _permutation_p(cells, n_perm, seed or 0)
        result.n_perm = n_perm
        result.seed = seed or 0
    return result


def interaction(
    st: SurprisalTable,
    exp: Experiment,
    spec: ContrastSpec,
    n_perm: int | None = None,
    seed: int | None = None,
) -> InteractionResult:
    """The per-item interaction statistic with its tests.

    Adding a constant to an item's four cells, or to both cells sharing a
    moderator level, leaves every value unchanged.
    """
    spec.validate_against(exp)
    cells = _interaction_cells(_cell_value_lookup(st), exp, spec)
    values = interaction_values(cells)
    result = InteractionResult(
        source_id=st.backend_id,
        contrast=spec.name,
        item_ids=list(values),
        values=[values[i] for i in values],
    )
    return _finish(result, n_perm, seed, cells)


def interaction_from_ratings(
    rt: RatingsTable,
    exp: Experiment,
    spec: ContrastSpec,
    n_perm: int | None = None,
    seed: int | None = None,
    source_id: str = "human",
    demean: bool = True,
) -> InteractionResult:
    """Same statistic on by-item mean ratings (subject-demeaned by default)."""
    spec.validate_against(exp)
    means = cell_means(rt, demean=demean)
    lookup = _ratings_lookup(means, source_id)
    needed = _needed_keys(exp, spec)
    usable, excluded = [], []
    for item in exp.items:
        missing = [k for k in needed if (item.id, k) not in means]
        if missing:
            excluded.append((item.id, f"no retained ratings in cell {missing[0]!r}"))
        else:
            usable.append(item)
    cells = _interaction_cells(lookup, exp, spec, items=usable)
    values = interaction_values(cells)
    result = InteractionResult(
        source_id=source_id,
        contrast=spec.name,
        item_ids=list(values),
        values=[values[i] for i in values],
    )
    if excluded:
        result.flags.append(f"excluded_items:{','.join(i for i, _ in excluded)}")
    return _finish(result, n_perm, seed, cells)


def _needed_keys(exp: Experiment, spec: ContrastSpec) -> list[str]:
    if spec.moderator is None or spec.moderator_levels is None:
        raise DataError("interaction needs a moderator factor with two levels")
    keys = []
    for stratum in _residual_strata(exp, spec):
        for m in spec.moderator_levels:
            for o in (spec.base, spec.variant):
                keys.append(
                    exp.make_key({**dict(stratum), spec.moderator: m, spec.order_factor: o})
                )
    return keys


def _permutation_p(
    cells: dict[str, tuple[float, float, float, float]], n_perm: int, seed: int
) -> float:
    """Sign-randomization null: per item and moderator level, swap the
    base/variant labels with probability one half.

    p = (1 + #{|mean I*| >= |mean I|}) / (1 + n_perm); deterministic in seed.
    """
    if n_perm < 1:
        raise DataError(f"n_perm must be >= 1, got {n_perm}")
    quads = np.array([cells[i] for i in cells], dtype=float)
    d1 = quads[:, 0] - quads[:, 1]  # m1: base - variant
    d2 = quads[:, 2] - quads[:, 3]  # m2: base - variant
    observed = abs(float(np.mean(d1 - d2)))
    rng = np.random.default_rng(seed)
    signs = rng.integers(0, 2, size=(n_perm, len(quads), 2)) * 2 - 1
    perms = signs[:, :, 0] * d1 + signs[:, :, 1] * (-d2)
    means = np.abs(perms.mean(axis=1))
    exceed = int(np.count_nonzero(means >= observed))
    return (1 + exceed) / (1 + n_perm)


def permutation_test(
    st: SurprisalTable,
    exp: Experiment,
    spec: ContrastSpec,
    n_perm: int = 10000,
    seed: int = 0,
) -> float:
    spec.validate_against(exp)
    cells = _interaction_cells(_cell_value_lookup(st), exp, spec)
    return _permutation_p(cells, n_perm, seed)


def compare_models(a: InteractionResult, b: InteractionResult) -> ModelComparison:
    """Paired t test on per-item interaction differences over shared items."""
    if a.contrast != b.contrast:
        raise DataError(
            f"cannot compare different contrasts {a.contrast!r} vs {b.contrast!r}"
        )
    va = dict(zip(a.item_ids, a.values))
    vb = dict(zip(b.item_ids, b.values))
    shared = sorted(set(va) & set(vb))
    if len(shared) < 2:
        raise DataError(f"model comparison needs >= 2 shared items, got {len(shared)}")
    diffs = [va[i] - vb[i] for i in shared]
    tt = t_test_one_sample(diffs)
    return ModelComparison(
        source_a=a.source_id,
        source_b=b.source_id,
        contrast=a.contrast,
        item_ids=shared,
        differences=diffs,
        mean_difference=float(np.mean(diffs)),
        t=tt.t,
        df=tt.df,
        p=tt.p,
        flags=list(tt.flags),
    )


def interaction_by_group(
    st: SurprisalTable,
    exp: Experiment,
    spec: ContrastSpec,
    n_perm: int | None = None,
    seed: int | None = None,
) -> dict[str, InteractionResult]:
    """Re-run the 2x2 interaction within each stratum of the grouping factor."""
    if spec.grouping is None:
        raise DataError("contrast spec names no grouping factor")
    gf = exp.factor(spec.grouping)
    out: dict[str, InteractionResult] = {}
    for level in gf.levels:
        items = [it for it in exp.items if it.group_levels.get(spec.grouping) == level]
        sub = Experiment(name=f"{exp.name}[{spec.grouping}={level}]", factors=exp.factors, items=items)
        cells = _interaction_cells(_cell_value_lookup(st), sub, spec)
        values = interaction_values(cells)
        result = InteractionResult(
            source_id=st.backend_id,
            contrast=f"{spec.name}[{spec.grouping}={level}]",
            item_ids=list(values),
            values=[values[i] for i in values],
        )
        out[level] = _finish(result, n_perm, seed, cells)
    return out


def group_difference(results: dict[str, InteractionResult]) -> dict:
    """Difference of grouping-stratum mean interactions (Welch two-sample t)."""
    if len(results) != 2:
        raise DataError("group difference is defined for exactly two strata")
    (la, ra), (lb, rb) = sorted(results.items())
    if ra.n_items < 2 or rb.n_items < 2:
        raise DataError("each stratum needs >= 2 items")
    t, p = stats.ttest_ind(ra.values, rb.values, equal_var=False)
    return {
        "stratum_a": la,
        "stratum_b": lb,
        "mean_a": ra.mean,
        "mean_b": rb.mean,
        "mean_difference": (ra.mean or 0.0) - (rb.mean or 0.0),
        "t": float(t),
        "p": float(p),
    }

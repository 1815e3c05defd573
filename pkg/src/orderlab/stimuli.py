"""Factorial stimulus experiments: definition, loading, validation, coverage.

An experiment maps every item to one sentence per cell of the within-item
factor grid. Between-item factors (e.g. animacy assigned per item) live in
``Item.group_levels`` and act as grouping variables in analysis.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError
from .tokenization import DEFAULT_SCHEME, tokenize

log = logging.getLogger(__name__)

WITHIN_ITEM = "within_item"
BETWEEN_ITEM = "between_item"


@dataclass(frozen=True)
class Factor:
    name: str
    levels: tuple[str, ...]
    scope: str = WITHIN_ITEM
    is_order_factor: bool = False


@dataclass(frozen=True)
class Condition:
    """An assignment of one level to every within-item factor.

    The canonical key joins levels with "|" in the experiment's declared
    factor order.
    """

    assignments: tuple[tuple[str, str], ...]

    @property
    def key(self) -> str:
        return "|".join(level for _, level in self.assignments)

    def level(self, factor: str) -> str:
        for name, lvl in self.assignments:
            if name == factor:
                return lvl
        raise KeyError(factor)


@dataclass
class Item:
    id: str
    cells: dict[str, str]
    group_levels: dict[str, str] = field(default_factory=dict)
    metadata: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Finding:
    item_id: str
    where: str
    kind: str
    message: str
    is_warning: bool = False


@dataclass
class ValidationReport:
    findings: list[Finding]

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if not f.is_warning]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.is_warning]

    @property
    def is_clean(self) -> bool:
        return not self.errors


@dataclass
class Experiment:
    name: str
    factors: list[Factor]
    items: list[Item]

    @property
    def within_factors(self) -> list[Factor]:
        return [f for f in self.factors if f.scope == WITHIN_ITEM]

    @property
    def between_factors(self) -> list[Factor]:
        return [f for f in self.factors if f.scope == BETWEEN_ITEM]

    @property
    def order_factor(self) -> Factor:
        for f in self.factors:
            if f.is_order_factor:
                return f
        raise DataError(f"experiment {self.name!r} declares no order factor")

    def factor(self, name: str) -> Factor:
        for f in self.factors:
            if f.name == name:
                return f
        raise DataError(f"experiment {self.name!r} has no factor {name!r}")

    def conditions(self) -> list[Condition]:
        """All cells of the within-item grid, in declared factor order."""
        names = [f.name for f in self.within_factors]
        level_sets = [f.levels for f in self.within_factors]
        return [
            Condition(tuple(zip(names, combo)))
            for combo in itertools.product(*level_sets)
        ]

    def condition_keys(self) -> list[str]:
        return [c.key for c in self.conditions()]

    def parse_condition_key(self, key: str) -> Condition:
        parts = key.split("|")
        within = self.within_factors
        if len(parts) != len(within):
            raise DataError(
                f"condition key {key!r} has {len(parts)} parts; "
                f"experiment declares {len(within)} within-item factors"
            )
        for f, level in zip(within, parts):
            if level not in f.levels:
                raise DataError(
                    f"condition key {key!r}: {level!r} is not a level of factor {f.name!r}"
                )
        return Condition(tuple((f.name, lvl) for f, lvl in zip(within, parts)))

    def make_key(self, assignments: dict[str, str]) -> str:
        missing = [f.name for f in self.within_factors if f.name not in assignments]
        if missing:
            raise DataError(f"assignments missing within-item factors: {missing}")
        return "|".join(assignments[f.name] for f in self.within_factors)


class ExperimentSchemaError(DataError):
    def __init__(self, message: str, report: ValidationReport | None = None):
        super().__init__(message)
        self.report = report


def _check_factors(name: str, factors: list[Factor]) -> None:
    seen: set[str] = set()
    for f in factors:
        if f.name in seen:
            raise ExperimentSchemaError(f"duplicate factor name {f.name!r}")
        seen.add(f.name)
        if len(f.levels) < 2:
            raise ExperimentSchemaError(f"factor {f.name!r} needs at least 2 levels")
        if len(set(f.levels)) != len(f.levels) or any(not lvl for lvl in f.levels):
            raise ExperimentSchemaError(f"factor {f.name!r} has duplicate or empty levels")
    order = [f for f in factors if f.is_order_factor]
    if len(order) != 1:
        raise ExperimentSchemaError(
            f"experiment {name!r} must designate exactly one order factor, found {len(order)}"
        )
    if order[0].scope != WITHIN_ITEM:
        raise ExperimentSchemaError(
            f"order factor {order[0].name!r} must be within-item (the alternation varies per item)"
        )


def validate(exp: Experiment) -> ValidationReport:
    """Check grid completeness, sentence contents, and group-level assignments.

    Findings are data, not errors; is_clean is true iff none are error-grade.
    """
    findings: list[Finding] = []
    expected = set(exp.condition_keys())
    for item in exp.items:
        have = set(item.cells)
        for key in sorted(expected - have):
            findings.append(Finding(item.id, key, "missing_cell", f"missing cell {key!r}"))
        for key in sorted(have - expected):
            findings.append(Finding(item.id, key, "extra_cell", f"cell {key!r} not in the factor grid"))
        for key in sorted(have & expected):
            if not item.cells[key].strip():
                findings.append(Finding(item.id, key, "empty_sentence", "empty sentence"))
        if "::" in item.id:
            findings.append(Finding(item.id, "id", "bad_item_id", "item id must not contain '::'"))
        for f in exp.between_factors:
            lvl = item.group_levels.get(f.name)
            if lvl is None:
                findings.append(
                    Finding(item.id, f.name, "missing_group_level",
                            f"no level assigned for between-item factor {f.name!r}")
                )
            elif lvl not in f.levels:
                findings.append(
                    Finding(item.id, f.name, "undeclared_level",
                            f"level {lvl!r} not declared for factor {f.name!r}")
                )
        for extra in sorted(set(item.group_levels) - {f.name for f in exp.between_factors}):
            findings.append(
                Finding(item.id, extra, "unknown_group_factor",
                        f"group level given for unknown factor {extra!r}")
            )
        # Duplicate sentences across cells are legal in degenerate items; warn only.
        by_sentence: dict[str, list[str]] = {}
        for key in sorted(have & expected):
            by_sentence.setdefault(item.cells[key].strip(), []).append(key)
        for sentence, keys in by_sentence.items():
            if sentence and len(keys) > 1:
                findings.append(
                    Finding(item.id, ",".join(keys), "duplicate_sentence",
                            f"cells {keys} share one sentence", is_warning=True)
                )
    return ValidationReport(findings)


def experiment_from_dict(data: dict) -> Experiment:
    try:
        factors = [
            Factor(
                name=f["name"],
                levels=tuple(f["levels"]),
                scope=f.get("scope", WITHIN_ITEM),
                is_order_factor=bool(f.get("is_order_factor", False)),
            )
            for f in data["factors"]
        ]
        items = [
            Item(
                id=str(it["id"]),
                cells=dict(it["cells"]),
                group_levels=dict(it.get("group_levels", {})),
                metadata=dict(it.get("metadata", {})),
            )
            for it in data["items"]
        ]
        name = data["name"]
    except (KeyError, TypeError) as exc:
        raise ExperimentSchemaError(f"experiment file is missing required structure: {exc}") from exc
    for f in factors:
        if f.scope not in (WITHIN_ITEM, BETWEEN_ITEM):
            raise ExperimentSchemaError(f"factor {f.name!r} has unknown scope {f.scope!r}")
    _check_factors(name, factors)
    ids = [it.id for it in items]
    for dup in sorted({i for i in ids if ids.count(i) > 1}):
        raise ExperimentSchemaError(f"duplicate item id {dup!r}")
    exp = Experiment(name=name, factors=factors, items=items)
    # Condition keys must parse against the declared grid before deeper checks.
    for item in items:
        for key in item.cells:
            try:
                exp.parse_condition_key(key)
            except DataError as exc:
                raise ExperimentSchemaError(f"item {item.id!r}: {exc}") from exc
    report = validate(exp)
    if not report.is_clean:
        first = report.errors[0]
        raise ExperimentSchemaError(
            f"experiment {name!r} failed validation "
            f"({len(report.errors)} findings; first: item {first.item_id!r} {first.message})",
            report,
        )
    for w in report.warnings:
        log.warning("experiment %s item %s: %s", name, w.item_id, w.message)
    return exp


def experiment_to_dict(exp: Experiment) -> dict:
    return {
        "name": exp.name,
        "factors": [
            {
                "name": f.name,
                "levels": list(f.levels),
                "scope": f.scope,
                "is_order_factor": f.is_order_factor,
            }
            for f in exp.factors
        ],
        "items": [
            {
                "id": it.id,
                "group_levels": dict(it.group_levels),
                "metadata": dict(it.metadata),
                "cells": dict(it.cells),
            }
            for it in exp.items
        ],
    }


def load_experiment(path: str | Path) -> Experiment:
    """Load and validate a structured experiment file (JSON object model)."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read experiment file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ExperimentSchemaError(f"experiment file {path} is not valid JSON: {exc}") from exc
    return experiment_from_dict(data)


def save_experiment(exp: Experiment, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(experiment_to_dict(exp), fh, indent=2, sort_keys=False)
        fh.write("\n")


@dataclass
class CoverageReport:
    unknown_by_cell: dict[tuple[str, str], tuple[str, ...]]
    total_tokens: int
    unknown_tokens: int

    @property
    def oov_rate(self) -> float:
        if self.total_tokens == 0:
            return 0.0
        return self.unknown_tokens / self.total_tokens


def vocabulary_coverage(
    exp: Experiment, lexicon: set[str] | frozenset[str], scheme: str = DEFAULT_SCHEME
) -> CoverageReport:
    """List the tokens of each cell missing from a lexicon.

    OOV tokens distort surprisal contrasts, so scoring runs attach this
    report for native backends.
    """
    unknown_by_cell: dict[tuple[str, str], tuple[str, ...]] = {}
    total = 0
    unknown = 0
    for item in exp.items:
        for key in exp.condition_keys():
            toks = tokenize(item.cells[key], scheme).tokens
            total += len(toks)
            missing = tuple(t for t in toks if t not in lexicon)
            unknown += len(missing)
            if missing:
                unknown_by_cell[(item.id, key)] = missing
    return CoverageReport(unknown_by_cell, total, unknown)

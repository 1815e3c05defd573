"""Contrast specifications and preference tables shared by analysis paths."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataError
from .stimuli import WITHIN_ITEM, Experiment


@dataclass(frozen=True)
class ContrastSpec:
    """Names the order contrast and, for interactions, the moderating factor.

    ``base`` is the canonical order; positive surprisal preferences mean the
    base order is preferred. ``moderator_levels`` fixes the (m1, m2) roles in
    the interaction statistic. ``grouping`` names an optional between-item
    factor used to stratify results.
    """

    order_factor: str
    base: str
    variant: str
    moderator: str | None = None
    moderator_levels: tuple[str, str] | None = None
    grouping: str | None = None

    @property
    def name(self) -> str:
        label = f"{self.variant}-vs-{self.base}"
        if self.moderator:
            label += f"_by_{self.moderator}"
        return label

    def swapped(self) -> "ContrastSpec":
        return ContrastSpec(
            self.order_factor, self.variant, self.base,
            self.moderator, self.moderator_levels, self.grouping,
        )

    def validate_against(self, exp: Experiment) -> None:
        if self.base == self.variant:
            raise DataError("contrast base and variant levels must differ")
        f = exp.factor(self.order_factor)
        if f.scope != WITHIN_ITEM:
            raise DataError(f"contrast factor {self.order_factor!r} must be within-item")
        for level in (self.base, self.variant):
            if level not in f.levels:
                raise DataError(f"{level!r} is not a level of factor {self.order_factor!r}")
        if self.moderator is not None:
            if self.moderator == self.order_factor:
                raise DataError("moderator must differ from the order factor")
            mf = exp.factor(self.moderator)
            if mf.scope != WITHIN_ITEM:
                raise DataError(f"moderator {self.moderator!r} must be within-item")
            if self.moderator_levels is None or len(self.moderator_levels) != 2:
                raise DataError("an interaction contrast needs exactly two moderator levels")
            for level in self.moderator_levels:
                if level not in mf.levels:
                    raise DataError(f"{level!r} is not a level of factor {self.moderator!r}")
        if self.grouping is not None:
            gf = exp.factor(self.grouping)
            if gf.scope == WITHIN_ITEM:
                raise DataError(f"grouping factor {self.grouping!r} must be between-item")


def load_contrast_spec(path: str | Path) -> ContrastSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read contrast spec {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"contrast spec {path} is not valid JSON: {exc}") from exc
    try:
        moderator = data.get("moderator")
        levels = data.get("moderator_levels")
        return ContrastSpec(
            order_factor=data["order_factor"],
            base=data["base"],
            variant=data["variant"],
            moderator=moderator,
            moderator_levels=tuple(levels) if levels else None,
            grouping=data.get("grouping"),
        )
    except KeyError as exc:
        raise DataError(f"contrast spec {path} is missing field {exc}") from exc


def save_contrast_spec(spec: ContrastSpec, path: str | Path) -> None:
    data = {
        "order_factor": spec.order_factor,
        "base": spec.base,
        "variant": spec.variant,
    }
    if spec.moderator:
        data["moderator"] = spec.moderator
        data["moderator_levels"] = list(spec.moderator_levels or ())
    if spec.grouping:
        data["grouping"] = spec.grouping
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class PreferenceRow:
    source_id: str
    item_id: str
    contrast: str
    levels: tuple[tuple[str, str], ...]  # moderator/residual/grouping assignments
    value: float

    def level(self, factor: str) -> str | None:
        for name, lvl in self.levels:
            if name == factor:
                return lvl
        return None


@dataclass
class PreferenceTable:
    source_id: str
    contrast: str
    rows: list[PreferenceRow]
    excluded_items: list[tuple[str, str]] = field(default_factory=list)

    def values(self, **levels: str) -> list[float]:
        out = []
        for row in self.rows:
            if all(row.level(f) == lvl for f, lvl in levels.items()):
                out.append(row.value)
        return out

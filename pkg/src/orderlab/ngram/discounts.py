"""Closed-form discount estimation for modified Kneser-Ney smoothing.

Three discounts per order, by count class (1, 2, 3+), from the counts of
counts at that order. Degenerate counts of counts fall back to a fixed 0.75
with a warning record rather than failing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .counts import CountTable

DMAX = 2.999
FALLBACK_DISCOUNT = 0.75


@dataclass(frozen=True)
class OrderDiscounts:
    d1: float
    d2: float
    d3plus: float

    def for_count(self, count: int) -> float:
        if count >= 3:
            return self.d3plus
        if count == 2:
            return self.d2
        return self.d1


@dataclass
class Discounts:
    """Discounts for orders 2..N; unigrams are not discounted."""

    by_order: dict[int, OrderDiscounts]
    warnings: list[str] = field(default_factory=list)


def _clamp(value: float, order: int, label: str, warnings: list[str]) -> float:
    clamped = min(max(value, 0.0), DMAX)
    if clamped != value:
        warnings.append(f"order {order}: {label} = {value:.4f} clamped to {clamped:.4f}")
    return clamped


def discounts_from_counts_of_counts(
    n1: int, n2: int, n3: int, n4: int, order: int = 0
) -> tuple[OrderDiscounts, list[str]]:
    """Chen-Goodman estimator; falls back to 0.75 where undefined."""
    warnings: list[str] = []
    if n1 == 0 or n2 == 0:
        warnings.append(
            f"order {order}: degenerate counts of counts (n1={n1}, n2={n2}); "
            f"using fixed discount {FALLBACK_DISCOUNT}"
        )
        d = FALLBACK_DISCOUNT
        return OrderDiscounts(d, d, d), warnings
    y = n1 / (n1 + 2 * n2)
    d1 = _clamp(1.0 - 2.0 * y * n2 / n1, order, "D1", warnings)
    d2 = _clamp(2.0 - 3.0 * y * n3 / n2, order, "D2", warnings)
    if n3 == 0:
        # No count-3 class to anchor D3+; discount any 3+ entries conservatively.
        warnings.append(f"order {order}: n3=0; using fixed D3+ {FALLBACK_DISCOUNT}")
        d3 = FALLBACK_DISCOUNT
    else:
        d3 = _clamp(3.0 - 4.0 * y * n4 / n3, order, "D3+", warnings)
    return OrderDiscounts(d1, d2, d3), warnings


def estimate_discounts(counts: CountTable) -> Discounts:
    by_order: dict[int, OrderDiscounts] = {}
    warnings: list[str] = []
    for k in range(2, counts.order + 1):
        n1, n2, n3, n4 = counts.counts_of_counts(k)
        od, w = discounts_from_counts_of_counts(n1, n2, n3, n4, order=k)
        by_order[k] = od
        warnings.extend(w)
    return Discounts(by_order=by_order, warnings=warnings)

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orderlab.analysis import (
    FLAG_INSUFFICIENT_ITEMS,
    FLAG_ZERO_VARIANCE,
    compare_models,
    contrast_ci,
    group_difference,
    interaction,
    interaction_by_group,
    interaction_values,
    order_preference,
    permutation_test,
    t_test_one_sample,
)
from orderlab.contrasts import ContrastSpec
from orderlab.errors import DataError
from orderlab.scoring import PerTokenSurprisals, SurprisalRow, SurprisalTable
from orderlab.stimuli import BETWEEN_ITEM, Experiment, Factor, Item

from conftest import make_experiment


def spec_2x2():
    return ContrastSpec("order", base="std", variant="shifted",
                        moderator="np_length", moderator_levels=("long", "short"))


def table_from_cells(cells: dict[str, dict[str, float]], backend_id="m") -> SurprisalTable:
    """cells: item -> condition_key -> total bits."""
    rows = []
    for item_id, conds in cells.items():
        for key, total in conds.items():
            detail = PerTokenSurprisals(f"{item_id}::{key}", ("x",), (total,))
            rows.append(SurprisalRow(backend_id, item_id, key, total, detail))
    return SurprisalTable(backend_id=backend_id, rows=rows)


def quad(m1_base, m1_var, m2_base, m2_var):
    # moderator_levels = (long, short): m1=long, m2=short
    return {
        "std|long": m1_base, "shifted|long": m1_var,
        "std|short": m2_base, "shifted|short": m2_var,
    }


def test_preference_subtraction():
    st_ = table_from_cells({"item1": quad(50.0, 53.5, 50.0, 53.5)})
    prefs = order_preference(st_, make_experiment(1), spec_2x2())
    assert prefs.values(np_length="long") == [pytest.approx(3.5)]


def test_preference_zero_for_identical_cells():
    st_ = table_from_cells({"item1": quad(42.0, 42.0, 42.0, 42.0)})
    prefs = order_preference(st_, make_experiment(1), spec_2x2())
    assert [r.value for r in prefs.rows] == [0.0, 0.0]


def test_preference_two_values_per_2x2_item():
    st_ = table_from_cells({"item1": quad(1, 2, 3, 4), "item2": quad(5, 6, 7, 8)})
    prefs = order_preference(st_, make_experiment(2), spec_2x2())
    assert len(prefs.rows) == 4


def test_preference_sign_audit():
    st_ = table_from_cells({"item1": quad(1.0, 4.0, 2.0, 2.5)})
    exp = make_experiment(1)
    fwd = order_preference(st_, exp, spec_2x2())
    rev = order_preference(st_, exp, spec_2x2().swapped())
    for a, b in zip(fwd.rows, rev.rows):
        assert a.value == -b.value


def test_missing_cell_named():
    st_ = table_from_cells({"item1": {"std|long": 1.0, "shifted|long": 2.0, "std|short": 3.0}})
    with pytest.raises(DataError, match=r"shifted\|short"):
        order_preference(st_, make_experiment(1), spec_2x2())


def test_interaction_formula():
    # S in formula order: (m1,base)=5, (m1,variant)=7, (m2,base)=10, (m2,variant)=9
    st_ = table_from_cells({"item1": quad(5.0, 7.0, 10.0, 9.0), "item2": quad(5.0, 7.0, 10.0, 9.0)})
    res = interaction(st_, make_experiment(2), spec_2x2())
    assert res.values == [pytest.approx(-3.0)] * 2
    assert res.mean == pytest.approx(-3.0)


def test_interaction_zero_when_cells_equal():
    st_ = table_from_cells({"item1": quad(4, 4, 4, 4), "item2": quad(9, 9, 9, 9)})
    res = interaction(st_, make_experiment(2), spec_2x2())
    assert res.values == [0.0, 0.0]


def test_interaction_invariances_exact():
    base = {"item1": quad(55.0, 57.0, 60.0, 59.0), "item2": quad(51.0, 52.0, 53.0, 55.0)}
    exp = make_experiment(2)
    ref = interaction(table_from_cells(base), exp, spec_2x2()).values
    # per-item constant
    shifted = {
        item: {k: v + (11.5 if item == "item1" else -3.25) for k, v in conds.items()}
        for item, conds in base.items()
    }
    assert interaction(table_from_cells(shifted), exp, spec_2x2()).values == ref
    # constant on both cells sharing a moderator level (the long cells)
    bumped = {
        item: {k: v + (7.75 if k.endswith("|long") else 0.0) for k, v in conds.items()}
        for item, conds in base.items()
    }
    assert interaction(table_from_cells(bumped), exp, spec_2x2()).values == ref


def test_single_item_flagged_without_tests():
    st_ = table_from_cells({"item1": quad(5, 7, 10, 9)})
    res = interaction(st_, make_experiment(1), spec_2x2())
    assert res.values == [pytest.approx(-3.0)]
    assert FLAG_INSUFFICIENT_ITEMS in res.flags
    assert res.p_t is None and res.ci_low is None


def test_contrast_ci_zero_variance():
    assert contrast_ci([2.0, 2.0, 2.0]) == (pytest.approx(2.0), pytest.approx(2.0))


def test_contrast_ci_two_values_against_t_table():
    low, high = contrast_ci([-1.0, 1.0], 0.95)
    # t_{0.975, df=1} = 12.7062 from published t tables
    assert high == pytest.approx(12.7062, abs=1e-3)
    assert low == pytest.approx(-12.7062, abs=1e-3)


def test_contrast_ci_needs_two_values():
    with pytest.raises(DataError):
        contrast_ci([1.0])


def test_t_quantiles_against_fixture_table():
    # Independent oracle: published two-sided critical values t_{0.975,df}.
    from scipy import stats

    fixtures = {1: 12.7062, 2: 4.3027, 5: 2.5706, 10: 2.2281, 30: 2.0423, 100: 1.9840}
    for df, crit in fixtures.items():
        assert float(stats.t.ppf(0.975, df)) == pytest.approx(crit, abs=1e-3)
        assert 2 * float(stats.t.sf(crit, df)) == pytest.approx(0.05, abs=1e-4)


def test_t_test_symmetric_null():
    res = t_test_one_sample([1.0, -1.0, 1.0, -1.0])
    assert res.t == 0.0
    assert res.p == 1.0


def test_t_test_zero_variance_branches():
    res = t_test_one_sample([2.0, 2.0, 2.0])
    assert res.p == 0.0 and FLAG_ZERO_VARIANCE in res.flags
    res0 = t_test_one_sample([0.0, 0.0, 0.0])
    assert res0.p == 1.0 and FLAG_ZERO_VARIANCE in res0.flags


def test_t_test_one_two_three():
    res = t_test_one_sample([1.0, 2.0, 3.0])
    assert res.t == pytest.approx(2.0 / (1.0 / math.sqrt(3)), abs=1e-9)
    assert res.t == pytest.approx(3.4641, abs=1e-4)
    assert res.df == 2
    assert res.p == pytest.approx(0.0742, abs=1e-3)


def test_permutation_exact_null_gives_p_one():
    st_ = table_from_cells({f"i{k}": quad(3, 4, 5, 6) for k in range(6)})
    exp = exp_for_items([f"i{k}" for k in range(6)])
    assert permutation_test(st_, exp, spec_2x2(), n_perm=500, seed=3) == 1.0


def exp_for_items(ids):
    factors = [
        Factor("order", ("std", "shifted"), is_order_factor=True),
        Factor("np_length", ("short", "long")),
    ]
    items = [
        Item(id=i, cells={
            "std|short": "a", "std|long": "a", "shifted|short": "a", "shifted|long": "a",
        })
        for i in ids
    ]
    return Experiment(name="synthetic", factors=factors, items=items)


def test_permutation_deterministic_in_seed():
    rng = np.random.default_rng(5)
    cells = {f"i{k}": quad(*rng.normal(10, 2, size=4)) for k in range(12)}
    st_ = table_from_cells(cells)
    exp = exp_for_items(list(cells))
    p1 = permutation_test(st_, exp, spec_2x2(), n_perm=2000, seed=42)
    p2 = permutation_test(st_, exp, spec_2x2(), n_perm=2000, seed=42)
    assert p1 == p2
    assert permutation_test(st_, exp, spec_2x2(), n_perm=2000, seed=43) != p1


def test_permutation_detects_planted_effect():
    rng = np.random.default_rng(7)
    cells = {}
    for k in range(40):
        noise = rng.normal(0, 1, size=4)
        base = 50 + rng.normal(0, 3)
        # plant +3 bits on the (m1, base) cell -> I = +3 on average
        cells[f"i{k}"] = quad(base + 3 + noise[0], base + noise[1],
                              base + noise[2], base + noise[3])
    st_ = table_from_cells(cells)
    exp = exp_for_items(list(cells))
    res = interaction(st_, exp, spec_2x2(), n_perm=10000, seed=1)
    assert res.mean > 0
    assert res.p_perm < 0.001
    assert res.p_t < 0.001


def test_interaction_insufficient_for_permutation():
    with pytest.raises(DataError):
        st_ = table_from_cells({"i1": quad(1, 2, 3, 4)})
        permutation_test(st_, exp_for_items(["i1"]), spec_2x2(), n_perm=0, seed=1)


def test_compare_models_identical_sources():
    st_ = table_from_cells({f"i{k}": quad(5, 7, 10, 9) for k in range(4)})
    exp = exp_for_items([f"i{k}" for k in range(4)])
    a = interaction(st_, exp, spec_2x2())
    cmp = compare_models(a, a)
    assert cmp.mean_difference == 0.0
    assert cmp.p == 1.0
    assert FLAG_ZERO_VARIANCE in cmp.flags


def test_compare_models_constant_shift():
    rng = np.random.default_rng(9)
    cells = {f"i{k}": quad(*rng.normal(20, 2, size=4)) for k in range(10)}
    exp = exp_for_items(list(cells))
    a = interaction(table_from_cells(cells, "A"), exp, spec_2x2())
    shifted = {
        item: {k: v + (1.0 if k == "std|long" else 0.0) for k, v in conds.items()}
        for item, conds in cells.items()
    }
    b = interaction(table_from_cells(shifted, "B"), exp, spec_2x2())
    cmp = compare_models(a, b)
    assert cmp.mean_difference == pytest.approx(-1.0)
    swapped = compare_models(b, a)
    assert swapped.mean_difference == pytest.approx(1.0)
    assert swapped.p == pytest.approx(cmp.p)


def test_compare_models_planted_gap():
    rng = np.random.default_rng(21)
    cells_a, cells_b = {}, {}
    for k in range(40):
        noise = rng.normal(0, 1, size=8)
        cells_a[f"i{k}"] = quad(52 + noise[0], 50 + noise[1], 50 + noise[2], 50 + noise[3])
        cells_b[f"i{k}"] = quad(50 + noise[4], 50 + noise[5], 50 + noise[6], 50 + noise[7])
    exp = exp_for_items(list(cells_a))
    a = interaction(table_from_cells(cells_a, "A"), exp, spec_2x2())
    b = interaction(table_from_cells(cells_b, "B"), exp, spec_2x2())
    cmp = compare_models(a, b)
    assert cmp.mean_difference > 1.0
    assert cmp.p < 0.01


def test_compare_models_requires_shared_items():
    st_a = table_from_cells({"i1": quad(1, 2, 3, 4), "i2": quad(1, 2, 3, 4)}, "A")
    st_b = table_from_cells({"i3": quad(1, 2, 3, 4), "i4": quad(1, 2, 3, 4)}, "B")
    exp_a = exp_for_items(["i1", "i2"])
    exp_b = exp_for_items(["i3", "i4"])
    a = interaction(st_a, exp_a, spec_2x2())
    b = interaction(st_b, exp_b, spec_2x2())
    with pytest.raises(DataError, match="shared items"):
        compare_models(a, b)


def test_grouped_interaction_and_difference():
    exp = exp_for_items([f"i{k}" for k in range(8)])
    exp.factors.append(Factor("animacy", ("anim", "inanim"), scope=BETWEEN_ITEM))
    cells = {}
    for k, item in enumerate(exp.items):
        item.group_levels["animacy"] = "anim" if k < 4 else "inanim"
        bump = (4.0 if k < 4 else 0.5) + 0.05 * (k % 4)
        cells[item.id] = quad(10 + bump, 10.0, 10.0, 10.0)
    st_ = table_from_cells(cells)
    spec = ContrastSpec("order", "std", "shifted", "np_length", ("long", "short"),
                        grouping="animacy")
    by_group = interaction_by_group(st_, exp, spec)
    assert by_group["anim"].mean == pytest.approx(4.075)
    assert by_group["inanim"].mean == pytest.approx(0.575)
    diff = group_difference(by_group)
    assert diff["mean_difference"] == pytest.approx(3.5)
    assert diff["p"] < 0.001


def test_residual_factors_average_into_one_value_per_item():
    exp = make_experiment(1)
    exp.factors.append(Factor("definiteness", ("def", "indef")))
    item = exp.items[0]
    item.cells = {}
    for o in ("std", "shifted"):
        for l in ("short", "long"):
            for d in ("def", "indef"):
                item.cells[f"{o}|{l}|{d}"] = "w"
    cells = {}
    for key in item.cells:
        cells.setdefault("item1", {})[key] = {
            ("std", "long", "def"): 6.0, ("std", "long", "indef"): 4.0,
            ("shifted", "long", "def"): 7.0, ("shifted", "long", "indef"): 7.0,
            ("std", "short", "def"): 10.0, ("std", "short", "indef"): 10.0,
            ("shifted", "short", "def"): 9.0, ("shifted", "short", "indef"): 9.0,
        }[tuple(key.split("|"))]
    st_ = table_from_cells(cells)
    res = interaction(st_, exp, spec_2x2())
    # strata I: def (6-7)-(10-9) = -2 ; indef (4-7)-(10-9) = -4 ; mean -3
    assert res.values == [pytest.approx(-3.0)]


# Dyadic values (multiples of 1/64) keep every addition exact in binary
# floating point, so the algebraic invariances hold with exact equality.
_dyadic = st.integers(0, 6400).map(lambda n: n / 64.0)
_dyadic_const = st.integers(0, 1280).map(lambda n: n / 64.0)

interaction_quads = st.lists(st.tuples(_dyadic, _dyadic, _dyadic, _dyadic), min_size=2, max_size=8)


@settings(max_examples=80, deadline=None)
@given(quads=interaction_quads, item_const=_dyadic_const, level_const=_dyadic_const)
def test_interaction_algebra_property(quads, item_const, level_const):
    cells = {f"i{k}": dict(zip(
        ("std|long", "shifted|long", "std|short", "shifted|short"), q
    )) for k, q in enumerate(quads)}
    exp = exp_for_items(list(cells))
    ref = interaction_values({
        i: (c["std|long"], c["shifted|long"], c["std|short"], c["shifted|short"])
        for i, c in cells.items()
    })
    # per-item constant on every cell of the first item
    bumped = {i: {k: v + (item_const if i == "i0" else 0.0) for k, v in c.items()}
              for i, c in cells.items()}
    got = interaction_values({
        i: (c["std|long"], c["shifted|long"], c["std|short"], c["shifted|short"])
        for i, c in bumped.items()
    })
    assert got == ref
    # constant on both cells sharing the long level
    bumped2 = {i: {k: v + (level_const if k.endswith("|long") else 0.0) for k, v in c.items()}
               for i, c in cells.items()}
    got2 = interaction_values({
        i: (c["std|long"], c["shifted|long"], c["std|short"], c["shifted|short"])
        for i, c in bumped2.items()
    })
    assert got2 == ref
    # swapped contrast negates preferences exactly
    st_tbl = table_from_cells(cells)
    fwd = order_preference(st_tbl, exp, spec_2x2())
    rev = order_preference(st_tbl, exp, spec_2x2().swapped())
    assert [r.value for r in rev.rows] == [-r.value for r in fwd.rows]

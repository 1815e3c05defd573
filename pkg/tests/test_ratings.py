import csv

import pytest

from orderlab.contrasts import ContrastSpec
from orderlab.errors import DataError
from orderlab.ratings import (
    RatingRow,
    RatingsTable,
    SubjectInfo,
    filter_subjects,
    human_preferences,
    load_ratings,
)

from conftest import make_experiment

HEADER = "subject_id,native_speaker,comprehension_accuracy,item_id,condition_key,rating"


def write_csv(path, rows):
    path.write_text(HEADER + "\n" + "\n".join(",".join(map(str, r)) for r in rows) + "\n")


def simple_rows(n_subjects=2, n_items=1, rating=3):
    rows = []
    keys = ["std|short", "std|long", "shifted|short", "shifted|long"]
    for s in range(1, n_subjects + 1):
        for i in range(1, n_items + 1):
            for key in keys:
                rows.append((f"s{s}", "true", 0.9, f"item{i}", key, rating))
    return rows


def contrast():
    return ContrastSpec("order", base="std", variant="shifted",
                        moderator="np_length", moderator_levels=("long", "short"))


def test_load_counts(tmp_path):
    p = tmp_path / "r.csv"
    write_csv(p, simple_rows())
    rt = load_ratings(p, make_experiment(1))
    assert len(rt.rows) == 8
    assert rt.subjects["s1"] == SubjectInfo(True, 0.9)


def test_rating_out_of_range(tmp_path):
    p = tmp_path / "r.csv"
    write_csv(p, [("s1", "true", 0.9, "item1", "std|short", 6)])
    with pytest.raises(DataError, match="outside 1-5"):
        load_ratings(p)


def test_duplicate_key(tmp_path):
    p = tmp_path / "r.csv"
    rows = simple_rows()
    write_csv(p, rows + [rows[0]])
    with pytest.raises(DataError, match="duplicate"):
        load_ratings(p)


def test_unknown_condition_key(tmp_path):
    p = tmp_path / "r.csv"
    write_csv(p, [("s1", "true", 0.9, "item1", "weird|short", 3)])
    with pytest.raises(DataError, match="unknown condition key"):
        load_ratings(p, make_experiment(1))


def test_bad_header(tmp_path):
    p = tmp_path / "r.csv"
    p.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(DataError, match="header"):
        load_ratings(p)


def make_table(specs):
    """specs: list of (subject, native, accuracy, item, key, rating)."""
    rows = [RatingRow(s, i, k, r) for s, _, _, i, k, r in specs]
    subjects = {s: SubjectInfo(nat, acc) for s, nat, acc, _, _, _ in specs}
    return RatingsTable(rows=rows, subjects=subjects)


def test_filter_mirrors_paper_counts():
    # 64 subjects, 9 below the 0.8 accuracy threshold -> 55 retained.
    specs = []
    for n in range(64):
        acc = 0.6 if n < 9 else 0.9
        specs.append((f"s{n}", True, acc, "item1", "std|short", 3))
    rt = make_table(specs)
    filtered, report = filter_subjects(rt, min_accuracy=0.8, require_native=True)
    assert report.subjects_in == 64
    assert report.subjects_kept == 55
    assert len(filtered.subjects) == 55
    assert report.rows_in == report.rows_retained + report.rows_dropped


def test_filter_identity_when_disabled():
    rt = make_table([("s1", False, 0.0, "item1", "std|short", 1)])
    filtered, report = filter_subjects(rt, min_accuracy=0.0, require_native=False)
    assert filtered == rt
    assert report.rows_dropped == 0


def test_boundary_accuracy_retained():
    rt = make_table([("s1", True, 0.8, "item1", "std|short", 3)])
    filtered, _ = filter_subjects(rt, min_accuracy=0.8)
    assert len(filtered.subjects) == 1


def test_filter_idempotent():
    specs = [(f"s{n}", n % 3 != 0, 0.5 + 0.1 * (n % 6), "item1", "std|short", 3) for n in range(12)]
    rt = make_table(specs)
    once, _ = filter_subjects(rt)
    twice, report = filter_subjects(once)
    assert once == twice
    assert report.rows_dropped == 0


def ratings_for_preferences():
    # subject A: std=5, shifted=2; subject B: std=4, shifted=3 (both lengths alike)
    specs = []
    for subj, std, shift in (("A", 5, 2), ("B", 4, 3)):
        for length in ("short", "long"):
            specs.append((subj, True, 1.0, "item1", f"std|{length}", std))
            specs.append((subj, True, 1.0, "item1", f"shifted|{length}", shift))
    return make_table(specs)


def test_preference_arithmetic():
    table = human_preferences(ratings_for_preferences(), contrast(), make_experiment(1))
    # mean over subjects of rating(variant) - rating(base) = ((2-5)+(3-4))/2
    assert table.values(np_length="short") == [pytest.approx(-2.0)]
    assert table.values(np_length="long") == [pytest.approx(-2.0)]


def test_equal_ratings_zero_preference():
    specs = [("A", True, 1.0, "item1", f"{o}|{l}", 3)
             for o in ("std", "shifted") for l in ("short", "long")]
    table = human_preferences(make_table(specs), contrast(), make_experiment(1))
    assert all(v == 0.0 for v in [r.value for r in table.rows])


def test_demeaning_keeps_point_estimate_and_shift_invariance():
    rt = ratings_for_preferences()
    raw = human_preferences(rt, contrast(), make_experiment(1))
    dem = human_preferences(rt, contrast(), make_experiment(1), demean=True)
    for r_raw, r_dem in zip(raw.rows, dem.rows):
        assert r_dem.value == pytest.approx(r_raw.value)
    # constant added to all of one subject's ratings; demeaned estimates stay put
    specs = []
    for subj, std, shift, bump in (("A", 5, 2, -1), ("B", 4, 3, 0)):
        for length in ("short", "long"):
            specs.append((subj, True, 1.0, "item1", f"std|{length}", std + bump))
            specs.append((subj, True, 1.0, "item1", f"shifted|{length}", shift + bump))
    bumped = human_preferences(make_table(specs), contrast(), make_experiment(1), demean=True)
    for r_dem, r_bumped in zip(dem.rows, bumped.rows):
        assert r_bumped.value == pytest.approx(r_dem.value)


def test_demeaning_reduces_between_subject_variance():
    # Unbalanced subject-item assignment with large subject offsets: offsets
    # leak into raw by-item interaction values, demeaning strips them.
    import numpy as np

    from orderlab.analysis import interaction_from_ratings

    rng = np.random.default_rng(11)
    exp = make_experiment(10)
    keys = exp.condition_keys()
    specs = []
    for s in range(24):
        # Latin-square style: each subject sees each item in one condition,
        # so cell means mix different subject sets and offsets leak in.
        offset = rng.normal(0, 2.0)
        for i, item in enumerate(exp.items):
            key = keys[(s + i) % len(keys)]
            noisy = 3 + offset + rng.normal(0, 0.2)
            specs.append((f"s{s:02d}", True, 1.0, item.id, key,
                          int(np.clip(round(noisy), 1, 5))))
    rt = make_table(specs)
    spec = contrast()
    raw = interaction_from_ratings(rt, exp, spec, demean=False)
    dem = interaction_from_ratings(rt, exp, spec, demean=True)
    assert raw.item_ids == dem.item_ids
    assert np.var(dem.values) < np.var(raw.values)


def test_missing_cell_excludes_item():
    specs = [("A", True, 1.0, "item1", "std|short", 3),
             ("A", True, 1.0, "item1", "shifted|short", 2),
             ("A", True, 1.0, "item1", "std|long", 3)]  # shifted|long missing
    table = human_preferences(make_table(specs), contrast(), make_experiment(1))
    assert table.values(np_length="short") == [pytest.approx(-1.0)]
    assert any("shifted|long" in reason for _, reason in table.excluded_items)

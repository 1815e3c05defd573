"""Filesystem-level orchestration of the train / score / analyze / report /
synth steps. The HTTP service exposes exactly these functions; the CLI is a
client of the service."""

from __future__ import annotations

import csv
import itertools
import json
from pathlib import Path

from . import analysis as an
from .contrasts import ContrastSpec, PreferenceTable, load_contrast_spec
from .errors import DataError, UsageError
from .manifest import RunManifest, derive_seed, manifest_path_for, sha256_file
from .ngram import build_model, count_ngrams, estimate_discounts, read_arpa, write_arpa
from .ratings import filter_subjects, human_preferences, load_ratings
from .report import FigureBar, render_figure_svg, write_report_csv
from .scoring import (
    ExternalProcessBackend,
    NativeNgramBackend,
    ingest_external_file,
    score_experiment,
    write_surprisal_tsv,
    read_surprisal_tsv,
)
from .stimuli import load_experiment
from .synth import SyntheticSpec, generate, load_synthetic_spec, synthetic_spec_from_dict
from .tokenization import DEFAULT_SCHEME

PREF_COLUMNS = ["source", "item_id", "contrast", "levels", "value", "demeaned"]


def run_train(
    corpus_path: str,
    out_path: str,
    order: int = 5,
    scheme: str = DEFAULT_SCHEME,
    min_count: int = 1,
) -> dict:
    if order < 1:
        raise UsageError(f"order must be >= 1, got {order}")
    counts = count_ngrams(corpus_path, order=order, scheme=scheme, min_count=min_count)
    if counts.is_empty:
        raise DataError("empty corpus")
    discounts = estimate_discounts(counts)
    model = build_model(counts, discounts, scheme_id=scheme)
    write_arpa(model, out_path)
    manifest = RunManifest(
        command="train",
        arguments={"order": order, "scheme": scheme, "min_count": min_count},
        outputs=[str(out_path)],
        scheme_id=scheme,
        extra={"discount_warnings": discounts.warnings},
    )
    manifest.add_input(corpus_path)
    manifest.write(manifest_path_for(out_path))
    return {
        "out_path": str(out_path),
        "manifest_path": str(manifest_path_for(out_path)),
        "vocab_size": len(model.lexicon),
        "ngram_counts": {str(k): v for k, v in model.counts().items()},
        "discount_warnings": discounts.warnings,
    }


def _native_backend_id(arpa_path: str, scheme: str) -> str:
    return f"ngram:{sha256_file(arpa_path)[:12]}:{scheme}"


def run_score(
    experiment_path: str,
    out_path: str,
    arpa_path: str | None = None,
    external_file: str | None = None,
    external_cmd: str | None = None,
    backend_id: str | None = None,
    scheme: str | None = None,
    include_eos: bool = True,
    strip_final_punct: bool = False,
    eos_included_declared: bool | None = None,
) -> dict:
    chosen = [x for x in (arpa_path, external_file, external_cmd) if x]
    if len(chosen) != 1:
        raise UsageError("exactly one of arpa_path, external_file, external_cmd is required")
    exp = load_experiment(experiment_path)
    coverage = None
    if arpa_path:
        model = read_arpa(arpa_path, scheme=scheme or DEFAULT_SCHEME)
        backend = NativeNgramBackend(
            model,
            backend_id=backend_id or _native_backend_id(arpa_path, model.scheme_id),
            include_eos=include_eos,
            strip_final_punct=strip_final_punct,
        )
        table = score_experiment(backend, exp)
        coverage = table.coverage
    elif external_file:
        table = ingest_external_file(external_file, exp)
    else:
        with ExternalProcessBackend(
            external_cmd, backend_id=backend_id, eos_included=eos_included_declared
        ) as backend:
            table = score_experiment(backend, exp)
    write_surprisal_tsv(table, out_path)
    manifest = RunManifest(
        command="score",
        arguments={
            "include_eos": include_eos,
            "strip_final_punct": strip_final_punct,
            "external_cmd": external_cmd,
            "eos_included_declared": eos_included_declared,
        },
        outputs=[str(out_path)],
        backend_ids=[table.backend_id],
        scheme_id=table.scheme_id,
        extra={"eos_included": table.eos_included},
    )
    manifest.add_input(experiment_path)
    for p in (arpa_path, external_file):
        if p:
            manifest.add_input(p)
    manifest.write(manifest_path_for(out_path))
    result = {
        "out_path": str(out_path),
        "manifest_path": str(manifest_path_for(out_path)),
        "backend_id": table.backend_id,
        "rows": len(table.rows),
    }
    if coverage is not None:
        result["oov_rate"] = coverage.oov_rate
        result["oov_cells"] = len(coverage.unknown_by_cell)
    return result


def _safe(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-." else "_" for c in name)


def _write_preferences_csv(path: Path, tables: list[tuple[PreferenceTable, bool]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PREF_COLUMNS)
        for table, demeaned in tables:
            for row in table.rows:
                levels = ";".join(f"{f}={l}" for f, l in row.levels)
                writer.writerow(
                    [row.source_id, row.item_id, row.contrast, levels,
                     repr(row.value), "true" if demeaned else "false"]
                )


def run_analyze(
    experiment_path: str,
    surprisal_paths: list[str],
    contrast_spec_path: str,
    out_dir: str,
    ratings_path: str | None = None,
    seed: int = 0,
    n_perm: int = 10000,
    min_accuracy: float = 0.8,
    require_native: bool = True,
) -> dict:
    if not surprisal_paths and not ratings_path:
        raise UsageError("nothing to analyze: no surprisal tables and no ratings")
    exp = load_experiment(experiment_path)
    spec = load_contrast_spec(contrast_spec_path)
    spec.validate_against(exp)
    if spec.moderator is None:
        raise DataError("the analysis contrast needs a moderator factor for interactions")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    outputs: list[str] = []
    sources: list[str] = []
    interactions: dict[str, an.InteractionResult] = {}
    summaries: dict[str, dict] = {}

    for path in surprisal_paths:
        table = read_surprisal_tsv(path, exp)
        source = table.backend_id
        if source in interactions:
            raise DataError(f"duplicate backend_id {source!r} across surprisal tables")
        sources.append(source)
        prefs = an.order_preference(table, exp, spec)
        result = an.interaction(
            table, exp, spec, n_perm=n_perm, seed=derive_seed(seed, f"perm:{source}")
        )
        interactions[source] = result
        pref_path = out / f"preferences_{_safe(source)}.csv"
        _write_preferences_csv(pref_path, [(prefs, False)])
        inter_path = out / f"interaction_{_safe(source)}.json"
        inter_path.write_text(json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8")
        outputs += [str(pref_path), str(inter_path)]
        summaries[source] = {"mean": result.mean, "p_t": result.p_t, "p_perm": result.p_perm}
        if spec.grouping:
            by_group = an.interaction_by_group(
                table, exp, spec, n_perm=n_perm, seed=derive_seed(seed, f"perm:{source}:group")
            )
            group_path = out / f"interaction_by_group_{_safe(source)}.json"
            payload = {level: r.to_dict() for level, r in by_group.items()}
            if len(by_group) == 2 and all(r.n_items >= 2 for r in by_group.values()):
                payload["__difference__"] = an.group_difference(by_group)
            group_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
            outputs.append(str(group_path))

    filter_report = None
    if ratings_path:
        rt = load_ratings(ratings_path, exp)
        rt, report = filter_subjects(rt, min_accuracy=min_accuracy, require_native=require_native)
        filter_report = report
        if not rt.rows:
            raise DataError("no subjects retained after filtering")
        raw_prefs = human_preferences(rt, spec, exp, demean=False)
        dem_prefs = human_preferences(rt, spec, exp, demean=True)
        result = an.interaction_from_ratings(
            rt, exp, spec, n_perm=n_perm, seed=derive_seed(seed, "perm:human")
        )
        interactions["human"] = result
        sources.append("human")
        pref_path = out / "preferences_human.csv"
        _write_preferences_csv(pref_path, [(raw_prefs, False), (dem_prefs, True)])
        inter_path = out / "interaction_human.json"
        inter_path.write_text(json.dumps(result.to_dict(), indent=2) + "\n", encoding="utf-8")
        filt_path = out / "filter_report.json"
        filt_path.write_text(json.dumps(report.__dict__, indent=2) + "\n", encoding="utf-8")
        outputs += [str(pref_path), str(inter_path), str(filt_path)]
        summaries["human"] = {"mean": result.mean, "p_t": result.p_t, "p_perm": result.p_perm}

    comparisons = []
    for a, b in itertools.combinations([s for s in sources if s != "human"], 2):
        cmp = an.compare_models(interactions[a], interactions[b])
        cmp_path = out / f"comparison_{_safe(a)}__vs__{_safe(b)}.json"
        cmp_path.write_text(json.dumps(cmp.to_dict(), indent=2) + "\n", encoding="utf-8")
        outputs.append(str(cmp_path))
        comparisons.append({"a": a, "b": b, "mean_difference": cmp.mean_difference, "p": cmp.p})

    summary = {
        "experiment": exp.name,
        "experiment_path": str(experiment_path),
        "contrast": {
            "order_factor": spec.order_factor,
            "base": spec.base,
            "variant": spec.variant,
            "moderator": spec.moderator,
            "moderator_levels": list(spec.moderator_levels or ()),
            "grouping": spec.grouping,
            "name": spec.name,
        },
        "analysis": an.ANALYSIS_TAG,
        "sources": sources,
        "seed": seed,
        "n_perm": n_perm,
        "results": summaries,
        "comparisons": comparisons,
        "filter_report": filter_report.__dict__ if filter_report else None,
    }
    summary_path = out / "summary.json"
    summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    outputs.append(str(summary_path))

    manifest = RunManifest(
        command="analyze",
        arguments={"seed": seed, "n_perm": n_perm, "min_accuracy": min_accuracy,
                   "require_native": require_native},
        outputs=outputs,
        backend_ids=[s for s in sources],
        seed=seed,
        extra={"analysis": an.ANALYSIS_TAG},
    )
    manifest.add_input(experiment_path)
    manifest.add_input(contrast_spec_path)
    for p in surprisal_paths:
        manifest.add_input(p)
    if ratings_path:
        manifest.add_input(ratings_path)
    manifest.write(out / "manifest.json")
    return {"out_dir": str(out), "outputs": outputs, "sources": sources,
            "results": summaries, "comparisons": comparisons,
            "filter_report": filter_report.__dict__ if filter_report else None}


def _load_preferences(path: Path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != PREF_COLUMNS:
            raise DataError(f"{path} is not a preferences table")
        rows = []
        for rec in reader:
            levels = dict(
                pair.split("=", 1) for pair in rec["levels"].split(";") if pair
            )
            rows.append(
                {
                    "source": rec["source"],
                    "item_id": rec["item_id"],
                    "levels": levels,
                    "value": float(rec["value"]),
                    "demeaned": rec["demeaned"] == "true",
                }
            )
        return rows


def run_report(analysis_dir: str, out_dir: str, formats: list[str] | None = None) -> dict:
    formats = [f.strip() for f in (formats or ["csv", "svg"]) if f.strip()]
    unknown = set(formats) - {"csv", "svg"}
    if unknown:
        raise UsageError(f"unknown report format(s): {sorted(unknown)}")
    adir = Path(analysis_dir)
    summary_path = adir / "summary.json"
    if not summary_path.exists():
        raise DataError(f"analysis dir {analysis_dir} has no summary.json (empty or not an analysis dir)")
    summary = json.loads(summary_path.read_text(encoding="utf-8"))
    moderator = summary["contrast"]["moderator"]
    grouping = summary["contrast"].get("grouping")
    pref_files = sorted(adir.glob("preferences_*.csv"))
    if not pref_files:
        raise DataError(f"analysis dir {analysis_dir} has no preference tables")

    point: dict[tuple[str, str, str], list[float]] = {}
    interval: dict[tuple[str, str, str], list[float]] = {}
    for path in pref_files:
        for row in _load_preferences(path):
            group = row["levels"].get(moderator, "")
            subgroup = row["levels"].get(grouping, "") if grouping else ""
            key = (row["source"], group, subgroup)
            target = interval if row["demeaned"] else point
            target.setdefault(key, []).append(row["value"])

    figure_base = f"preference_by_{moderator}"
    bars = []
    for key, values in sorted(point.items()):
        source, group, subgroup = key
        if len(values) < 2:
            raise DataError(f"({source}, {group}): need >= 2 per-item values")
        ci_values = interval.get(key, values)
        low, high = an.contrast_ci(ci_values)
        figure = figure_base if not subgroup else f"{figure_base}__{grouping}={subgroup}"
        bars.append(
            FigureBar(
                source=source,
                figure=figure,
                group=group,
                subgroup=subgroup,
                mean=float(sum(values) / len(values)),
                ci_low=low,
                ci_high=high,
                n_items=len(values),
            )
        )

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    if "csv" in formats:
        csv_path = out / "report.csv"
        write_report_csv(bars, csv_path)
        outputs.append(str(csv_path))
    if "svg" in formats:
        unit = "bits (variant - base surprisal)"
        for figure in sorted({b.figure for b in bars}):
            fig_bars = [b for b in bars if b.figure == figure]
            svg = render_figure_svg(fig_bars, title=f"{summary['experiment']}: {figure}", unit=unit)
            svg_path = out / f"{_safe(figure)}.svg"
            svg_path.write_text(svg, encoding="utf-8")
            outputs.append(str(svg_path))

    manifest = RunManifest(
        command="report",
        arguments={"formats": formats},
        outputs=outputs,
    )
    manifest.add_input(summary_path)
    for p in pref_files:
        manifest.add_input(p)
    manifest.write(out / "manifest.json")
    return {"out_dir": str(out), "outputs": outputs, "figures": sorted({b.figure for b in bars}),
            "bars": len(bars)}


def run_synth(out_dir: str, spec_path: str | None = None, spec_data: dict | None = None) -> dict:
    if (spec_path is None) == (spec_data is None):
        raise UsageError("exactly one of spec_path, spec_data is required")
    spec: SyntheticSpec = (
        load_synthetic_spec(spec_path) if spec_path else synthetic_spec_from_dict(spec_data or {})
    )
    written = generate(spec, out_dir)
    manifest = RunManifest(
        command="synth",
        arguments={"spec": spec_path or "inline"},
        outputs=list(written.values()),
        seed=spec.seed,
    )
    if spec_path:
        manifest.add_input(spec_path)
    manifest.write(Path(out_dir) / "manifest.json")
    return {"out_dir": str(out_dir), "written": written, "seed": spec.seed}

"""Command-line client for the pipeline service.

By default each command runs the service in-process (no network, no daemon);
``--server URL`` points the same client at a running ``orderlab serve``
instance instead, in which case paths are resolved on the server side.

Exit codes: 0 success, 1 data/validation error, 2 usage error, 3 internal.
"""

from __future__ import annotations

import argparse
import json
import sys

import httpx

from . import __version__
from .tokenization import DEFAULT_SCHEME, available_schemes

EXIT_OK = 0
EXIT_DATA = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3


class ServiceClient:
    def __init__(self, server: str | None = None):
        if server:
            self._client = httpx.Client(base_url=server, timeout=600.0)
            self._ctx = None
        else:
            from fastapi.testclient import TestClient

            from .service.app import app

            self._ctx = TestClient(app, raise_server_exceptions=False)
            self._client = self._ctx.__enter__()

    def close(self) -> None:
        if self._ctx is not None:
            self._ctx.__exit__(None, None, None)
        else:
            self._client.close()

    def post(self, path: str, payload: dict) -> tuple[int, dict]:
        response = self._client.post(path, json=payload)
        try:
            body = response.json()
        except ValueError:
            body = {"detail": {"kind": "internal", "message": response.text[:500]}}
        return response.status_code, body


def _fail(body: dict, status: int) -> int:
    detail = body.get("detail", body)
    if isinstance(detail, dict) and "message" in detail:
        kind = detail.get("kind", "internal")
        message = detail["message"]
    else:
        kind = "usage" if status == 422 else "internal"
        message = json.dumps(detail)
    print(f"error ({kind}): {message}", file=sys.stderr)
    if status == 400:
        return EXIT_DATA
    if status == 422:
        return EXIT_USAGE
    return EXIT_INTERNAL


def _dispatch(args, path: str, payload: dict, render) -> int:
    client = ServiceClient(args.server)
    try:
        status, body = client.post(path, payload)
    except httpx.HTTPError as exc:
        print(f"error (internal): cannot reach service: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    finally:
        client.close()
    if status != 200:
        return _fail(body, status)
    render(body)
    return EXIT_OK


def _cmd_train(args) -> int:
    payload = {
        "corpus_path": args.corpus,
        "out_path": args.out,
        "order": args.order,
        "scheme": args.scheme,
        "min_count": args.min_count,
    }

    def render(body):
        counts = " ".join(f"{k}-grams={v}" for k, v in sorted(body["ngram_counts"].items()))
        print(f"wrote {body['out_path']} (vocabulary {body['vocab_size']}; {counts})")
        for w in body.get("discount_warnings", []):
            print(f"warning: {w}", file=sys.stderr)

    return _dispatch(args, "/train", payload, render)


def _cmd_score(args) -> int:
    payload = {
        "experiment_path": args.experiment,
        "out_path": args.out,
        "arpa_path": args.arpa,
        "external_file": args.external_file,
        "external_cmd": args.external_cmd,
        "backend_id": args.backend_id,
        "scheme": args.scheme,
        "include_eos": args.include_eos,
        "strip_final_punct": args.strip_final_punct,
        "eos_included_declared": args.eos_included_declared,
    }

    def render(body):
        line = f"wrote {body['rows']} sentence scores to {body['out_path']} (backend {body['backend_id']})"
        if body.get("oov_rate") is not None:
            line += f"; OOV rate {body['oov_rate']:.4f} over {body.get('oov_cells', 0)} cells"
        print(line)

    return _dispatch(args, "/score", payload, render)


def _cmd_analyze(args) -> int:
    payload = {
        "experiment_path": args.experiment,
        "surprisal_paths": args.surprisals or [],
        "ratings_path": args.ratings,
        "contrast_spec_path": args.spec,
        "out_dir": args.out,
        "seed": args.seed,
        "n_perm": args.n_perm,
        "min_accuracy": args.min_accuracy,
        "require_native": args.require_native,
    }

    def render(body):
        for source in body["sources"]:
            r = body["results"][source]
            mean = "n/a" if r["mean"] is None else f"{r['mean']:.4f}"
            p_t = "n/a" if r["p_t"] is None else f"{r['p_t']:.4g}"
            p_perm = "n/a" if r["p_perm"] is None else f"{r['p_perm']:.4g}"
            print(f"{source}: mean interaction {mean}, p_t {p_t}, p_perm {p_perm}")
        for cmp in body["comparisons"]:
            print(f"{cmp['a']} vs {cmp['b']}: mean difference {cmp['mean_difference']:.4f}, p {cmp['p']:.4g}")
        if body.get("filter_report"):
            fr = body["filter_report"]
            print(f"subjects: {fr['subjects_kept']}/{fr['subjects_in']} retained")
        print(f"analysis written to {body['out_dir']}")

    return _dispatch(args, "/analyze", payload, render)


def _cmd_report(args) -> int:
    payload = {
        "analysis_dir": args.in_dir,
        "out_dir": args.out,
        "formats": args.format.split(","),
    }

    def render(body):
        print(f"wrote {len(body['outputs'])} file(s) for {body['bars']} bars:")
        for path in body["outputs"]:
            print(f"  {path}")

    return _dispatch(args, "/report", payload, render)


def _cmd_synth(args) -> int:
    payload = {"out_dir": args.out, "spec_path": args.spec}

    def render(body):
        print(f"synthetic data (seed {body['seed']}) written to {body['out_dir']}:")
        for kind, path in body["written"].items():
            print(f"  {kind}: {path}")

    return _dispatch(args, "/synth", payload, render)


def _cmd_serve(args) -> int:
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orderlab",
        description="Measure word-order preferences of language models via surprisal contrasts.",
    )
    parser.add_argument("--version", action="version", version=f"orderlab {__version__}")
    parser.add_argument("--server", default=None, metavar="URL",
                        help="send commands to a running service instead of in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a modified Kneser-Ney n-gram model, write ARPA")
    p.add_argument("--corpus", required=True, help="one sentence per line, UTF-8")
    p.add_argument("--order", type=int, default=5)
    p.add_argument("--scheme", default=DEFAULT_SCHEME, choices=available_schemes())
    p.add_argument("--min-count", type=int, default=1, dest="min_count",
                   help="map rarer tokens to <unk> before counting")
    p.add_argument("--out", required=True, help="output ARPA path")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("score", help="score an experiment's sentences with a backend")
    p.add_argument("--experiment", required=True)
    backend = p.add_mutually_exclusive_group(required=True)
    backend.add_argument("--arpa", help="native backend: ARPA model path")
    backend.add_argument("--external-file", dest="external_file",
                         help="ingest a per-token surprisal TSV")
    backend.add_argument("--external-cmd", dest="external_cmd",
                         help="spawn a process speaking the line protocol")
    p.add_argument("--backend-id", dest="backend_id", default=None)
    p.add_argument("--scheme", default=None, choices=available_schemes(),
                   help="tokenization for the native backend (default: recorded scheme)")
    p.add_argument("--include-eos", action=argparse.BooleanOptionalAction, default=True,
                   dest="include_eos", help="include the end-of-sentence term (native backend)")
    p.add_argument("--strip-final-punct", action="store_true", dest="strip_final_punct",
                   help="drop a sentence-final punctuation token before scoring")
    p.add_argument("--eos-included-declared", dest="eos_included_declared", default=None,
                   type=lambda v: v.lower() == "true", metavar="{true,false}",
                   help="what an external process backend's totals include (recorded)")
    p.add_argument("--out", required=True, help="output TSV path")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("analyze", help="preferences, interactions, tests, comparisons")
    p.add_argument("--experiment", required=True)
    p.add_argument("--surprisals", nargs="*", default=[], metavar="TSV")
    p.add_argument("--ratings", default=None, help="ratings CSV")
    p.add_argument("--spec", required=True, help="contrast spec JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-perm", type=int, default=10000, dest="n_perm")
    p.add_argument("--min-accuracy", type=float, default=0.8, dest="min_accuracy")
    p.add_argument("--require-native", action=argparse.BooleanOptionalAction, default=True,
                   dest="require_native")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("report", help="emit tidy CSV and grouped-bar SVG figures")
    p.add_argument("--in", required=True, dest="in_dir", help="analysis output directory")
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--format", default="csv,svg", help="comma-separated: csv,svg")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("synth", help="generate synthetic corpus/experiment/ratings data")
    p.add_argument("--spec", required=True, help="synthetic spec JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8360)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())

"""Serve a native model over the external-scorer line protocol.

Runs as ``python -m orderlab.scorer_server --arpa model.arpa`` and answers
``{"id", "text"}`` requests with ``{"id", "tokens", "surprisal_bits"}``
responses, one line each, in order. This is how the native backend is
parallelized across processes, and it doubles as a conformance reference for
external scorer implementations. ``--uniform N`` serves a toy model that
assigns every whitespace token log2(N) bits.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

from .ngram.arpa import read_arpa
from .scoring import NativeNgramBackend
from .tokenization import DEFAULT_SCHEME


def _respond(payload: dict) -> None:
    sys.stdout.write(json.dumps(payload) + "\n")
    sys.stdout.flush()


def serve(score_fn) -> int:
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            sid = request["id"]
            text = request["text"]
        except (json.JSONDecodeError, KeyError, TypeError):
            _respond({"id": None, "error": f"malformed request line: {line[:200]}"})
            continue
        tokens, bits = score_fn(text)
        _respond({"id": sid, "tokens": tokens, "surprisal_bits": bits})
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="orderlab-scorer-server", description=__doc__)
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--arpa", help="ARPA model to serve")
    group.add_argument("--uniform", type=int, metavar="V",
                       help="serve a uniform toy model over a vocabulary of size V")
    parser.add_argument("--scheme", default=DEFAULT_SCHEME)
    parser.add_argument("--no-eos", action="store_true",
                        help="omit the end-of-sentence term (native model only)")
    args = parser.parse_args(argv)

    if args.uniform is not None:
        if args.uniform < 1:
            parser.error("--uniform needs a positive vocabulary size")
        per_token = math.log2(args.uniform)

        def score(text: str):
            toks = text.split()
            return toks, [per_token] * len(toks)

    else:
        model = read_arpa(args.arpa, scheme=args.scheme)
        backend = NativeNgramBackend(model, include_eos=not args.no_eos)

        def score(text: str):
            pts = backend.score_sentence(text)
            return list(pts.tokens), list(pts.surprisal_bits)

    return serve(score)


if __name__ == "__main__":
    sys.exit(main())

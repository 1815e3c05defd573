"""Per-token and total sentence surprisal under any backend.

All interface values are bits (log base 2); the native backend converts from
the model's internal log10 exactly once. External values are validated but
never renormalized: this is a measurement instrument, not a model.
"""

from __future__ import annotations

import json
import math
import re
import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path

from .errors import BackendError, DataError, ProtocolError
from .ngram.counts import BOS, EOS
from .ngram.model import NgramModel
from .stimuli import CoverageReport, Experiment, vocabulary_coverage
from .tokenization import is_punctuation_token, tokenize


@dataclass(frozen=True)
class PerTokenSurprisals:
    """Surprisal (bits) for each scored position of one sentence.

    The native backend's positions include the end-of-sentence term, so the
    token list ends with the end symbol when that term is included.
    """

    sentence_id: str
    tokens: tuple[str, ...]
    surprisal_bits: tuple[float, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.surprisal_bits):
            raise ProtocolError(
                f"{self.sentence_id}: {len(self.surprisal_bits)} surprisals for "
                f"{len(self.tokens)} tokens"
            )
        for v in self.surprisal_bits:
            if not math.isfinite(v):
                raise ProtocolError(f"{self.sentence_id}: non-finite surprisal {v}")
            if v < 0:
                raise ProtocolError(f"{self.sentence_id}: negative surprisal {v}")

    @property
    def total_bits(self) -> float:
        return total_surprisal(self)


def total_surprisal(pts: PerTokenSurprisals) -> float:
    """Left-to-right sum of the per-token values (fixed summation order)."""
    total = 0.0
    for v in pts.surprisal_bits:
        total += v
    return total


@dataclass(frozen=True)
class SurprisalRow:
    backend_id: str
    item_id: str
    condition_key: str
    total_bits: float
    detail: PerTokenSurprisals


@dataclass
class SurprisalTable:
    backend_id: str
    rows: list[SurprisalRow]
    eos_included: bool | None = None
    scheme_id: str | None = None
    coverage: CoverageReport | None = None

    def cell(self, item_id: str, condition_key: str) -> SurprisalRow:
        key = (item_id, condition_key)
        try:
            return self._index[key]
        except AttributeError:
            object.__setattr__(self, "_index", {(r.item_id, r.condition_key): r for r in self.rows})
            return self._index[key]
        except KeyError:
            raise DataError(
                f"surprisal table {self.backend_id!r} has no cell ({item_id}, {condition_key})"
            ) from None

    def total(self, item_id: str, condition_key: str) -> float:
        return self.cell(item_id, condition_key).total_bits


def sentence_id(item_id: str, condition_key: str) -> str:
    return f"{item_id}::{condition_key}"


def split_sentence_id(sid: str) -> tuple[str, str]:
    item_id, sep, key = sid.partition("::")
    if not sep or not item_id or not key:
        raise DataError(f"malformed sentence_id {sid!r}; expected <item_id>::<condition_key>")
    return item_id, key


class NativeNgramBackend:
    """Scores with an in-process n-gram model using the model's tokenization."""

    kind = "native-ngram"

    def __init__(
        self,
        model: NgramModel,
        backend_id: str = "native-ngram",
        include_eos: bool = True,
        strip_final_punct: bool = False,
    ):
        self.model = model
        self.backend_id = backend_id
        self.include_eos = include_eos
        self.strip_final_punct = strip_final_punct

    @property
    def eos_included(self) -> bool:
        return self.include_eos

    def score_sentence(self, sentence: str, sid: str = "") -> PerTokenSurprisals:
        toks = list(tokenize(sentence, self.model.scheme_id).tokens)
        if self.strip_final_punct and toks and is_punctuation_token(toks[-1]):
            toks = toks[:-1]
        scored = list(toks) + ([EOS] if self.include_eos else [])
        context: list[str] = [BOS] * (self.model.order - 1)
        values = []
        for tok in scored:
            values.append(self.model.surprisal_bits(tok, tuple(context)))
            context.append(tok)
        return PerTokenSurprisals(sid, tuple(scored), tuple(values))

    def close(self) -> None:
        pass


class ExternalProcessBackend:
    """Line-delimited request/response scorer over a child process's stdio.

    One request in flight at a time; parallelism comes from running several
    processes. Any malformed response line terminates the backend.
    """

    kind = "external-process"

    def __init__(self, command: str | list[str], backend_id: str | None = None,
                 eos_included: bool | None = None):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise DataError("external scorer command is empty")
        self.backend_id = backend_id or f"proc:{Path(argv[0]).name}"
        self.eos_included = eos_included
        self._argv = argv
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise BackendError(f"cannot start external scorer {argv!r}: {exc}") from exc

    def score_sentence(self, sentence: str, sid: str = "") -> PerTokenSurprisals:
        if self._proc.poll() is not None:
            raise BackendError(f"external scorer {self.backend_id} exited (status {self._proc.returncode})")
        request = json.dumps({"id": sid, "text": sentence})
        try:
            assert self._proc.stdin is not None and self._proc.stdout is not None
            self._proc.stdin.write(request + "\n")
            self._proc.stdin.flush()
            line = self._proc.stdout.readline()
        except (BrokenPipeError, OSError) as exc:
            raise BackendError(f"external scorer {self.backend_id} died mid-request: {exc}") from exc
        if not line:
            raise BackendError(f"external scorer {self.backend_id} closed its output stream")
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            self.close()
            raise ProtocolError(f"{sid}: malformed response line {line!r}") from exc
        if not isinstance(payload, dict) or payload.get("id") != sid:
            self.close()
            raise ProtocolError(f"{sid}: response id mismatch in {line!r}")
        tokens = payload.get("tokens")
        values = payload.get("surprisal_bits")
        if not isinstance(tokens, list) or not isinstance(values, list):
            self.close()
            raise ProtocolError(f"{sid}: response missing tokens/surprisal_bits lists")
        try:
            return PerTokenSurprisals(
                sid,
                tuple(str(t) for t in tokens),
                tuple(float(v) for v in values),
            )
        except (TypeError, ValueError) as exc:
            self.close()
            raise ProtocolError(f"{sid}: non-numeric surprisal in response") from exc

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                if self._proc.stdin:
                    self._proc.stdin.close()
                self._proc.wait(timeout=5)
            except (OSError, subprocess.TimeoutExpired):
                self._proc.kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def score_experiment(backend, exp: Experiment) -> SurprisalTable:
    """One row per (item, condition), in file x grid order."""
    rows: list[SurprisalRow] = []
    keys = exp.condition_keys()
    for item in exp.items:
        for key in keys:
            sid = sentence_id(item.id, key)
            try:
                pts = backend.score_sentence(item.cells[key], sid)
            except (ProtocolError, BackendError):
                raise
            except KeyError:
                raise DataError(f"item {item.id!r} has no cell {key!r}") from None
            rows.append(SurprisalRow(backend.backend_id, item.id, key, pts.total_bits, pts))
    table = SurprisalTable(
        backend_id=backend.backend_id,
        rows=rows,
        eos_included=getattr(backend, "eos_included", None),
        scheme_id=getattr(getattr(backend, "model", None), "scheme_id", None),
    )
    if isinstance(backend, NativeNgramBackend):
        table.coverage = vocabulary_coverage(exp, backend.model.lexicon, backend.model.scheme_id)
    return table


_HEADER_RE = re.compile(r"^#backend_id=(\S+)\s+eos_included=(true|false)\s*$")
_COLUMNS = "sentence_id\ttoken_index\ttoken\tsurprisal_bits"


def write_surprisal_tsv(table: SurprisalTable, path: str | Path) -> None:
    eos = "true" if table.eos_included else "false"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#backend_id={table.backend_id} eos_included={eos}\n")
        fh.write(_COLUMNS + "\n")
        for row in table.rows:
            sid = sentence_id(row.item_id, row.condition_key)
            for i, (tok, v) in enumerate(zip(row.detail.tokens, row.detail.surprisal_bits)):
                fh.write(f"{sid}\t{i}\t{tok}\t{v!r}\n")


def read_surprisal_tsv(path: str | Path, exp: Experiment | None = None) -> SurprisalTable:
    """Parse the external-surprisal TSV; totals are recomputed, never trusted.

    With an experiment given, coverage is checked: every (item, condition)
    exactly once, nothing extra.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read surprisal file {path}: {exc}") from exc
    if not lines:
        raise DataError(f"surprisal file {path} is empty")
    m = _HEADER_RE.match(lines[0])
    if not m:
        raise DataError(
            f"surprisal file {path} must start with '#backend_id=<id> eos_included=<true|false>'"
        )
    backend_id, eos = m.group(1), m.group(2) == "true"
    body = lines[1:]
    body_start = 2
    if body and body[0] == _COLUMNS:
        body = body[1:]
        body_start = 3
    per_sid: dict[str, list[tuple[int, str, float]]] = {}
    order_seen: list[str] = []
    last_sid: str | None = None
    for offset, line in enumerate(body):
        lineno = body_start + offset
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise ProtocolError(f"{path}:{lineno}: expected 4 tab-separated columns")
        sid, idx_s, tok, val_s = parts
        try:
            idx = int(idx_s)
            val = float(val_s)
        except ValueError:
            raise ProtocolError(f"{path}:{lineno}: non-numeric token_index or surprisal") from None
        if not math.isfinite(val):
            raise ProtocolError(f"{path}:{lineno}: non-finite surprisal for {sid}")
        if val < 0:
            raise ProtocolError(f"{path}:{lineno}: negative surprisal for {sid}")
        if sid not in per_sid:
            per_sid[sid] = []
            order_seen.append(sid)
        elif sid != last_sid:
            raise ProtocolError(f"{path}:{lineno}: duplicate cell {sid}")
        per_sid[sid].append((idx, tok, val))
        last_sid = sid

    rows: list[SurprisalRow] = []
    for sid in order_seen:
        entries = per_sid[sid]
        item_id, key = split_sentence_id(sid)
        indices = [i for i, _, _ in entries]
        if indices != list(range(len(entries))):
            raise ProtocolError(
                f"{path}: sentence {sid} token_index sequence {indices} is not contiguous from 0"
            )
        detail = PerTokenSurprisals(
            sid, tuple(t for _, t, _ in entries), tuple(v for _, _, v in entries)
        )
        rows.append(SurprisalRow(backend_id, item_id, key, detail.total_bits, detail))

    table = SurprisalTable(backend_id=backend_id, rows=rows, eos_included=eos)
    if exp is not None:
        _check_coverage(table, exp, str(path))
    return table


def _check_coverage(table: SurprisalTable, exp: Experiment, source: str) -> None:
    expected = {(item.id, key) for item in exp.items for key in exp.condition_keys()}
    seen: set[tuple[str, str]] = set()
    for row in table.rows:
        cell = (row.item_id, row.condition_key)
        if cell in seen:
            raise DataError(f"{source}: duplicate cell {sentence_id(*cell)}")
        seen.add(cell)
    missing = expected - seen
    if missing:
        cell = sorted(missing)[0]
        raise DataError(
            f"{source}: missing cell {sentence_id(*cell)} "
            f"({len(missing)} of {len(expected)} cells absent)"
        )
    extra = seen - expected
    if extra:
        cell = sorted(extra)[0]
        raise DataError(f"{source}: cell {sentence_id(*cell)} is not in the experiment")


def ingest_external_file(path: str | Path, exp: Experiment) -> SurprisalTable:
    """Load an externally produced per-token TSV for an experiment."""
    return read_surprisal_tsv(path, exp)

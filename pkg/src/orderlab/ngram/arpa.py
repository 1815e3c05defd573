"""ARPA text serialization of backoff n-gram models.

Format: a ``\\data\\`` header with ``ngram k=count`` lines, per-order
``\\k-grams:`` sections of ``log10prob<TAB>tokens<TAB>log10backoff`` lines
(backoff omitted at the top order or when the gram is not a context), and a
closing ``\\end\\``. Reserved symbols are spelled ``<s>``, ``</s>``,
``<unk>``. Values are log10, so files interoperate with KenLM/SRILM output.
"""

from __future__ import annotations

import logging
import math
import re
from pathlib import Path

from ..errors import DataError
from ..tokenization import DEFAULT_SCHEME
from .counts import UNK, Gram
from .model import UNK_FLOOR, NgramModel

log = logging.getLogger(__name__)

_NGRAM_DECL = re.compile(r"^ngram\s+(\d+)\s*=\s*(\d+)$")
_SECTION = re.compile(r"^\\(\d+)-grams:$")


def write_arpa(model: NgramModel, path: str | Path) -> None:
    """Serialize deterministically (entries sorted within each order)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\\data\\\n")
        for k in range(1, model.order + 1):
            fh.write(f"ngram {k}={len(model.entries[k])}\n")
        for k in range(1, model.order + 1):
            fh.write(f"\n\\{k}-grams:\n")
            for gram in sorted(model.entries[k]):
                logp, bow = model.entries[k][gram]
                line = f"{logp:.8f}\t{' '.join(gram)}"
                if bow is not None:
                    line += f"\t{bow:.8f}"
                fh.write(line + "\n")
        fh.write("\n\\end\\\n")


def _parse_entry(line: str, k: int, lineno: int) -> tuple[float, Gram, float | None]:
    fields = line.split("\t")
    if len(fields) not in (2, 3):
        # Some tools emit space-separated files; field count disambiguates
        # because the gram length is fixed within a section.
        parts = line.split()
        if len(parts) == k + 1:
            fields = [parts[0], " ".join(parts[1:])]
        elif len(parts) == k + 2:
            fields = [parts[0], " ".join(parts[1:-1]), parts[-1]]
        else:
            raise DataError(f"ARPA line {lineno}: expected {k}-gram entry, got {line!r}")
    try:
        logp = float(fields[0])
        bow = float(fields[2]) if len(fields) == 3 else None
    except ValueError as exc:
        raise DataError(f"ARPA line {lineno}: non-numeric field in {line!r}") from exc
    if math.isnan(logp) or (bow is not None and math.isnan(bow)):
        raise DataError(f"ARPA line {lineno}: NaN value in {line!r}")
    if logp > 0:
        raise DataError(f"ARPA line {lineno}: positive log10 probability {logp}")
    gram = tuple(fields[1].split())
    if len(gram) != k:
        raise DataError(
            f"ARPA line {lineno}: gram {fields[1]!r} has {len(gram)} tokens, expected {k}"
        )
    return logp, gram, bow


def read_arpa(path: str | Path, scheme: str = DEFAULT_SCHEME) -> NgramModel:
    """Parse an ARPA file (ours or externally produced).

    ``scheme`` sets the tokenization the native backend will use with the
    model; the format itself does not record one.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read ARPA file {path}: {exc}") from exc

    it = iter(enumerate(lines, start=1))
    for lineno, line in it:
        if line.strip() == "\\data\\":
            break
        if line.strip():
            raise DataError(f"ARPA line {lineno}: expected \\data\\ header, got {line!r}")
    else:
        raise DataError("ARPA file has no \\data\\ header")

    declared: dict[int, int] = {}
    pos = None
    for lineno, line in it:
        line = line.strip()
        if not line:
            continue
        m = _NGRAM_DECL.match(line)
        if m:
            declared[int(m.group(1))] = int(m.group(2))
            continue
        pos = (lineno, line)
        break
    if not declared:
        raise DataError("ARPA header declares no ngram counts")
    order = max(declared)
    if sorted(declared) != list(range(1, order + 1)):
        missing = sorted(set(range(1, order + 1)) - set(declared))
        raise DataError(f"ARPA header skips order(s) {missing}")

    entries: dict[int, dict[Gram, tuple[float, float | None]]] = {
        k: {} for k in range(1, order + 1)
    }
    current: int | None = None
    ended = False

    def handle(lineno: int, line: str) -> None:
        nonlocal current, ended
        if not line:
            return
        if line == "\\end\\":
            ended = True
            return
        if ended:
            raise DataError(f"ARPA line {lineno}: content after \\end\\")
        m = _SECTION.match(line)
        if m:
            k = int(m.group(1))
            if k not in declared:
                raise DataError(f"ARPA line {lineno}: section \\{k}-grams: not declared in header")
            current = k
            return
        if current is None:
            raise DataError(f"ARPA line {lineno}: entry outside any section: {line!r}")
        logp, gram, bow = _parse_entry(line, current, lineno)
        if gram in entries[current]:
            raise DataError(f"ARPA line {lineno}: duplicate {current}-gram {' '.join(gram)!r}")
        entries[current][gram] = (logp, bow)

    if pos is not None:
        handle(*((pos[0], pos[1].strip())))
    for lineno, line in it:
        handle(lineno, line.strip())

    if not ended:
        raise DataError("ARPA file is missing \\end\\")
    for k in range(1, order + 1):
        if declared[k] != len(entries[k]):
            if not entries[k]:
                raise DataError(
                    f"ARPA declares ngram {k}={declared[k]} but the \\{k}-grams: section is missing"
                )
            raise DataError(
                f"ARPA declares ngram {k}={declared[k]} but section has {len(entries[k])} entries"
            )

    if (UNK,) not in entries[1]:
        # Vocab-closed external models: give unknowns the same finite floor
        # the trainer uses so queries never blow up.
        log.warning("ARPA file %s has no <unk> entry; flooring it at %g", path, UNK_FLOOR)
        entries[1][(UNK,)] = (math.log10(UNK_FLOOR), None)

    vocabulary = frozenset(g[0] for g in entries[1])
    return NgramModel(order=order, entries=entries, vocabulary=vocabulary, scheme_id=scheme)

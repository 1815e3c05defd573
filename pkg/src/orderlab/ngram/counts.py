"""N-gram counting with continuation-count adjustment.

Each sentence is padded with (order-1) start symbols and one end symbol;
windows are collected at every order, always ending at a predicted position
(so no stored n-gram ends in the start symbol). Raw counts merge
commutatively across shards; adjusted counts are recomputed after merging.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from ..errors import DataError, UsageError
from ..tokenization import DEFAULT_SCHEME, tokenize

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"
RESERVED = frozenset({BOS, EOS, UNK})

Gram = tuple[str, ...]


@dataclass
class CountTable:
    """Per-order raw window counts plus continuation-adjusted counts.

    ``raw[k]`` and ``adjusted[k]`` map order-k grams to counts, k = 1..order.
    At the top order adjusted equals raw. Below it, a gram's adjusted count
    is its number of distinct left extensions, except that grams beginning
    with the start symbol keep raw counts (nothing can ever precede them).
    """

    order: int
    raw: dict[int, dict[Gram, int]]
    adjusted: dict[int, dict[Gram, int]] = field(default_factory=dict)
    vocabulary: set[str] = field(default_factory=set)

    def __post_init__(self) -> None:
        if not self.adjusted:
            self.adjusted = _adjust(self.order, self.raw)

    def counts_of_counts(self, k: int, upto: int = 4) -> tuple[int, ...]:
        """(n1, .., n_upto) over adjusted counts at order k."""
        tally = Counter(self.adjusted[k].values())
        return tuple(tally.get(r, 0) for r in range(1, upto + 1))

    @property
    def is_empty(self) -> bool:
        return not self.raw[self.order]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CountTable):
            return NotImplemented
        return (
            self.order == other.order
            and self.raw == other.raw
            and self.adjusted == other.adjusted
            and self.vocabulary == other.vocabulary
        )


def _adjust(order: int, raw: dict[int, dict[Gram, int]]) -> dict[int, dict[Gram, int]]:
    adjusted: dict[int, dict[Gram, int]] = {order: dict(raw[order])}
    for k in range(order - 1, 0, -1):
        continuation: dict[Gram, int] = defaultdict(int)
        for gram in raw[k + 1]:
            continuation[gram[1:]] += 1
        adjusted[k] = {
            gram: (count if gram[0] == BOS else continuation[gram])
            for gram, count in raw[k].items()
        }
    return adjusted


def _sentences(corpus: Iterable[str] | str | Path) -> Iterator[str]:
    if isinstance(corpus, (str, Path)):
        try:
            with open(corpus, encoding="utf-8") as fh:
                for line in fh:
                    yield line
        except OSError as exc:
            raise DataError(f"cannot read corpus {corpus}: {exc}") from exc
    else:
        yield from corpus


def count_ngrams(
    corpus: Iterable[str] | str | Path,
    order: int,
    scheme: str = DEFAULT_SCHEME,
    min_count: int = 1,
) -> CountTable:
    """Count a one-sentence-per-line corpus.

    With min_count > 1, tokens rarer than the threshold are replaced by the
    unknown symbol before counting (requires a second pass, so the corpus is
    materialized).
    """
    if order < 1:
        raise UsageError(f"order must be >= 1, got {order}")
    if min_count < 1:
        raise UsageError(f"min-count must be >= 1, got {min_count}")

    tokenized: Iterable[tuple[str, ...]] = (
        tokenize(line, scheme).tokens for line in _sentences(corpus)
    )
    keep: set[str] | None = None
    if min_count > 1:
        sentences = [toks for toks in tokenized if toks]
        freq = Counter(tok for toks in sentences for tok in toks)
        keep = {tok for tok, c in freq.items() if c >= min_count}
        tokenized = sentences

    raw: dict[int, dict[Gram, int]] = {k: defaultdict(int) for k in range(1, order + 1)}
    vocabulary: set[str] = set()
    pad = (BOS,) * (order - 1)
    for toks in tokenized:
        if not toks:
            continue
        bad = RESERVED.intersection(toks)
        if bad:
            raise DataError(f"reserved symbol {sorted(bad)[0]!r} appears in the corpus")
        if keep is not None:
            toks = tuple(t if t in keep else UNK for t in toks)
        vocabulary.update(toks)
        padded = pad + toks + (EOS,)
        for i in range(order - 1, len(padded)):
            for k in range(1, order + 1):
                raw[k][padded[i - k + 1 : i + 1]] += 1

    vocabulary.discard(UNK)
    table = CountTable(order=order, raw={k: dict(v) for k, v in raw.items()})
    table.vocabulary = vocabulary | set(RESERVED)
    return table


def merge_counts(tables: Iterable[CountTable]) -> CountTable:
    """Merge shard tables; equals single-pass counting for any shard split."""
    tables = list(tables)
    if not tables:
        raise UsageError("no count tables to merge")
    order = tables[0].order
    if any(t.order != order for t in tables):
        raise DataError("cannot merge count tables of different orders")
    raw: dict[int, dict[Gram, int]] = {k: defaultdict(int) for k in range(1, order + 1)}
    vocabulary: set[str] = set()
    for t in tables:
        vocabulary |= t.vocabulary
        for k in range(1, order + 1):
            for gram, c in t.raw[k].items():
                raw[k][gram] += c
    merged = CountTable(order=order, raw={k: dict(v) for k, v in raw.items()})
    merged.vocabulary = vocabulary
    return merged

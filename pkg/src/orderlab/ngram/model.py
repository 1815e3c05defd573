"""Interpolated modified Kneser-Ney estimation and backoff queries.

Probabilities and backoff weights are stored as log10 (the ARPA convention);
conversion to bits happens in the scoring layer. Built models are immutable
by convention and safe to share across scoring workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..errors import DataError
from ..tokenization import DEFAULT_SCHEME
from .counts import BOS, EOS, RESERVED, UNK, CountTable, Gram, count_ngrams
from .discounts import Discounts, estimate_discounts

LOG10_2 = math.log10(2.0)

#: Conventional stand-in for "bears no probability mass" (start-symbol lines).
SENTINEL_LOG10 = -99.0

#: Floor keeping unknown-word surprisal finite.
UNK_FLOOR = 1e-10

#: Floor keeping log backoff weights finite when every discount at a context
#: clamps to zero (then no mass would be left for unseen continuations).
GAMMA_FLOOR = 1e-10


@dataclass
class NgramModel:
    order: int
    # per order k: gram -> (log10 prob, log10 backoff or None)
    entries: dict[int, dict[Gram, tuple[float, float | None]]]
    vocabulary: frozenset[str]
    scheme_id: str = DEFAULT_SCHEME

    @property
    def lexicon(self) -> frozenset[str]:
        """Tokens with non-unknown probability; reserved symbols excluded."""
        return self.vocabulary - RESERVED

    @property
    def predictable(self) -> frozenset[str]:
        return self.vocabulary - {BOS}

    def counts(self) -> dict[int, int]:
        return {k: len(self.entries[k]) for k in range(1, self.order + 1)}

    def _resolve(self, token: str) -> str:
        if token == BOS:
            return token
        return token if token in self.vocabulary else UNK

    def log10_prob(self, word: str, context: tuple[str, ...] | list[str]) -> float:
        """Backoff-recursion log10 probability of ``word`` given ``context``.

        Only the last (order-1) context tokens are used; out-of-vocabulary
        tokens map to the unknown symbol. The start symbol bears no mass, so
        querying it as a word resolves to the unknown symbol.
        """
        word = UNK if word == BOS else self._resolve(word)
        ctx = tuple(self._resolve(t) for t in context)[max(0, len(context) - self.order + 1):]
        return self._lookup(word, ctx)

    def _lookup(self, word: str, ctx: Gram) -> float:
        hit = self.entries[len(ctx) + 1].get(ctx + (word,))
        if hit is not None:
            return hit[0]
        if not ctx:
            # Unigram misses cannot happen for resolved words; guard anyway.
            return self.entries[1][(UNK,)][0]
        stored_ctx = self.entries[len(ctx)].get(ctx)
        bow = stored_ctx[1] if stored_ctx is not None and stored_ctx[1] is not None else 0.0
        return bow + self._lookup(word, ctx[1:])

    def prob(self, word: str, context: tuple[str, ...] | list[str] = ()) -> float:
        return 10.0 ** self.log10_prob(word, context)

    def surprisal_bits(self, word: str, context: tuple[str, ...] | list[str] = ()) -> float:
        return -self.log10_prob(word, context) / LOG10_2

    def stored_contexts(self) -> list[Gram]:
        """All grams carrying a backoff weight, ordered by (order, gram)."""
        out: list[Gram] = []
        for k in range(1, self.order):
            out.extend(g for g, (_, bow) in sorted(self.entries[k].items()) if bow is not None)
        return out

    def normalization_sum(self, context: Gram) -> float:
        """Sum of p(w | context) over the full predictable vocabulary."""
        return sum(self.prob(w, context) for w in self.predictable)


def build_model(
    counts: CountTable,
    discounts: Discounts | None = None,
    scheme_id: str | None = None,
) -> NgramModel:
    """Estimate interpolated modified-KN probabilities with backoff weights.

    The unigram base distribution is the normalized continuation counts; the
    unknown symbol receives whatever mass is left over, floored at
    ``UNK_FLOOR`` so unknown-word surprisal stays finite.
    """
    if counts.is_empty:
        raise DataError("cannot build a model from an empty count table")
    if discounts is None:
        discounts = estimate_discounts(counts)

    order = counts.order
    linear: dict[int, dict[Gram, float]] = {}
    bows: dict[int, dict[Gram, float]] = {k: {} for k in range(0, order)}

    uni = counts.adjusted[1]
    total = sum(uni.values())
    p1: dict[Gram, float] = {gram: c / total for gram, c in uni.items()}
    leftover = 1.0 - sum(p1.values())
    unk = (UNK,)
    p1[unk] = max(p1.get(unk, 0.0) + max(leftover, 0.0), UNK_FLOOR)
    linear[1] = p1

    for k in range(2, order + 1):
        table = counts.adjusted[k]
        by_ctx: dict[Gram, list[tuple[Gram, int]]] = {}
        for gram, c in table.items():
            by_ctx.setdefault(gram[:-1], []).append((gram, c))
        d = discounts.by_order[k]
        pk: dict[Gram, float] = {}
        lower = linear[k - 1]
        for ctx, grams in by_ctx.items():
            s = sum(c for _, c in grams)
            taken = 0.0
            for _, c in grams:
                taken += min(d.for_count(c), c)
            gamma = max(taken / s, GAMMA_FLOOR)
            bows[k - 1][ctx] = gamma
            for gram, c in grams:
                pk[gram] = max(c - d.for_count(c), 0.0) / s + gamma * lower[gram[1:]]
        linear[k] = pk

    entries: dict[int, dict[Gram, tuple[float, float | None]]] = {}
    for k in range(1, order + 1):
        level: dict[Gram, tuple[float, float | None]] = {}
        for gram, p in linear[k].items():
            bow = bows[k].get(gram) if k < order else None
            level[gram] = (math.log10(p), math.log10(bow) if bow is not None else None)
        # Contexts without their own probability: the start symbol and
        # pure-start prefixes. They get sentinel probabilities.
        if k < order:
            for ctx, gamma in bows[k].items():
                if ctx not in level:
                    level[ctx] = (SENTINEL_LOG10, math.log10(gamma))
        entries[k] = level
    if order > 1 and (BOS,) not in entries[1]:
        entries[1][(BOS,)] = (SENTINEL_LOG10, 0.0)

    return NgramModel(
        order=order,
        entries=entries,
        vocabulary=frozenset(counts.vocabulary),
        scheme_id=scheme_id or DEFAULT_SCHEME,
    )


def train(
    corpus, order: int = 5, scheme: str = DEFAULT_SCHEME, min_count: int = 1
) -> NgramModel:
    """count_ngrams + estimate_discounts + build_model in one step."""
    counts = count_ngrams(corpus, order=order, scheme=scheme, min_count=min_count)
    if counts.is_empty:
        raise DataError("empty corpus")
    return build_model(counts, estimate_discounts(counts), scheme_id=scheme)

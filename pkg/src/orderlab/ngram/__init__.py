"""Interpolated modified Kneser-Ney n-gram language model with ARPA interop."""

from .counts import BOS, EOS, UNK, RESERVED, CountTable, count_ngrams, merge_counts
from .discounts import Discounts, OrderDiscounts, discounts_from_counts_of_counts, estimate_discounts
from .model import NgramModel, build_model, train
from .arpa import read_arpa, write_arpa

__all__ = [
    "BOS", "EOS", "UNK", "RESERVED",
    "CountTable", "count_ngrams", "merge_counts",
    "Discounts", "OrderDiscounts", "discounts_from_counts_of_counts", "estimate_discounts",
    "NgramModel", "build_model", "train",
    "read_arpa", "write_arpa",
]

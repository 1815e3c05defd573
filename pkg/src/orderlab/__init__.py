"""Toolkit for measuring word-order preferences of language models.

Pipeline: train or load an n-gram baseline, score factorial stimulus
experiments by total surprisal under any backend, ingest human acceptability
ratings, and compute preference contrasts, interaction statistics, and
significance tests.
"""

__version__ = "0.1.0"

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from orderlab.stimuli import Experiment, Factor, Item


TOY_CORPUS = ["a b", "a b", "a c"]


@pytest.fixture
def toy_counts():
    from orderlab.ngram import count_ngrams

    return count_ngrams(TOY_CORPUS, order=2, scheme="whitespace")


def make_experiment(n_items=1, name="toy"):
    """2x2 order x np_length experiment with simple word-material sentences."""
    factors = [
        Factor("order", ("std", "shifted"), is_order_factor=True),
        Factor("np_length", ("short", "long")),
    ]
    items = []
    for i in range(n_items):
        items.append(
            Item(
                id=f"item{i + 1}",
                cells={
                    "std|short": f"the critic saw the play {i + 1} on monday .",
                    "std|long": f"the critic saw the long dull play {i + 1} on monday .",
                    "shifted|short": f"the critic saw on monday the play {i + 1} .",
                    "shifted|long": f"the critic saw on monday the long dull play {i + 1} .",
                },
            )
        )
    return Experiment(name=name, factors=factors, items=items)


@pytest.fixture
def experiment_2x2():
    return make_experiment(n_items=2)

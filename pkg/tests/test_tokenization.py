import pytest
from hypothesis import given
from hypothesis import strategies as st

from orderlab.errors import UsageError
from orderlab.tokenization import PUNCT_LOWER, WHITESPACE, tokenize


def test_punct_split_lowercase_heavy_np_example():
    ts = tokenize("The publisher announced a book on Thursday.", PUNCT_LOWER)
    assert list(ts.tokens) == ["the", "publisher", "announced", "a", "book", "on", "thursday", "."]


def test_punct_split_lowercase_particle_example():
    ts = tokenize("Kim gave up the habit.", PUNCT_LOWER)
    assert list(ts.tokens) == ["kim", "gave", "up", "the", "habit", "."]


def test_empty_sentence():
    assert tokenize("", PUNCT_LOWER).tokens == ()
    assert tokenize("   ", WHITESPACE).tokens == ()


def test_whitespace_scheme_preserves_case_and_punct():
    ts = tokenize("The cat, fast.", WHITESPACE)
    assert list(ts.tokens) == ["The", "cat,", "fast."]


def test_leading_and_stacked_punctuation():
    ts = tokenize('"Stop!" he said...', PUNCT_LOWER)
    assert list(ts.tokens) == ['"', "stop", "!", '"', "he", "said", ".", ".", "."]


def test_internal_punctuation_stays():
    ts = tokenize("don't re-do 3.5", PUNCT_LOWER)
    assert list(ts.tokens) == ["don't", "re-do", "3.5"]


def test_all_punct_chunk():
    assert list(tokenize("-- yes", PUNCT_LOWER).tokens) == ["-", "-", "yes"]


def test_unknown_scheme_rejected():
    with pytest.raises(UsageError):
        tokenize("a", "bogus-scheme")


@given(st.text(alphabet=st.characters(codec="ascii"), max_size=80))
def test_rejoin_idempotent(sentence):
    for scheme in (WHITESPACE, PUNCT_LOWER):
        toks = tokenize(sentence, scheme).tokens
        assert all(tok and not any(c.isspace() for c in tok) for tok in toks)
        again = tokenize(" ".join(toks), scheme).tokens
        assert again == toks


@given(st.text(max_size=60))
def test_deterministic(sentence):
    assert tokenize(sentence).tokens == tokenize(sentence).tokens

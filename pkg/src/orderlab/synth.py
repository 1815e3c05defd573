"""Desk-scale synthetic data: corpora, experiments, ratings, surprisal tables.

Template sentences realize a heavy-NP-shift-style alternation: the object NP
and a temporal PP swap order, and the object NP is short or long. The order
cue (verb followed by "on" vs "the") and the length cue (determiner followed
by an adjective vs the noun) co-occur within a five-token window, so a 5-gram
can pick up their interaction when the generator plants one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .manifest import derive_seed
from .stimuli import Experiment, Factor, Item, save_experiment
from .contrasts import ContrastSpec, save_contrast_spec

SUBJECTS = [
    "reporter", "teacher", "lawyer", "doctor", "farmer", "editor", "artist", "banker",
    "coach", "judge", "nurse", "pilot", "singer", "waiter", "writer", "clerk",
]
VERBS = ["announced", "described", "mentioned", "reported", "discussed", "praised",
         "examined", "reviewed"]
OBJECTS = [
    "plan", "book", "deal", "painting", "contract", "schedule", "budget", "design",
    "report", "proposal", "project", "poem", "memo", "recipe", "song", "statue",
    "survey", "essay", "sketch", "treaty", "lecture", "novel", "garden", "bridge",
]
ADJECTIVES = ["new", "old", "big", "small", "rare", "fine"]
RELATIVES = [
    "that everyone had expected",
    "that the committee had rejected",
    "that nobody could explain",
    "that the critics had praised",
    "that the town had funded",
    "that the board had approved",
]
DAYS = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"]

ORDER_FACTOR = "order"
LENGTH_FACTOR = "np_length"
STD, SHIFTED = "std", "shifted"
SHORT, LONG = "short", "long"


@dataclass(frozen=True)
class CorpusSpec:
    n_sentences: int = 50000
    p_shift_given_long: float = 0.8
    p_shift_given_short: float = 0.1
    p_long: float = 0.5


@dataclass(frozen=True)
class RatingsSpec:
    n_subjects: int = 64
    n_low_accuracy: int = 9
    n_non_native: int = 0
    # Order and length main effects, no intrinsic interaction (see SurprisalSpec).
    base_rating: dict = field(
        default_factory=lambda: {
            "std|short": 4.3, "std|long": 3.3, "shifted|short": 2.4, "shifted|long": 1.4,
        }
    )
    interaction: float = 0.0
    noise_sd: float = 0.6
    subject_sd: float = 0.5
    item_sd: float = 0.3


@dataclass(frozen=True)
class SurprisalSpec:
    # Defaults carry order and length main effects but no intrinsic
    # interaction, so interaction_bits=0 is an exact null.
    base_bits: dict = field(
        default_factory=lambda: {
            "std|short": 50.0, "std|long": 62.0, "shifted|short": 53.0, "shifted|long": 65.0,
        }
    )
    interaction_bits: float = 0.0
    noise_sd: float = 1.0
    backend_id: str = "synthetic:planted"


@dataclass
class SyntheticSpec:
    name: str = "heavy-np-synth"
    seed: int = 0
    n_items: int = 40
    corpus: CorpusSpec | None = None
    ratings: RatingsSpec | None = None
    surprisal: SurprisalSpec | None = None

    def validate(self) -> None:
        if self.n_items < 1:
            raise DataError(f"n_items must be >= 1, got {self.n_items}")
        if self.corpus:
            for name in ("p_shift_given_long", "p_shift_given_short", "p_long"):
                p = getattr(self.corpus, name)
                if not 0.0 <= p <= 1.0:
                    raise DataError(f"{name} must be a probability, got {p}")
            if self.corpus.n_sentences < 1:
                raise DataError("corpus.n_sentences must be >= 1")
        if self.ratings:
            if self.ratings.noise_sd < 0 or self.ratings.subject_sd < 0 or self.ratings.item_sd < 0:
                raise DataError("ratings noise parameters must be >= 0")
            if self.ratings.n_low_accuracy + self.ratings.n_non_native > self.ratings.n_subjects:
                raise DataError("more failing subjects than subjects")
        if self.surprisal and self.surprisal.noise_sd < 0:
            raise DataError("surprisal.noise_sd must be >= 0")


def load_synthetic_spec(path: str | Path) -> SyntheticSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read synthetic spec {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"synthetic spec {path} is not valid JSON: {exc}") from exc
    return synthetic_spec_from_dict(data)


def synthetic_spec_from_dict(data: dict) -> SyntheticSpec:
    try:
        spec = SyntheticSpec(
            name=data.get("name", "heavy-np-synth"),
            seed=int(data.get("seed", 0)),
            n_items=int(data.get("n_items", 40)),
            corpus=CorpusSpec(**data["corpus"]) if "corpus" in data else None,
            ratings=RatingsSpec(**data["ratings"]) if "ratings" in data else None,
            surprisal=SurprisalSpec(**data["surprisal"]) if "surprisal" in data else None,
        )
    except TypeError as exc:
        raise DataError(f"synthetic spec has unknown fields: {exc}") from exc
    spec.validate()
    return spec


@dataclass(frozen=True)
class _Material:
    subject: str
    verb: str
    obj: str
    day: str
    adjectives: tuple[str, str]
    relative: str

    def np(self, length: str) -> str:
        if length == SHORT:
            return f"the {self.obj}"
        a1, a2 = self.adjectives
        return f"the {a1} {a2} {self.obj} {self.relative}"

    def sentence(self, order: str, length: str) -> str:
        np_ = self.np(length)
        if order == STD:
            return f"the {self.subject} {self.verb} {np_} on {self.day} ."
        return f"the {self.subject} {self.verb} on {self.day} {np_} ."


def _draw_material(rng: np.random.Generator) -> _Material:
    return _Material(
        subject=SUBJECTS[rng.integers(len(SUBJECTS))],
        verb=VERBS[rng.integers(len(VERBS))],
        obj=OBJECTS[rng.integers(len(OBJECTS))],
        day=DAYS[rng.integers(len(DAYS))],
        adjectives=(ADJECTIVES[rng.integers(len(ADJECTIVES))],
                    ADJECTIVES[rng.integers(len(ADJECTIVES))]),
        relative=RELATIVES[rng.integers(len(RELATIVES))],
    )


def generate_corpus(spec: SyntheticSpec, path: str | Path) -> int:
    """Write one sentence per line; shifted order is sampled conditionally on
    NP length with the spec's probabilities."""
    cs = spec.corpus or CorpusSpec()
    rng = np.random.default_rng(derive_seed(spec.seed, "corpus"))
    with open(path, "w", encoding="utf-8") as fh:
        for _ in range(cs.n_sentences):
            material = _draw_material(rng)
            long_np = rng.random() < cs.p_long
            p_shift = cs.p_shift_given_long if long_np else cs.p_shift_given_short
            order = SHIFTED if rng.random() < p_shift else STD
            fh.write(material.sentence(order, LONG if long_np else SHORT) + "\n")
    return cs.n_sentences


def generate_experiment(spec: SyntheticSpec) -> Experiment:
    rng = np.random.default_rng(derive_seed(spec.seed, "items"))
    factors = [
        Factor(ORDER_FACTOR, (STD, SHIFTED), is_order_factor=True),
        Factor(LENGTH_FACTOR, (SHORT, LONG)),
    ]
    items = []
    seen = set()
    while len(items) < spec.n_items:
        material = _draw_material(rng)
        if material in seen:
            continue
        seen.add(material)
        idx = len(items) + 1
        cells = {
            f"{o}|{l}": material.sentence(o, l)
            for o in (STD, SHIFTED)
            for l in (SHORT, LONG)
        }
        items.append(Item(id=f"item{idx:03d}", cells=cells))
    return Experiment(name=spec.name, factors=factors, items=items)


def default_contrast() -> ContrastSpec:
    # m1=long first so a short-before-long preference yields a positive mean.
    return ContrastSpec(
        order_factor=ORDER_FACTOR,
        base=STD,
        variant=SHIFTED,
        moderator=LENGTH_FACTOR,
        moderator_levels=(LONG, SHORT),
    )


def generate_ratings(spec: SyntheticSpec, exp: Experiment, path: str | Path) -> int:
    """Synthetic 1-5 ratings with planted subject/item effects.

    Exactly n_low_accuracy subjects fall below the 0.8 comprehension
    threshold and n_non_native are flagged non-native (disjoint sets).
    """
    rs = spec.ratings or RatingsSpec()
    rng = np.random.default_rng(derive_seed(spec.seed, "ratings"))
    keys = exp.condition_keys()
    n_rows = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("subject_id,native_speaker,comprehension_accuracy,item_id,condition_key,rating\n")
        item_offsets = {it.id: rng.normal(0, rs.item_sd) for it in exp.items}
        for s in range(rs.n_subjects):
            sid = f"subj{s + 1:03d}"
            low_acc = s < rs.n_low_accuracy
            non_native = rs.n_low_accuracy <= s < rs.n_low_accuracy + rs.n_non_native
            accuracy = round(float(rng.uniform(0.4, 0.79)) if low_acc else float(rng.uniform(0.8, 1.0)), 3)
            native = "false" if non_native else "true"
            offset = rng.normal(0, rs.subject_sd)
            for item in exp.items:
                for key in keys:
                    mean = rs.base_rating.get(key, 3.0) + offset + item_offsets[item.id]
                    if key == f"{STD}|{LONG}":
                        mean += rs.interaction
                    value = mean + rng.normal(0, rs.noise_sd) if rs.noise_sd > 0 else mean
                    rating = int(np.clip(round(value), 1, 5))
                    fh.write(f"{sid},{native},{accuracy},{item.id},{key},{rating}\n")
                    n_rows += 1
    return n_rows


def generate_surprisal_table(spec: SyntheticSpec, exp: Experiment, path: str | Path) -> int:
    """Direct per-sentence totals with a planted interaction, bypassing any
    model: base bits per condition + item offset + noise, plus the planted
    interaction on the (long, std) cell."""
    ss = spec.surprisal or SurprisalSpec()
    rng = np.random.default_rng(derive_seed(spec.seed, "surprisal"))
    keys = exp.condition_keys()
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"#backend_id={ss.backend_id} eos_included=true\n")
        fh.write("sentence_id\ttoken_index\ttoken\tsurprisal_bits\n")
        for item in exp.items:
            item_offset = rng.normal(0, 2.0)
            for key in keys:
                total = ss.base_bits.get(key, 50.0) + item_offset
                if key == f"{STD}|{LONG}":
                    total += ss.interaction_bits
                if ss.noise_sd > 0:
                    total += rng.normal(0, ss.noise_sd)
                total = max(total, 0.0)
                fh.write(f"{item.id}::{key}\t0\tTOTAL\t{total!r}\n")
                n += 1
    return n


def generate(spec: SyntheticSpec, out_dir: str | Path) -> dict[str, str]:
    """Emit whichever artifacts the spec configures; returns written paths."""
    spec.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, str] = {}

    exp = generate_experiment(spec)
    exp_path = out / "experiment.json"
    save_experiment(exp, exp_path)
    written["experiment"] = str(exp_path)

    contrast_path = out / "contrast.json"
    save_contrast_spec(default_contrast(), contrast_path)
    written["contrast"] = str(contrast_path)

    if spec.corpus is not None:
        corpus_path = out / "corpus.txt"
        generate_corpus(spec, corpus_path)
        written["corpus"] = str(corpus_path)
    if spec.ratings is not None:
        ratings_path = out / "ratings.csv"
        generate_ratings(spec, exp, ratings_path)
        written["ratings"] = str(ratings_path)
    if spec.surprisal is not None:
        surprisal_path = out / "surprisal_synthetic.tsv"
        generate_surprisal_table(spec, exp, surprisal_path)
        written["surprisal"] = str(surprisal_path)
    return written

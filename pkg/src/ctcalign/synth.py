"""Synthetic CTC-like posteriors and the exhaustive alignment oracle.

Trained CTC models emit epsilon with near-certainty on most steps,
interrupted by short character peaks. The generator reproduces that
shape deterministically from a seed so the whole pipeline can be
exercised without any model; the oracle maximizes over every accepted
path by enumeration and is the ground truth the fast aligner is checked
against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .aligner import PathSolution
from .errors import AlignmentInfeasibleError, NumericallyInfeasibleError
from .fsa import Transcription, build_fsa, enumerate_paths
from .posteriors import (
    Alphabet,
    LetterBundle,
    PosteriorMatrix,
    concatenate,
    epsilon_compress,
)

GENERATOR_NAME = "pcg64"


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic letter.

    Each character of each line is emitted as ``epsilon_run`` epsilon
    steps followed by ``steps_per_char`` character steps; every line
    ends with one more epsilon run. ``noise`` is the probability mass
    moved off the intended symbol, spread over the wrong symbols in
    seeded random proportions.
    """

    lines: tuple[str, ...]
    steps_per_char: int = 2
    epsilon_run: int = 2
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "lines", tuple(self.lines))
        if not 0.0 <= self.noise < 1.0:
            raise ValueError(f"noise must be in [0, 1), got {self.noise}")
        if self.steps_per_char < 1:
            raise ValueError("steps_per_char must be >= 1")
        if self.epsilon_run < 1:
            raise ValueError("epsilon_run must be >= 1")

    @property
    def transcription(self) -> Transcription:
        """The letter text implied by the lines, breaks discarded."""
        return Transcription("".join(self.lines))

    @classmethod
    def from_json(cls, doc: dict) -> "SynthSpec":
        return cls(
            lines=tuple(doc["lines"]),
            steps_per_char=doc.get("steps_per_char", 2),
            epsilon_run=doc.get("epsilon_run", 2),
            noise=doc.get("noise", 0.0),
            seed=doc.get("seed", 0),
        )


def _rows(rng, target, count, size, noise):
    rows = np.zeros((count, size))
    rows[:, target] = 1.0 - noise
    if noise > 0.0:
        wrong = [i for i in range(size) if i != target]
        weights = rng.random((count, size - 1))
        weights /= weights.sum(axis=1, keepdims=True)
        rows[:, wrong] = noise * weights
    return rows


def generate_posteriors(
    spec: SynthSpec, alphabet: Alphabet, letter_id: str = "synthetic"
) -> LetterBundle:
    """Deterministic peaked posteriors spelling out the spec's lines."""
    for line in spec.lines:
        for char in line:
            if char not in alphabet:
                raise ValueError(f"character {char!r} is not in the alphabet")
    rng = np.random.default_rng(spec.seed)
    size = alphabet.size
    matrices = []
    for k, line in enumerate(spec.lines):
        blocks = []
        for char in line:
            blocks.append(_rows(rng, 0, spec.epsilon_run, size, spec.noise))
            blocks.append(
                _rows(rng, alphabet.index_of(char), spec.steps_per_char, size,
                      spec.noise)
            )
        blocks.append(_rows(rng, 0, spec.epsilon_run, size, spec.noise))
        matrices.append(
            PosteriorMatrix(line_id=f"line_{k:03d}", probs=np.vstack(blocks))
        )
    return concatenate(matrices, letter_id=letter_id)


def alphabet_for(spec: SynthSpec) -> Alphabet:
    """Smallest alphabet covering the spec's lines, sorted for stability."""
    chars = sorted(set("".join(spec.lines)))
    if not chars:
        raise ValueError("spec lines contain no characters")
    return Alphabet.from_characters(chars)


def synth_metadata(spec: SynthSpec) -> dict:
    return {"generator": GENERATOR_NAME, "seed": spec.seed,
            "noise": spec.noise, "steps_per_char": spec.steps_per_char,
            "epsilon_run": spec.epsilon_run}


def load_synth_spec(path) -> tuple[SynthSpec, str, str | None]:
    """Read a synth spec file: (spec, letter_id, alphabet path or None)."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    spec = SynthSpec.from_json(doc)
    return spec, doc.get("letter_id", "synthetic"), doc.get("alphabet")


def brute_force_align(
    bundle: LetterBundle,
    transcription: Transcription,
    alphabet: Alphabet,
    theta: float,
) -> PathSolution:
    """Exhaustive maximum over all accepted paths; desk-scale oracle.

    Same contract as the fast aligner's path solution, computed by
    scoring every enumerated path independently.
    """
    compressed = epsilon_compress(bundle, theta)
    fsa = build_fsa(transcription, alphabet)
    paths = enumerate_paths(fsa, compressed.steps)
    if not paths:
        raise AlignmentInfeasibleError(
            required_steps=fsa.min_accepting_length(),
            available_steps=compressed.steps,
        )
    log_probs = compressed.log_probs
    steps = np.arange(compressed.steps)
    matrix = np.asarray(sorted(paths), dtype=np.int32)
    scores = log_probs[steps[None, :], fsa.symbol_index[matrix]].sum(axis=1)
    winner = int(scores.argmax())
    best_score = float(scores[winner])
    if not np.isfinite(best_score):
        raise NumericallyInfeasibleError(
            "every accepting path has zero probability"
        )
    states = matrix[winner]
    return PathSolution(
        states=states,
        log_prob=best_score,
        per_step_log_prob=log_probs[steps, fsa.symbol_index[states]],
    )

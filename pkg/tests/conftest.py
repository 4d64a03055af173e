"""Shared generators and reference implementations for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from ctcalign import (
    Alphabet,
    PosteriorMatrix,
    Transcription,
    build_fsa,
    concatenate,
)


@pytest.fixture
def tiny_alphabet():
    return Alphabet.from_characters("ab ")


def random_rows(rng, steps: int, size: int, eps_heavy: float = 0.0) -> np.ndarray:
    """Dense random stochastic rows; a fraction can be epsilon-dominated."""
    rows = rng.dirichlet(np.ones(size), size=steps)
    if eps_heavy > 0.0:
        heavy = rng.random(steps) < eps_heavy
        rows[heavy, 0] = 0.995 + 0.004 * rng.random(heavy.sum())
        rest = rows[heavy, 1:]
        rest /= rest.sum(axis=1, keepdims=True)
        rows[heavy, 1:] = (1.0 - rows[heavy, 0])[:, None] * rest
    return rows


def random_bundle(rng, num_lines: int, size: int, max_steps: int = 12,
                  eps_heavy: float = 0.3):
    matrices = []
    for k in range(num_lines):
        steps = int(rng.integers(1, max_steps + 1))
        matrices.append(
            PosteriorMatrix(f"l{k}", random_rows(rng, steps, size, eps_heavy))
        )
    return concatenate(matrices, letter_id="rand")


def random_instance(rng, max_chars: int = 10, max_steps: int = 14):
    """Random feasible alignment instance over a small alphabet.

    Returns (bundle, transcription, alphabet, theta). The raw step count
    is drawn at or above the shortest accepting path so the instance is
    always alignable even if compression removes steps.
    """
    chars = "ab c"
    alphabet = Alphabet.from_characters(sorted(set(chars)))
    n = int(rng.integers(1, max_chars + 1))
    text = "".join(rng.choice(list(chars), size=n))
    fsa = build_fsa(Transcription(text), alphabet)
    lo = fsa.min_accepting_length()
    if lo > max_steps:
        return random_instance(rng, max_chars, max_steps)
    total = int(rng.integers(lo, max_steps + 1))
    num_lines = int(rng.integers(1, 3)) if total >= 2 else 1
    cut = int(rng.integers(1, total)) if num_lines == 2 else total
    sizes = [cut, total - cut] if num_lines == 2 else [total]
    matrices = [
        PosteriorMatrix(
            f"l{k}", random_rows(rng, s, alphabet.size, eps_heavy=0.2)
        )
        for k, s in enumerate(sizes)
    ]
    bundle = concatenate(matrices, letter_id="inst")
    theta = float(rng.choice([0.9, 0.99]))
    return bundle, Transcription(text), alphabet, theta


def reference_edit_distance(a, b) -> int:
    """Full-table Wagner-Fischer, kept independent of the library's version."""
    n, m = len(a), len(b)
    table = np.zeros((n + 1, m + 1), dtype=np.int64)
    table[:, 0] = np.arange(n + 1)
    table[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            table[i, j] = min(
                table[i - 1, j] + 1,
                table[i, j - 1] + 1,
                table[i - 1, j - 1] + (a[i - 1] != b[j - 1]),
            )
    return int(table[n, m])


def assert_valid_path(fsa, states, T):
    """Structural acceptance check for a state sequence."""
    assert len(states) == T
    assert states[0] in fsa.initial_states
    assert states[-1] in fsa.final_states
    for prev, cur in zip(states, states[1:]):
        assert prev in fsa.predecessors(int(cur)), (prev, cur)

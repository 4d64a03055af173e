"""Linear automaton over a transcription with epsilon interleaving.

The transcription ``c_1 .. c_n`` expands to the state chain
``eps_0, c_1, eps_1, c_2, ..., c_n, eps_n`` (2n+1 states). Every state
loops on itself, every state connects forward to its neighbor, and a
skip arc ``c_{k-1} -> c_k`` bypasses the epsilon in between unless the
two characters are identical: a character transition is only detectable
when at least one epsilon separates equal characters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EnumerationLimitError
from .posteriors import Alphabet

ENUMERATION_GUARD = 1_000_000


@dataclass(frozen=True)
class Transcription:
    """Letter text with all newline characters already discarded."""

    text: str

    def __post_init__(self):
        if "\n" in self.text or "\r" in self.text:
            raise ValueError("transcription must not contain newline characters")

    @property
    def char_count(self) -> int:
        return len(self.text)


def make_transcription(raw: str) -> Transcription:
    """Drop newline characters from raw letter text."""
    return Transcription(raw.replace("\r", "").replace("\n", ""))


@dataclass(frozen=True)
class TranscriptionFsa:
    """Predecessor-oriented automaton; state ids follow the chain order.

    Even ids are epsilon states (``eps_k`` at id ``2k``), odd ids are
    character states (``c_k`` at id ``2k-1``). ``symbol_index[s]`` is
    the alphabet column the state emits; ``skip_ok[s]`` is True where
    the direct arc from the previous character state exists.
    """

    text: str
    symbol_index: np.ndarray
    skip_ok: np.ndarray

    @property
    def num_states(self) -> int:
        return len(self.symbol_index)

    @property
    def char_count(self) -> int:
        return len(self.text)

    @property
    def initial_states(self) -> tuple[int, int]:
        return (0, 1)

    @property
    def final_states(self) -> tuple[int, int]:
        return (self.num_states - 2, self.num_states - 1)

    @staticmethod
    def is_char_state(state: int) -> bool:
        return state % 2 == 1

    @staticmethod
    def char_position(state: int) -> int:
        """0-based transcription position of a character state."""
        return (state - 1) // 2

    def predecessors(self, state: int) -> tuple[int, ...]:
        preds = [state]
        if state >= 1:
            preds.append(state - 1)
        if self.skip_ok[state]:
            preds.append(state - 2)
        return tuple(preds)

    def successors(self, state: int) -> tuple[int, ...]:
        succ = [state]
        if state + 1 < self.num_states:
            succ.append(state + 1)
        if state + 2 < self.num_states and self.skip_ok[state + 2]:
            succ.append(state + 2)
        return tuple(succ)

    def min_accepting_length(self) -> int:
        """Steps of the shortest accepting path.

        Every character state must be visited; an epsilon visit is
        forced wherever the skip arc is missing between two characters.
        """
        n = self.char_count
        forced_eps = sum(
            1 for s in range(3, self.num_states, 2) if not self.skip_ok[s]
        )
        return n + forced_eps

    def dump(self) -> str:
        """Stable text rendering, one state per line."""
        out = []
        for s in range(self.num_states):
            if self.is_char_state(s):
                pos = self.char_position(s)
                desc = f"char {self.text[pos]!r} pos={pos}"
            else:
                desc = f"eps gap={s // 2}"
            preds = ",".join(str(p) for p in sorted(self.predecessors(s)))
            flags = ""
            if s in self.initial_states:
                flags += " initial"
            if s in self.final_states:
                flags += " final"
            out.append(f"state {s} {desc} sym={self.symbol_index[s]} "
                       f"preds={preds}{flags}")
        return "\n".join(out) + "\n"


def build_fsa(transcription: Transcription, alphabet: Alphabet) -> TranscriptionFsa:
    """Expand a transcription into its epsilon-interleaved automaton."""
    text = transcription.text
    if not text:
        raise ValueError("cannot build an automaton for an empty transcription")
    n = len(text)
    symbol_index = np.zeros(2 * n + 1, dtype=np.int32)
    skip_ok = np.zeros(2 * n + 1, dtype=bool)
    for k, char in enumerate(text, start=1):
        if char not in alphabet:
            raise ValueError(
                f"character {char!r} at position {k - 1} is not in the alphabet"
            )
        state = 2 * k - 1
        symbol_index[state] = alphabet.index_of(char)
        if k >= 2:
            skip_ok[state] = text[k - 2] != text[k - 1]
    symbol_index.flags.writeable = False
    skip_ok.flags.writeable = False
    return TranscriptionFsa(text=text, symbol_index=symbol_index, skip_ok=skip_ok)


def enumerate_paths(fsa: TranscriptionFsa, length: int) -> set[tuple[int, ...]]:
    """All accepting state sequences of exactly ``length`` steps.

    Exhaustive; intended for desk-scale oracle checks only.
    """
    if length < 1:
        raise ValueError("path length must be >= 1")
    if fsa.num_states * length > ENUMERATION_GUARD:
        raise EnumerationLimitError(
            f"{fsa.num_states} states x {length} steps exceeds the "
            f"enumeration guard of {ENUMERATION_GUARD}"
        )

    # Minimal remaining steps from each state to a final state, used to
    # prune dead branches early.
    S = fsa.num_states
    INF = S + length + 1
    dist = np.full(S, INF, dtype=np.int64)
    for f in fsa.final_states:
        dist[f] = 0
    for s in range(S - 3, -1, -1):
        best = dist[s + 1] + 1
        if s + 2 < S and fsa.skip_ok[s + 2]:
            best = min(best, dist[s + 2] + 1)
        dist[s] = min(dist[s], best)

    finals = set(fsa.final_states)
    paths: set[tuple[int, ...]] = set()
    stack = [
        ((s,), length - 1) for s in fsa.initial_states if dist[s] <= length - 1
    ]
    while stack:
        prefix, remaining = stack.pop()
        state = prefix[-1]
        if remaining == 0:
            if state in finals:
                paths.add(prefix)
            continue
        for nxt in fsa.successors(state):
            if dist[nxt] <= remaining - 1:
                stack.append((prefix + (nxt,), remaining - 1))
    return paths

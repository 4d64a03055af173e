"""Token-passing alignment of a compressed letter sequence to its automaton.

One score per automaton state is kept in memory (a single column).
Tokens flow forward through the chain each time step; the winning
token's history is a linked chain of state-entry records, from which
the full optimal state sequence is rebuilt. Dead records are reclaimed
by periodic mark-and-sweep compaction so that working memory stays
proportional to the automaton, not to the sequence length.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    AlignmentInfeasibleError,
    FormatError,
    NumericallyInfeasibleError,
)
from .fsa import Transcription, TranscriptionFsa
from .posteriors import CompressedSequence

GAMMA6_WINDOW = 6
GAMMA6_MIN_CHARS = 12

# Peak backtrace-arena capacity of the most recent DP run; diagnostic
# for the one-column memory contract.
LAST_ARENA_CAPACITY = 0


@dataclass(frozen=True)
class PathSolution:
    """Optimal accepted state sequence with its per-step probabilities."""

    states: np.ndarray
    log_prob: float
    per_step_log_prob: np.ndarray

    @property
    def per_step_prob(self) -> np.ndarray:
        return np.exp(self.per_step_log_prob)

    @property
    def length(self) -> int:
        return len(self.states)


@dataclass(frozen=True)
class AlignedLine:
    line_id: str
    text: str
    start_step: int
    end_step: int
    gamma: float
    gamma6: float
    char_span: tuple[int, int] | None = None


@dataclass(frozen=True)
class AlignmentResult:
    letter_id: str
    lines: tuple[AlignedLine, ...]
    total_log_prob: float
    runtime_seconds: float


class _RecordArena:
    """Append-only (step, state, prev) records with mark-sweep compaction.

    Tokens reference records by index; ``-1`` is the empty chain. Live
    records are those reachable from the current token heads, so the
    arena is compacted against the heads whenever it fills up.
    """

    def __init__(self, num_states: int):
        self._capacity = max(1024, 4 * num_states)
        self.step = np.empty(self._capacity, dtype=np.int64)
        self.state = np.empty(self._capacity, dtype=np.int32)
        self.prev = np.empty(self._capacity, dtype=np.int64)
        self.used = 0

    @property
    def live_bound(self) -> int:
        return self._capacity

    def append(self, steps, states, prevs, heads) -> np.ndarray:
        """Store new records; may compact, remapping ``heads`` and ``prevs``."""
        count = len(states)
        if self.used + count > self._capacity:
            prevs = self._compact(heads, extra=prevs)
            while self.used + count > self._capacity:
                self._grow()
        ids = np.arange(self.used, self.used + count, dtype=np.int64)
        self.step[ids] = steps
        self.state[ids] = states
        self.prev[ids] = prevs
        self.used += count
        return ids

    def _grow(self):
        self._capacity *= 2
        for name in ("step", "state", "prev"):
            old = getattr(self, name)
            new = np.empty(self._capacity, dtype=old.dtype)
            new[: self.used] = old[: self.used]
            setattr(self, name, new)

    def _compact(self, heads: np.ndarray, extra: np.ndarray) -> np.ndarray:
        mark = np.zeros(self.used, dtype=bool)
        frontier = np.unique(np.concatenate([heads, extra]))
        frontier = frontier[frontier >= 0]
        while frontier.size:
            frontier = frontier[~mark[frontier]]
            mark[frontier] = True
            nxt = self.prev[frontier]
            frontier = np.unique(nxt[nxt >= 0])

        remap = np.cumsum(mark, dtype=np.int64) - 1
        live = int(mark.sum())
        for name in ("step", "state", "prev"):
            arr = getattr(self, name)
            arr[:live] = arr[: self.used][mark]
        kept_prev = self.prev[:live]
        valid = kept_prev >= 0
        kept_prev[valid] = remap[kept_prev[valid]]
        self.used = live

        def follow(ids):
            out = ids.copy()
            ok = out >= 0
            out[ok] = remap[out[ok]]
            return out

        heads[:] = follow(heads)
        return follow(extra)

    def chain(self, head: int) -> list[tuple[int, int]]:
        """Records reachable from ``head``, oldest first."""
        out = []
        idx = head
        while idx >= 0:
            out.append((int(self.step[idx]), int(self.state[idx])))
            idx = int(self.prev[idx])
        out.reverse()
        return out


def _token_pass(log_probs: np.ndarray, fsa: TranscriptionFsa) -> PathSolution:
    T = log_probs.shape[0]
    S = fsa.num_states
    sym = fsa.symbol_index
    skip = fsa.skip_ok
    idx = np.arange(S, dtype=np.int64)
    neg_inf = -np.inf

    arena = _RecordArena(S)
    scores = np.full(S, neg_inf)
    heads = np.full(S, -1, dtype=np.int64)

    emit = log_probs[0][sym]
    init = np.fromiter(fsa.initial_states, dtype=np.int64)
    scores[init] = emit[init]
    alive = init[np.isfinite(scores[init])]
    if len(alive) == 0:
        raise NumericallyInfeasibleError(
            "both initial states have zero probability at the first step"
        )
    ids = arena.append(
        np.zeros(len(alive), dtype=np.int64),
        alive.astype(np.int32),
        np.full(len(alive), -1, dtype=np.int64),
        heads,
    )
    heads[alive] = ids

    cand1 = np.empty(S)
    cand2 = np.empty(S)
    for t in range(1, T):
        cand1[0] = neg_inf
        cand1[1:] = scores[:-1]
        cand2.fill(neg_inf)
        cand2[2:] = scores[:-2]
        cand2[~skip] = neg_inf

        best = scores.copy()
        bp = idx.copy()
        better = cand1 > best
        best[better] = cand1[better]
        bp[better] = idx[better] - 1
        better = cand2 > best
        best[better] = cand2[better]
        bp[better] = idx[better] - 2

        scores = best + log_probs[t][sym]
        alive_mask = np.isfinite(scores)
        if not alive_mask.any():
            raise NumericallyInfeasibleError(
                f"all tokens died at step {t}: no accepting path has "
                f"nonzero probability"
            )
        entries = alive_mask & (bp != idx)
        new_heads = heads[bp]
        new_heads[~alive_mask] = -1
        if entries.any():
            entering = idx[entries]
            ids = arena.append(
                np.full(len(entering), t, dtype=np.int64),
                entering.astype(np.int32),
                heads[bp[entries]],
                new_heads,
            )
            new_heads[entering] = ids
        heads = new_heads

    global LAST_ARENA_CAPACITY
    LAST_ARENA_CAPACITY = arena.live_bound

    f_char, f_eps = fsa.final_states
    if not (np.isfinite(scores[f_char]) or np.isfinite(scores[f_eps])):
        raise NumericallyInfeasibleError(
            "no token reached a final state with nonzero probability"
        )
    final = f_eps if scores[f_eps] >= scores[f_char] else f_char

    states = np.empty(T, dtype=np.int32)
    records = arena.chain(int(heads[final]))
    for (step, state), nxt in zip(records, records[1:] + [(T, -1)]):
        states[step : nxt[0]] = state
    states.flags.writeable = False
    per_step = log_probs[np.arange(T), sym[states]]
    per_step.flags.writeable = False
    return PathSolution(
        states=states,
        log_prob=float(scores[final]),
        per_step_log_prob=per_step,
    )


def line_confidences(
    path: PathSolution, start: int, end: int, text_length: int
) -> tuple[float, float]:
    """Mean path probability over a step span, plus its boundary variant.

    The boundary confidence averages the first and last six steps and is
    zeroed for lines under twelve characters (or spans under twelve
    steps, where the two windows would overlap).
    """
    if end <= start:
        return 0.0, 0.0
    probs = path.per_step_prob[start:end]
    gamma = float(probs.mean())
    if text_length < GAMMA6_MIN_CHARS or end - start < 2 * GAMMA6_WINDOW:
        gamma6 = 0.0
    else:
        head = probs[:GAMMA6_WINDOW].mean()
        tail = probs[-GAMMA6_WINDOW:].mean()
        gamma6 = float((head + tail) / 2.0)
    return gamma, gamma6


def _char_entry_steps(path: PathSolution) -> list[tuple[int, int]]:
    """(char position, first emission step) for every transcription char."""
    states = path.states
    entries = []
    prev = -1
    for t, s in enumerate(states):
        s = int(s)
        if s != prev and TranscriptionFsa.is_char_state(s):
            entries.append((TranscriptionFsa.char_position(s), t))
        prev = s
    return entries


def insert_newlines(
    path: PathSolution,
    compressed: CompressedSequence,
    transcription: Transcription,
) -> tuple[AlignedLine, ...]:
    """Split the transcription into per-line spans along the optimal path.

    Each character belongs to the line in which it is first emitted. A
    single whitespace character ending a line's text is treated as the
    line-break separator and rendered in neither line; a line whose span
    emits no characters at all becomes a gap (empty text).
    """
    if path.length != compressed.steps:
        raise ValueError("path length does not match the compressed sequence")
    text = transcription.text
    entry_line = {
        pos: int(compressed.line_of_step[step])
        for pos, step in _char_entry_steps(path)
    }

    lines = []
    cursor = 0
    num_lines = compressed.num_lines
    for k in range(num_lines):
        begin = cursor
        while cursor < len(text) and entry_line.get(cursor, num_lines) == k:
            cursor += 1
        span = (begin, cursor)
        rendered = text[begin:cursor]
        if k < num_lines - 1 and rendered and rendered[-1].isspace():
            rendered = rendered[:-1]
            span = (begin, cursor - 1)
        start, end = compressed.line_span(k)
        gamma, gamma6 = line_confidences(path, start, end, len(rendered))
        lines.append(
            AlignedLine(
                line_id=compressed.line_ids[k],
                text=rendered,
                start_step=start,
                end_step=end,
                gamma=gamma,
                gamma6=gamma6,
                char_span=span,
            )
        )
    return tuple(lines)


def reconstruct_transcription(lines, transcription: Transcription) -> str:
    """Concatenate line texts, re-inserting consumed boundary whitespace."""
    parts = []
    for line, nxt in zip(lines, list(lines[1:]) + [None]):
        parts.append(line.text)
        stop = line.char_span[1]
        if nxt is not None and nxt.char_span[0] == stop + 1:
            parts.append(transcription.text[stop])
    return "".join(parts)


def align_letter(
    compressed: CompressedSequence, fsa: TranscriptionFsa
) -> AlignmentResult:
    """Globally optimal forced alignment of one letter.

    Finds the accepted state sequence maximizing the summed log
    probability over the compressed steps, then materializes line texts
    and confidences from the line membership of each step.
    """
    started = time.perf_counter()
    T = compressed.steps
    if T < 1:
        raise ValueError("compressed sequence is empty")
    if fsa.char_count < 1:
        raise ValueError("automaton is empty")
    if int(fsa.symbol_index.max()) >= compressed.num_symbols:
        raise ValueError(
            "automaton indexes a symbol outside the posterior alphabet"
        )
    needed = fsa.min_accepting_length()
    if T < needed:
        raise AlignmentInfeasibleError(required_steps=needed, available_steps=T)

    path = _token_pass(compressed.log_probs, fsa)
    lines = insert_newlines(path, compressed, Transcription(fsa.text))
    return AlignmentResult(
        letter_id=compressed.letter_id,
        lines=lines,
        total_log_prob=path.log_prob,
        runtime_seconds=time.perf_counter() - started,
    )


def solve_path(compressed: CompressedSequence, fsa: TranscriptionFsa) -> PathSolution:
    """The DP core alone, without line materialization."""
    needed = fsa.min_accepting_length()
    if compressed.steps < needed:
        raise AlignmentInfeasibleError(
            required_steps=needed, available_steps=compressed.steps
        )
    return _token_pass(compressed.log_probs, fsa)


def alignment_to_dict(result: AlignmentResult) -> dict:
    return {
        "letter_id": result.letter_id,
        "total_log_prob": result.total_log_prob,
        "runtime_seconds": result.runtime_seconds,
        "lines": [
            {
                "line_id": line.line_id,
                "text": line.text,
                "start_step": line.start_step,
                "end_step": line.end_step,
                "gamma": line.gamma,
                "gamma6": line.gamma6,
            }
            for line in result.lines
        ],
    }


def write_alignment(result: AlignmentResult, path) -> None:
    Path(path).write_text(
        json.dumps(alignment_to_dict(result), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def read_alignment(path) -> AlignmentResult:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None
    try:
        lines = tuple(
            AlignedLine(
                line_id=entry["line_id"],
                text=entry["text"],
                start_step=entry["start_step"],
                end_step=entry["end_step"],
                gamma=entry["gamma"],
                gamma6=entry["gamma6"],
            )
            for entry in doc["lines"]
        )
        return AlignmentResult(
            letter_id=doc["letter_id"],
            lines=lines,
            total_log_prob=doc["total_log_prob"],
            runtime_seconds=doc["runtime_seconds"],
        )
    except KeyError as exc:
        raise FormatError(f"{path}: missing key {exc}") from None


def alignment_content_hash(doc: dict) -> str:
    """Hash of an alignment document, ignoring the wall-clock field."""
    stable = {k: v for k, v in doc.items() if k != "runtime_seconds"}
    blob = json.dumps(stable, ensure_ascii=False, sort_keys=True,
                      separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()

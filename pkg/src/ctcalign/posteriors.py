"""Alphabet and posterior-matrix data model, file I/O, and epsilon-compression.

A letter is an ordered collection of text-line posterior matrices. Each
matrix row holds the per-character posterior probabilities of one time
step; column 0 is always the epsilon ("no character") symbol. Lines are
concatenated on the time axis and runs of epsilon-dominated steps are
collapsed into single steps whose per-symbol probability is the product
over the run, accumulated in log space.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError

EPSILON_TOKEN = "<eps>"
SPACE_TOKEN = "<space>"

MATRIX_MAGIC = b"CTCP"
MATRIX_VERSION = 1
ROW_SUM_TOL = 1e-4


@dataclass(frozen=True)
class Alphabet:
    """Ordered symbol set with the epsilon symbol fixed at index 0.

    ``symbols[0]`` is the ``<eps>`` placeholder; every other entry is a
    single Unicode scalar value.
    """

    symbols: tuple[str, ...]

    epsilon_index = 0

    def __post_init__(self):
        if len(self.symbols) < 2:
            raise FormatError("alphabet needs epsilon plus at least one symbol")
        if self.symbols[0] != EPSILON_TOKEN:
            raise FormatError("alphabet must start with the epsilon symbol")
        seen = set()
        for sym in self.symbols:
            if sym in seen:
                raise FormatError(f"duplicate alphabet symbol {sym!r}")
            seen.add(sym)
        object.__setattr__(
            self, "_index", {s: i for i, s in enumerate(self.symbols) if i > 0}
        )

    @property
    def size(self) -> int:
        return len(self.symbols)

    def __contains__(self, char: str) -> bool:
        return char in self._index

    def index_of(self, char: str) -> int:
        """Index of a non-epsilon character; KeyError if absent."""
        return self._index[char]

    @classmethod
    def from_characters(cls, chars) -> "Alphabet":
        """Alphabet over the given characters, epsilon prepended."""
        return cls((EPSILON_TOKEN, *chars))


def load_alphabet(path) -> Alphabet:
    """Parse an alphabet file: one symbol per line, ``<eps>`` first.

    The ``<space>`` token stands for the whitespace character, which
    plain-text editors tend to mangle.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != EPSILON_TOKEN:
        raise FormatError(f"{path}: first line must be {EPSILON_TOKEN!r}")
    symbols = [EPSILON_TOKEN]
    for lineno, raw in enumerate(lines[1:], start=2):
        sym = raw.rstrip("\r")
        if sym == SPACE_TOKEN:
            sym = " "
        if len(sym) != 1:
            raise FormatError(
                f"{path}:{lineno}: expected a single character, got {sym!r}"
            )
        symbols.append(sym)
    try:
        return Alphabet(tuple(symbols))
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def save_alphabet(alphabet: Alphabet, path) -> None:
    out = [EPSILON_TOKEN]
    for sym in alphabet.symbols[1:]:
        out.append(SPACE_TOKEN if sym == " " else sym)
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def _validate_probs(probs: np.ndarray, origin: str) -> None:
    if probs.ndim != 2 or probs.shape[0] < 1:
        raise FormatError(f"{origin}: expected a nonempty 2-d probability grid")
    if not np.isfinite(probs).all():
        raise FormatError(f"{origin}: non-finite probability value")
    if (probs < 0.0).any() or (probs > 1.0).any():
        raise FormatError(f"{origin}: probability outside [0, 1]")
    sums = probs.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > ROW_SUM_TOL)
    if bad.size:
        raise FormatError(
            f"{origin}: row {bad[0]} sums to {sums[bad[0]]:.6f}, expected 1.0"
        )


@dataclass(frozen=True)
class PosteriorMatrix:
    """Validated posterior grid of one text line: (steps, |alphabet|)."""

    line_id: str
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        _validate_probs(probs, f"line {self.line_id!r}")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def steps(self) -> int:
        return self.probs.shape[0]

    @property
    def num_symbols(self) -> int:
        return self.probs.shape[1]


def load_matrix(path, alphabet: Alphabet, line_id: str | None = None) -> PosteriorMatrix:
    """Read a ``CTCP`` binary posterior file and validate it."""
    path = Path(path)
    blob = path.read_bytes()
    header = struct.Struct("<4sHHII")
    if len(blob) < header.size:
        raise FormatError(f"{path}: truncated header")
    magic, version, reserved, rows, cols = header.unpack_from(blob)
    if magic != MATRIX_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != MATRIX_VERSION or reserved != 0:
        raise FormatError(f"{path}: unsupported format version {version}")
    if cols != alphabet.size:
        raise FormatError(
            f"{path}: {cols} columns, alphabet has {alphabet.size} symbols"
        )
    expected = header.size + rows * cols * 4
    if len(blob) != expected:
        raise FormatError(f"{path}: {len(blob)} bytes, expected {expected}")
    data = np.frombuffer(blob, dtype="<f4", offset=header.size)
    probs = data.reshape(rows, cols).astype(np.float64)
    try:
        return PosteriorMatrix(line_id or path.stem, probs)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


def save_matrix(probs: np.ndarray, path) -> None:
    """Write a probability grid as a ``CTCP`` file (little-endian f32)."""
    probs = np.asarray(probs)
    rows, cols = probs.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sHHII", MATRIX_MAGIC, MATRIX_VERSION, 0, rows, cols))
        fh.write(np.ascontiguousarray(probs, dtype="<f4").tobytes())


@dataclass(frozen=True)
class LetterBundle:
    """All line matrices of one letter in reading order.

    ``boundaries[k]`` is the cumulative step offset at which line ``k``
    ends on the concatenated time axis.
    """

    letter_id: str
    lines: tuple[PosteriorMatrix, ...]
    boundaries: tuple[int, ...]

    @property
    def total_steps(self) -> int:
        return self.boundaries[-1]

    @property
    def num_lines(self) -> int:
        return len(self.lines)

    @property
    def num_symbols(self) -> int:
        return self.lines[0].num_symbols

    @property
    def line_ids(self) -> tuple[str, ...]:
        return tuple(m.line_id for m in self.lines)

    def concatenated(self) -> np.ndarray:
        return np.concatenate([m.probs for m in self.lines], axis=0)


def concatenate(lines, letter_id: str = "letter") -> LetterBundle:
    """Stack line matrices on the time axis, recording line boundaries."""
    lines = tuple(lines)
    if not lines:
        raise ValueError("cannot concatenate an empty list of lines")
    cols = lines[0].num_symbols
    for m in lines[1:]:
        if m.num_symbols != cols:
            raise ValueError(
                f"line {m.line_id!r} has {m.num_symbols} columns, expected {cols}"
            )
    boundaries = []
    total = 0
    for m in lines:
        total += m.steps
        boundaries.append(total)
    return LetterBundle(letter_id, lines, tuple(boundaries))


@dataclass(frozen=True)
class CompressedSequence:
    """Epsilon-compressed letter sequence, log domain.

    ``log_probs[t, c]`` is the summed log probability of symbol ``c``
    over the raw steps ``origin_spans[t]``; a zero probability maps to
    ``-inf``. ``origin_spans`` partition the raw time axis in order and
    never cross a line boundary.
    """

    letter_id: str
    log_probs: np.ndarray
    origin_spans: tuple[tuple[int, int], ...]
    line_of_step: np.ndarray
    line_ids: tuple[str, ...]
    compression_ratio: float

    @property
    def steps(self) -> int:
        return self.log_probs.shape[0]

    @property
    def num_symbols(self) -> int:
        return self.log_probs.shape[1]

    @property
    def raw_steps(self) -> int:
        return self.origin_spans[-1][1]

    @property
    def num_lines(self) -> int:
        return len(self.line_ids)

    @property
    def probs(self) -> np.ndarray:
        """Linear-domain view; deep products may underflow to 0."""
        return np.exp(self.log_probs)

    def line_span(self, line: int) -> tuple[int, int]:
        """Half-open compressed-step range occupied by the given line."""
        start = int(np.searchsorted(self.line_of_step, line, side="left"))
        end = int(np.searchsorted(self.line_of_step, line, side="right"))
        return start, end


def epsilon_compress(bundle: LetterBundle, theta: float) -> CompressedSequence:
    """Collapse runs of epsilon-dominated steps into single product steps.

    Maximal runs of consecutive steps with P(eps) > theta, taken within
    one line (runs never cross a line boundary), become one step whose
    log probability for every symbol is the sum of the run's log rows.
    All other steps pass through unchanged.
    """
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must be in (0, 1), got {theta}")
    raw = bundle.concatenated()
    with np.errstate(divide="ignore"):
        log_raw = np.log(raw)

    rows: list[np.ndarray] = []
    spans: list[tuple[int, int]] = []
    line_of: list[int] = []
    start = 0
    for k, end in enumerate(bundle.boundaries):
        mask = raw[start:end, 0] > theta
        t = start
        while t < end:
            if mask[t - start]:
                run_end = t
                while run_end < end and mask[run_end - start]:
                    run_end += 1
                rows.append(log_raw[t:run_end].sum(axis=0))
                spans.append((t, run_end))
                line_of.append(k)
                t = run_end
            else:
                rows.append(log_raw[t])
                spans.append((t, t + 1))
                line_of.append(k)
                t += 1
        start = end

    log_probs = np.vstack(rows)
    log_probs.flags.writeable = False
    line_of_step = np.asarray(line_of, dtype=np.int32)
    line_of_step.flags.writeable = False
    return CompressedSequence(
        letter_id=bundle.letter_id,
        log_probs=log_probs,
        origin_spans=tuple(spans),
        line_of_step=line_of_step,
        line_ids=bundle.line_ids,
        compression_ratio=bundle.total_steps / len(spans),
    )


@dataclass(frozen=True)
class CompressionStats:
    avg_line_steps: float
    raw_letter_steps: int
    compressed_letter_steps: int
    ratio: float


def compression_stats(
    bundle: LetterBundle, compressed: CompressedSequence
) -> CompressionStats:
    """Summary record mirroring the usual compression report columns."""
    if compressed.raw_steps != bundle.total_steps:
        raise ValueError("compressed sequence was not derived from this bundle")
    return CompressionStats(
        avg_line_steps=bundle.total_steps / bundle.num_lines,
        raw_letter_steps=bundle.total_steps,
        compressed_letter_steps=compressed.steps,
        ratio=compressed.compression_ratio,
    )


def load_letter(manifest_path) -> tuple[LetterBundle, Alphabet]:
    """Load a letter manifest plus everything it references.

    Relative paths inside the manifest are resolved against the
    manifest's own directory.
    """
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{manifest_path}: invalid JSON ({exc})") from None
    for key in ("letter_id", "alphabet", "lines"):
        if key not in manifest:
            raise FormatError(f"{manifest_path}: missing key {key!r}")
    base = manifest_path.parent
    alphabet = load_alphabet(base / manifest["alphabet"])
    matrices = []
    for entry in manifest["lines"]:
        if "line_id" not in entry or "matrix" not in entry:
            raise FormatError(f"{manifest_path}: malformed line entry {entry!r}")
        matrices.append(
            load_matrix(base / entry["matrix"], alphabet, line_id=entry["line_id"])
        )
    if not matrices:
        raise FormatError(f"{manifest_path}: letter has no lines")
    return concatenate(matrices, letter_id=manifest["letter_id"]), alphabet


def write_letter_manifest(path, letter_id: str, alphabet_path: str, line_entries) -> None:
    """Write a letter manifest; paths should be relative to the manifest."""
    doc = {
        "letter_id": letter_id,
        "alphabet": alphabet_path,
        "lines": [
            {"line_id": line_id, "matrix": matrix} for line_id, matrix in line_entries
        ],
    }
    Path(path).write_text(json.dumps(doc, ensure_ascii=False, indent=2) + "\n",
                          encoding="utf-8")

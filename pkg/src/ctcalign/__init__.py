"""Forced alignment of letter transcriptions to CTC posterior sequences.

The pipeline: load per-line posterior matrices, concatenate them into a
letter, collapse epsilon-dominated runs, expand the transcription into
a linear automaton, and find the optimal path by token passing. The
path's line breaks yield per-line pseudo-labels with confidence scores,
which the filtering and metrics tools turn into training manifests and
evaluation reports.
"""

from .aligner import (
    AlignedLine,
    AlignmentResult,
    PathSolution,
    align_letter,
    insert_newlines,
    line_confidences,
    read_alignment,
    reconstruct_transcription,
    solve_path,
    write_alignment,
)
from .errors import (
    AlignmentInfeasibleError,
    EnumerationLimitError,
    FormatError,
    NumericallyInfeasibleError,
    UndefinedMetricError,
)
from .filtering import (
    FilterSpec,
    TrainingManifest,
    filter_alignments,
    iteration_step,
    read_manifest,
    threshold_sweep,
    write_manifest,
)
from .fsa import Transcription, TranscriptionFsa, build_fsa, enumerate_paths, make_transcription
from .metrics import (
    LineSet,
    MetricsReport,
    aggregate,
    cer,
    cer_n,
    confidence_buckets,
    edit_distance,
    line_level_accuracy,
    wer,
)
from .posteriors import (
    Alphabet,
    CompressedSequence,
    LetterBundle,
    PosteriorMatrix,
    compression_stats,
    concatenate,
    epsilon_compress,
    load_alphabet,
    load_letter,
    load_matrix,
    save_alphabet,
    save_matrix,
)
from .synth import SynthSpec, brute_force_align, generate_posteriors

__version__ = "0.1.0"

__all__ = [
    "AlignedLine",
    "AlignmentResult",
    "AlignmentInfeasibleError",
    "Alphabet",
    "CompressedSequence",
    "EnumerationLimitError",
    "FilterSpec",
    "FormatError",
    "LetterBundle",
    "LineSet",
    "MetricsReport",
    "NumericallyInfeasibleError",
    "PathSolution",
    "PosteriorMatrix",
    "SynthSpec",
    "Transcription",
    "TranscriptionFsa",
    "TrainingManifest",
    "UndefinedMetricError",
    "aggregate",
    "align_letter",
    "brute_force_align",
    "build_fsa",
    "cer",
    "cer_n",
    "compression_stats",
    "concatenate",
    "confidence_buckets",
    "edit_distance",
    "enumerate_paths",
    "epsilon_compress",
    "filter_alignments",
    "generate_posteriors",
    "insert_newlines",
    "iteration_step",
    "line_confidences",
    "line_level_accuracy",
    "load_alphabet",
    "load_letter",
    "load_matrix",
    "make_transcription",
    "read_alignment",
    "read_manifest",
    "reconstruct_transcription",
    "save_alphabet",
    "save_matrix",
    "solve_path",
    "threshold_sweep",
    "wer",
    "write_alignment",
    "write_manifest",
]

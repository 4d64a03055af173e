"""Confidence filtering of alignments into training manifests.

Aligned lines whose confidence strictly exceeds the threshold become
training samples; gap lines carry no signal and are always dropped.
Manifests serialize deterministically (stable ordering, shortest
round-trip floats) so repeated runs are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import FormatError

MEASURES = ("gamma6", "gamma")


@dataclass(frozen=True)
class FilterSpec:
    threshold: float
    measure: str = "gamma6"

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.measure not in MEASURES:
            raise ValueError(f"unknown confidence measure {self.measure!r}")


@dataclass(frozen=True)
class ManifestEntry:
    letter_id: str
    line_id: str
    text: str
    gamma: float
    gamma6: float

    @property
    def key(self) -> tuple[str, str]:
        return (self.letter_id, self.line_id)


@dataclass(frozen=True)
class TrainingManifest:
    iteration: int
    entries: tuple[ManifestEntry, ...]
    provenance: dict


def _keep(line, spec: FilterSpec) -> bool:
    return bool(line.text) and getattr(line, spec.measure) > spec.threshold


def filter_alignments(
    results, spec: FilterSpec, sources=None, iteration: int = 0
) -> TrainingManifest:
    """Select confident, nonempty lines in reading order.

    ``sources`` records where the alignments came from; it defaults to
    the letter ids.
    """
    results = list(results)
    if not results:
        raise ValueError("no alignment results to filter")
    entries = []
    for result in results:
        for line in result.lines:
            if _keep(line, spec):
                entries.append(
                    ManifestEntry(
                        letter_id=result.letter_id,
                        line_id=line.line_id,
                        text=line.text,
                        gamma=line.gamma,
                        gamma6=line.gamma6,
                    )
                )
    if sources is None:
        sources = [{"id": r.letter_id} for r in results]
    provenance = {
        "sources": list(sources),
        "threshold": spec.threshold,
        "measure": spec.measure,
    }
    return TrainingManifest(
        iteration=iteration, entries=tuple(entries), provenance=provenance
    )


def threshold_sweep(results, thresholds, measure: str = "gamma6"):
    """Kept-line counts per threshold; counts never increase."""
    thresholds = list(thresholds)
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be sorted ascending")
    results = list(results)
    rows = []
    for t in thresholds:
        spec = FilterSpec(threshold=t, measure=measure)
        kept = sum(
            1 for r in results for line in r.lines if _keep(line, spec)
        )
        rows.append({"threshold": t, "kept_count": kept})
    return rows


def iteration_step(
    manifest: TrainingManifest, new_results, spec: FilterSpec, sources=None
):
    """Filter a fresh round of alignments and diff it against the last.

    Returns the next manifest (iteration counter advanced) and a diff of
    entry keys that were added, removed, or modified.
    """
    new_manifest = filter_alignments(
        new_results, spec, sources=sources, iteration=manifest.iteration + 1
    )
    old = {e.key: e for e in manifest.entries}
    new = {e.key: e for e in new_manifest.entries}
    diff = {
        "added": sorted(k for k in new if k not in old),
        "removed": sorted(k for k in old if k not in new),
        "modified": sorted(k for k in new if k in old and new[k] != old[k]),
    }
    return new_manifest, diff


def write_manifest(manifest: TrainingManifest, path) -> None:
    """JSON Lines: one header record, then one record per kept line."""
    header = {
        "iteration": manifest.iteration,
        "threshold": manifest.provenance["threshold"],
        "measure": manifest.provenance["measure"],
        "sources": manifest.provenance["sources"],
    }
    rows = [json.dumps(header, ensure_ascii=False, sort_keys=True)]
    for e in manifest.entries:
        rows.append(
            json.dumps(
                {
                    "letter_id": e.letter_id,
                    "line_id": e.line_id,
                    "text": e.text,
                    "gamma": e.gamma,
                    "gamma6": e.gamma6,
                },
                ensure_ascii=False,
            )
        )
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def read_manifest(path) -> TrainingManifest:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise FormatError(f"{path}: empty manifest")
    try:
        header = json.loads(lines[0])
        entries = tuple(
            ManifestEntry(
                letter_id=doc["letter_id"],
                line_id=doc["line_id"],
                text=doc["text"],
                gamma=doc["gamma"],
                gamma6=doc["gamma6"],
            )
            for doc in map(json.loads, lines[1:])
        )
    except (json.JSONDecodeError, KeyError) as exc:
        raise FormatError(f"{path}: malformed manifest ({exc})") from None
    provenance = {
        "sources": header.get("sources", []),
        "threshold": header["threshold"],
        "measure": header["measure"],
    }
    return TrainingManifest(
        iteration=header["iteration"], entries=entries, provenance=provenance
    )

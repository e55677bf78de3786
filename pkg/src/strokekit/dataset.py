"""Labelled stroke corpora on disk and the dataset adapter registry.

A corpus directory holds ``corpus.npz`` (``imu`` N x 6 x 200 float32,
``audio`` N x 32000 int16) and ``labels.json``, a list of per-stroke
records ``{type, quality, impact: [x, y], user_id, source_id}``.

Other on-disk formats plug in through :class:`DatasetAdapter`. The public
dataset released with the original study has no documented layout, so its
adapter is registered as a stub that raises until an importer is written.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError
from .streaming.store import pcm16
from .types import ImpactPoint, StrokeLabels, StrokeSegment, StrokeType

logger = logging.getLogger(__name__)

CORPUS_ARRAYS = "corpus.npz"
CORPUS_LABELS = "labels.json"


def save_corpus(segments: Sequence[StrokeSegment], directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    imu = np.stack([np.asarray(s.imu, dtype=np.float32) for s in segments])
    audio = np.stack([pcm16(s.audio) for s in segments])
    np.savez_compressed(d / CORPUS_ARRAYS, imu=imu, audio=audio)
    labels = []
    for i, s in enumerate(segments):
        lab = s.labels
        labels.append({
            "type": None if lab.stroke_type is None else StrokeType(lab.stroke_type).value,
            "quality": lab.quality,
            "impact": None if lab.impact is None else list(lab.impact.as_tuple()),
            "user_id": s.user_id,
            "source_id": i if s.source_id is None else s.source_id,
        })
    (d / CORPUS_LABELS).write_text(json.dumps(labels, indent=1))
    return d


def load_corpus(directory) -> list[StrokeSegment]:
    d = Path(directory)
    if not (d / CORPUS_ARRAYS).exists() or not (d / CORPUS_LABELS).exists():
        raise ConfigurationError(f"{d} is not a corpus directory (needs {CORPUS_ARRAYS} and {CORPUS_LABELS})")
    with np.load(d / CORPUS_ARRAYS) as z:
        imu, audio = z["imu"], z["audio"]
    labels = json.loads((d / CORPUS_LABELS).read_text())
    if not (len(labels) == imu.shape[0] == audio.shape[0]):
        raise ConfigurationError(f"{d}: {len(labels)} labels for {imu.shape[0]} IMU / {audio.shape[0]} audio rows")
    out = []
    for i, rec in enumerate(labels):
        impact = rec.get("impact")
        out.append(StrokeSegment(
            imu=imu[i].astype(np.float64),
            audio=audio[i].astype(np.float64) / 32767.0,
            impact_time_ns=0,
            labels=StrokeLabels(rec.get("type"), rec.get("quality"),
                                None if impact is None else ImpactPoint(*impact)),
            user_id=rec.get("user_id"),
            source_id=rec.get("source_id", i),
        ))
    return out


class DatasetAdapter:
    """Turns some on-disk dataset into labelled stroke segments."""

    name = "base"

    def detect(self, path: Path) -> bool:
        return False

    def load(self, path: Path) -> list[StrokeSegment]:
        raise NotImplementedError


class CorpusAdapter(DatasetAdapter):
    name = "corpus"

    def detect(self, path):
        return (Path(path) / CORPUS_ARRAYS).exists()

    def load(self, path):
        return load_corpus(path)


class OpenDatasetAdapter(DatasetAdapter):
    """Placeholder for the study's public recordings.

    Their file layout is not documented, so nothing is guessed here. An
    importer must produce one :class:`StrokeSegment` per labelled stroke
    with a 6 x 200 IMU window centred on contact, 32000 audio samples,
    the type / mean rating / impact labels and the participant id.
    """

    name = "open"

    def load(self, path):
        raise NotImplementedError(
            "no importer for the public stroke dataset yet; convert it to a corpus directory "
            f"({CORPUS_ARRAYS} + {CORPUS_LABELS}) or register a DatasetAdapter"
        )


ADAPTERS: dict[str, DatasetAdapter] = {}


def register_adapter(adapter: DatasetAdapter):
    ADAPTERS[adapter.name] = adapter


register_adapter(CorpusAdapter())
register_adapter(OpenDatasetAdapter())


def load_dataset(path, adapter: Optional[str] = None) -> list[StrokeSegment]:
    path = Path(path)
    if adapter is not None:
        if adapter not in ADAPTERS:
            raise ConfigurationError(f"unknown dataset adapter {adapter!r} (have {', '.join(sorted(ADAPTERS))})")
        return ADAPTERS[adapter].load(path)
    for a in ADAPTERS.values():
        if a.detect(path):
            return a.load(path)
    raise ConfigurationError(f"no dataset adapter recognises {path}")

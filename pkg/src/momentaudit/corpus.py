"""Canonical data model for videos, queries, moments, and multi-annotator references.

Ingests Charades-STA-style line annotations and ActivityNet-Captions-style JSON
maps, and reads/writes a line-delimited canonical interchange format that keeps
raw seconds (normalization is lossy without the video duration, so stored data
stays in seconds).
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field

log = logging.getLogger(__name__)

# Tolerated relative overshoot of a ground-truth end past the video duration.
# Public datasets contain slight overshoots; anything within this bound is
# clamped on load with a logged warning, anything beyond it is rejected.
DURATION_OVERSHOOT_TOLERANCE = 0.05

# Slack for floating-point clamping of normalized coordinates.
EPS = 1e-9


class CorpusError(ValueError):
    """Malformed annotation data or invariant violation."""


@dataclass(frozen=True)
class Moment:
    """A temporal interval [start, end] in seconds within a video."""

    start: float
    end: float

    def __post_init__(self):
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "end", float(self.end))
        if not (math.isfinite(self.start) and math.isfinite(self.end)):
            raise CorpusError(f"moment bounds must be finite, got [{self.start}, {self.end}]")
        if self.start < 0 or self.end < 0:
            raise CorpusError(f"moment bounds must be non-negative, got [{self.start}, {self.end}]")
        if self.start > self.end:
            raise CorpusError(f"moment start {self.start} exceeds end {self.end}")

    @property
    def duration(self) -> float:
        return self.end - self.start

    def clamped(self, video_duration: float) -> "Moment":
        """Clamp both bounds into [0, video_duration]."""
        return Moment(
            min(max(self.start, 0.0), video_duration),
            min(max(self.end, 0.0), video_duration),
        )


@dataclass(frozen=True)
class LocationPoint:
    """A moment as normalized (start, duration), both fractions of video length.

    This is the coordinate system of all density estimates: valid points live
    in the triangle start >= 0, duration >= 0, start + duration <= 1.
    """

    start: float
    duration: float

    def __post_init__(self):
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "duration", float(self.duration))
        if not (math.isfinite(self.start) and math.isfinite(self.duration)):
            raise CorpusError(f"location must be finite, got ({self.start}, {self.duration})")
        if self.start < -EPS or self.start > 1 + EPS:
            raise CorpusError(f"normalized start {self.start} outside [0, 1]")
        if self.duration < -EPS or self.duration > 1 + EPS:
            raise CorpusError(f"normalized duration {self.duration} outside [0, 1]")
        if self.start + self.duration > 1 + EPS:
            raise CorpusError(
                f"start + duration = {self.start + self.duration} exceeds 1"
            )


@dataclass(frozen=True)
class QuerySample:
    """One (video, query sentence, ground-truth moment) triple."""

    sample_id: str
    video_id: str
    video_duration: float
    query: str
    ground_truth: Moment

    def __post_init__(self):
        if not (math.isfinite(self.video_duration) and self.video_duration > 0):
            raise CorpusError(
                f"sample {self.sample_id}: video duration must be positive, "
                f"got {self.video_duration}"
            )
        limit = self.video_duration * (1 + DURATION_OVERSHOOT_TOLERANCE)
        if self.ground_truth.end > limit:
            raise CorpusError(
                f"sample {self.sample_id}: ground truth end {self.ground_truth.end} "
                f"exceeds video duration {self.video_duration} by more than "
                f"{DURATION_OVERSHOOT_TOLERANCE:.0%}"
            )


@dataclass(frozen=True)
class ReferenceSet:
    """Multiple annotated moments for one sample, with parallel annotator ids."""

    sample_id: str
    references: tuple[Moment, ...]
    annotator_ids: tuple[str, ...]

    def __post_init__(self):
        if len(self.references) < 1:
            raise CorpusError(f"reference set for {self.sample_id} is empty")
        if len(self.references) != len(self.annotator_ids):
            raise CorpusError(
                f"reference set for {self.sample_id}: {len(self.references)} references "
                f"but {len(self.annotator_ids)} annotator ids"
            )


@dataclass(frozen=True)
class Corpus:
    """An immutable collection of query samples for one dataset split."""

    samples: tuple[QuerySample, ...]
    split: str = "train"
    reference_sets: dict[str, ReferenceSet] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        seen = set()
        for s in self.samples:
            if s.sample_id in seen:
                raise CorpusError(f"duplicate sample_id {s.sample_id!r} in split {self.split!r}")
            seen.add(s.sample_id)
        for sid in self.reference_sets:
            if sid not in seen:
                raise CorpusError(f"reference set for unknown sample_id {sid!r}")

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def by_id(self, sample_id: str) -> QuerySample:
        for s in self.samples:
            if s.sample_id == sample_id:
                return s
        raise KeyError(sample_id)


def normalize(moment: Moment, video_duration: float) -> LocationPoint:
    """Convert a moment in seconds to a normalized (start, duration) point.

    Both coordinates are clamped into [0, 1] with start + duration <= 1, so
    slightly-overshooting ground truth stays representable. A warning is
    logged when clamping actually moves a coordinate.
    """
    if not (math.isfinite(video_duration) and video_duration > 0):
        raise CorpusError(f"video duration must be positive, got {video_duration}")
    start = moment.start / video_duration
    duration = (moment.end - moment.start) / video_duration
    clamped_start = min(max(start, 0.0), 1.0)
    clamped_duration = min(max(duration, 0.0), 1.0 - clamped_start)
    if abs(clamped_start - start) > EPS or abs(clamped_duration - duration) > EPS:
        log.warning(
            "clamped normalized location (%.6f, %.6f) -> (%.6f, %.6f)",
            start, duration, clamped_start, clamped_duration,
        )
    return LocationPoint(clamped_start, clamped_duration)


def denormalize(point: LocationPoint, video_duration: float) -> Moment:
    """Convert a normalized (start, duration) point back to a moment in seconds."""
    if not (math.isfinite(video_duration) and video_duration > 0):
        raise CorpusError(f"video duration must be positive, got {video_duration}")
    start = point.start * video_duration
    end = min((point.start + point.duration), 1.0) * video_duration
    return Moment(start, max(start, end))


def _clamp_ground_truth(sample_id: str, moment: Moment, video_duration: float) -> Moment:
    """Apply the loader clamping policy for out-of-range ground truth."""
    limit = video_duration * (1 + DURATION_OVERSHOOT_TOLERANCE)
    if moment.end > limit:
        raise CorpusError(
            f"sample {sample_id}: moment [{moment.start}, {moment.end}] exceeds video "
            f"duration {video_duration} by more than {DURATION_OVERSHOOT_TOLERANCE:.0%}"
        )
    clamped = moment.clamped(video_duration)
    if clamped != moment:
        log.warning(
            "sample %s: clamped moment [%s, %s] to [%s, %s] (video duration %s)",
            sample_id, moment.start, moment.end, clamped.start, clamped.end, video_duration,
        )
    return clamped


def load_duration_table(path) -> dict[str, float]:
    """Read a `video_id,duration_seconds` CSV into a mapping.

    A header row is optional and detected by a non-numeric second column.
    """
    durations: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row_no, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise CorpusError(f"{path}:{row_no}: expected 2 columns, got {len(row)}")
            vid, dur = row[0].strip(), row[1].strip()
            try:
                durations[vid] = float(dur)
            except ValueError:
                if row_no == 1:
                    continue  # header row
                raise CorpusError(f"{path}:{row_no}: bad duration {dur!r}") from None
    return durations


def load_charades(path, durations, split: str = "train") -> Corpus:
    """Load a Charades-STA-style annotation file.

    Each line reads `video_id start end##sentence`. Video durations are not in
    the file, so `durations` is either a mapping or the path of a companion
    `video_id,duration_seconds` CSV (the toolkit never probes video files).
    """
    if not isinstance(durations, dict):
        durations = load_duration_table(durations)
    samples = []
    per_video: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            head, sep, sentence = line.partition("##")
            if not sep:
                raise CorpusError(f"{path}:{line_no}: missing '##' separator")
            fields = head.split()
            if len(fields) != 3:
                raise CorpusError(
                    f"{path}:{line_no}: expected 'video_id start end', got {head!r}"
                )
            video_id, start_s, end_s = fields
            try:
                start, end = float(start_s), float(end_s)
            except ValueError:
                raise CorpusError(f"{path}:{line_no}: non-numeric bounds {head!r}") from None
            if video_id not in durations:
                raise CorpusError(
                    f"{path}:{line_no}: no duration table entry for video {video_id!r}"
                )
            duration = durations[video_id]
            index = per_video.get(video_id, 0)
            per_video[video_id] = index + 1
            sample_id = f"{video_id}_{index}"
            try:
                moment = Moment(start, end)
            except CorpusError as exc:
                raise CorpusError(f"{path}:{line_no}: {exc}") from None
            moment = _clamp_ground_truth(sample_id, moment, duration)
            samples.append(QuerySample(sample_id, video_id, duration, sentence, moment))
    if not samples:
        log.warning("%s: no samples loaded", path)
    return Corpus(tuple(samples), split=split)


def load_activitynet(path, split: str = "train") -> Corpus:
    """Load an ActivityNet-Captions-style annotation file.

    The file holds one top-level JSON map keyed by video id; each value carries
    `duration`, `timestamps` (list of [start, end]), and `sentences`. One
    sample is produced per (timestamp, sentence) pair.
    """
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise CorpusError(f"{path}: expected a top-level map keyed by video id")
    samples = []
    for video_id in sorted(data):
        entry = data[video_id]
        try:
            duration = float(entry["duration"])
            timestamps = entry["timestamps"]
            sentences = entry["sentences"]
        except (KeyError, TypeError, ValueError) as exc:
            raise CorpusError(f"{path}: video {video_id!r}: {exc}") from None
        if len(timestamps) != len(sentences):
            raise CorpusError(
                f"{path}: video {video_id!r}: {len(timestamps)} timestamps but "
                f"{len(sentences)} sentences"
            )
        for index, (stamp, sentence) in enumerate(zip(timestamps, sentences)):
            if len(stamp) != 2:
                raise CorpusError(
                    f"{path}: video {video_id!r} timestamp {index}: expected [start, end]"
                )
            sample_id = f"{video_id}_{index}"
            try:
                moment = Moment(float(stamp[0]), float(stamp[1]))
            except CorpusError as exc:
                raise CorpusError(f"{path}: video {video_id!r} timestamp {index}: {exc}") from None
            moment = _clamp_ground_truth(sample_id, moment, duration)
            samples.append(QuerySample(sample_id, video_id, duration, str(sentence), moment))
    if not samples:
        log.warning("%s: no samples loaded", path)
    return Corpus(tuple(samples), split=split)


_CANONICAL_REQUIRED = ("sample_id", "video_id", "duration", "query", "moments")


def load_canonical(path, split: str = "train") -> Corpus:
    """Load the canonical line-delimited record format.

    Each line is a flat JSON object with `sample_id`, `video_id`, `duration`,
    `query`, `moments` (list of [start, end]; the first entry is the primary
    ground truth), and optional `annotators`. Records with more than one
    moment also populate a ReferenceSet.
    """
    samples = []
    reference_sets: dict[str, ReferenceSet] = {}
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for rec_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: record {rec_no}: invalid JSON ({exc})") from None
            for field_name in _CANONICAL_REQUIRED:
                if field_name not in record:
                    raise CorpusError(f"{path}: record {rec_no}: missing field {field_name!r}")
            sample_id = str(record["sample_id"])
            if sample_id in seen:
                raise CorpusError(f"{path}: record {rec_no}: duplicate sample_id {sample_id!r}")
            seen.add(sample_id)
            duration = float(record["duration"])
            raw_moments = record["moments"]
            if not isinstance(raw_moments, list) or not raw_moments:
                raise CorpusError(f"{path}: record {rec_no}: field 'moments' must be non-empty")
            moments = []
            for pair in raw_moments:
                if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                    raise CorpusError(
                        f"{path}: record {rec_no}: field 'moments' entries must be [start, end]"
                    )
                try:
                    moment = Moment(float(pair[0]), float(pair[1]))
                except CorpusError as exc:
                    raise CorpusError(f"{path}: record {rec_no}: field 'moments': {exc}") from None
                moments.append(_clamp_ground_truth(sample_id, moment, duration))
            samples.append(
                QuerySample(sample_id, str(record["video_id"]), duration,
                            str(record["query"]), moments[0])
            )
            if len(moments) > 1:
                annotators = record.get("annotators")
                if annotators is None:
                    annotators = [f"a{i}" for i in range(len(moments))]
                if len(annotators) != len(moments):
                    raise CorpusError(
                        f"{path}: record {rec_no}: field 'annotators' length "
                        f"{len(annotators)} does not match {len(moments)} moments"
                    )
                reference_sets[sample_id] = ReferenceSet(
                    sample_id, tuple(moments), tuple(str(a) for a in annotators)
                )
    return Corpus(tuple(samples), split=split, reference_sets=reference_sets)


def save_canonical(corpus: Corpus, path) -> None:
    """Write a corpus in the canonical line-delimited format (UTF-8)."""
    with open(path, "w", encoding="utf-8") as fh:
        for sample in corpus.samples:
            refs = corpus.reference_sets.get(sample.sample_id)
            if refs is not None:
                moments = [[m.start, m.end] for m in refs.references]
                record = {
                    "sample_id": sample.sample_id,
                    "video_id": sample.video_id,
                    "duration": sample.video_duration,
                    "query": sample.query,
                    "moments": moments,
                    "annotators": list(refs.annotator_ids),
                }
            else:
                record = {
                    "sample_id": sample.sample_id,
                    "video_id": sample.video_id,
                    "duration": sample.video_duration,
                    "query": sample.query,
                    "moments": [[sample.ground_truth.start, sample.ground_truth.end]],
                }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")

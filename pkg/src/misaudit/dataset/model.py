"""Normalized video-QA data model.

Every supported source layout is converted into these types before anything
downstream touches it. Questions carry a localized time window (where the
answer can be found) and an optional annotated answer type; clip assets carry
timed subtitles and a frame manifest. Images themselves are opaque files and
are never decoded here.
"""

from dataclasses import dataclass, field
from pathlib import Path

from ..errors import AssetError, IntegrityError

ANNOTATED_ANSWER_TYPES = ("Sound", "View", "Both", "other")


@dataclass(frozen=True)
class NormalizedQuestion:
    """One multiple-choice question localized to a clip time window."""

    question_id: str
    clip_id: str
    text: str
    choices: tuple[str, ...]
    correct_index: int
    window: tuple[float, float]
    annotated_answer_type: str | None = None

    def __post_init__(self):
        if not self.question_id:
            raise IntegrityError("question_id must be non-empty")
        if not self.clip_id:
            raise IntegrityError(f"{self.question_id}: clip_id must be non-empty")
        object.__setattr__(self, "choices", tuple(self.choices))
        if len(self.choices) < 2:
            raise IntegrityError(f"{self.question_id}: need at least 2 choices")
        if len(set(self.choices)) != len(self.choices):
            raise IntegrityError(f"{self.question_id}: choices must be distinct")
        if not 0 <= self.correct_index < len(self.choices):
            raise IntegrityError(
                f"{self.question_id}: correct_index {self.correct_index} out of "
                f"range for {len(self.choices)} choices"
            )
        start, end = self.window
        object.__setattr__(self, "window", (float(start), float(end)))
        if not 0 <= start <= end:
            raise IntegrityError(
                f"{self.question_id}: window must satisfy 0 <= start <= end, "
                f"got [{start}, {end}]"
            )
        if (
            self.annotated_answer_type is not None
            and self.annotated_answer_type not in ANNOTATED_ANSWER_TYPES
        ):
            raise IntegrityError(
                f"{self.question_id}: unknown annotated answer type "
                f"{self.annotated_answer_type!r}"
            )

    def to_record(self) -> dict:
        record = {
            "question_id": self.question_id,
            "clip_id": self.clip_id,
            "text": self.text,
            "choices": list(self.choices),
            "correct_index": self.correct_index,
            "window": [self.window[0], self.window[1]],
        }
        if self.annotated_answer_type is not None:
            record["annotated_answer_type"] = self.annotated_answer_type
        return record

    @classmethod
    def from_record(cls, record: dict) -> "NormalizedQuestion":
        return cls(
            question_id=record["question_id"],
            clip_id=record["clip_id"],
            text=record["text"],
            choices=tuple(record["choices"]),
            correct_index=record["correct_index"],
            window=tuple(record["window"]),
            annotated_answer_type=record.get("annotated_answer_type"),
        )


@dataclass(frozen=True)
class SubtitleEntry:
    """A timed subtitle line; speaker is optional (some transcripts lack one)."""

    start: float
    end: float
    text: str
    speaker: str | None = None

    def __post_init__(self):
        if self.start < 0 or self.end < self.start:
            raise IntegrityError(
                f"subtitle interval [{self.start}, {self.end}] invalid"
            )

    def rendered(self) -> str:
        if self.speaker:
            return f"{self.speaker}: {self.text}"
        return self.text


@dataclass(frozen=True)
class FrameRef:
    """A sampled frame: clip-relative path plus its timestamp in seconds."""

    timestamp: float
    relative_path: str

    def __post_init__(self):
        if self.timestamp < 0:
            raise IntegrityError(f"frame timestamp {self.timestamp} negative")
        if not self.relative_path:
            raise IntegrityError("frame relative_path must be non-empty")


@dataclass(frozen=True)
class ClipAssets:
    """Everything known about one clip: source, subtitles, frame manifest.

    frames_dir anchors the manifest's relative paths on the local disk; it is
    machine-specific and therefore never serialized.
    """

    clip_id: str
    source_id: str
    subtitles: tuple[SubtitleEntry, ...]
    frames: tuple[FrameRef, ...]
    frames_dir: str = ""

    def frame_path(self, ref: FrameRef) -> Path:
        if not self.frames_dir:
            raise AssetError(f"{self.clip_id}: no frames directory configured")
        return Path(self.frames_dir) / ref.relative_path

    def __post_init__(self):
        if not self.clip_id:
            raise IntegrityError("clip_id must be non-empty")
        # source identity is required downstream for cross-source permutation
        if not self.source_id:
            raise IntegrityError(f"{self.clip_id}: source_id must be non-empty")
        object.__setattr__(self, "subtitles", tuple(self.subtitles))
        object.__setattr__(self, "frames", tuple(self.frames))
        starts = [s.start for s in self.subtitles]
        if starts != sorted(starts):
            raise IntegrityError(f"{self.clip_id}: subtitles not sorted by start")
        stamps = [f.timestamp for f in self.frames]
        if stamps != sorted(stamps):
            raise IntegrityError(f"{self.clip_id}: frames not sorted by timestamp")

    def to_record(self) -> dict:
        return {
            "clip_id": self.clip_id,
            "source_id": self.source_id,
            "subtitles": [
                {
                    "start": s.start,
                    "end": s.end,
                    "speaker": s.speaker,
                    "text": s.text,
                }
                for s in self.subtitles
            ],
        }

    @classmethod
    def from_record(
        cls,
        record: dict,
        frames: "tuple[FrameRef, ...]",
        frames_dir: str = "",
    ) -> "ClipAssets":
        subtitles = tuple(
            SubtitleEntry(
                start=s["start"],
                end=s["end"],
                text=s["text"],
                speaker=s.get("speaker"),
            )
            for s in record["subtitles"]
        )
        return cls(
            clip_id=record["clip_id"],
            source_id=record["source_id"],
            subtitles=subtitles,
            frames=frames,
            frames_dir=frames_dir,
        )


@dataclass(frozen=True)
class SegmentPlan:
    """Selected frame indices partitioned into ordered segments of <= limit."""

    segments: tuple[tuple[int, ...], ...]
    limit: int

    def __post_init__(self):
        if self.limit < 1:
            raise IntegrityError(f"segment limit {self.limit} must be positive")
        object.__setattr__(
            self, "segments", tuple(tuple(seg) for seg in self.segments)
        )
        flat: list[int] = []
        for seg in self.segments:
            if not seg:
                raise IntegrityError("empty segment in plan")
            if len(seg) > self.limit:
                raise IntegrityError(
                    f"segment of {len(seg)} frames exceeds limit {self.limit}"
                )
            flat.extend(seg)
        # contiguous + non-overlapping + ordered == strictly increasing overall
        if any(b <= a for a, b in zip(flat, flat[1:])):
            raise IntegrityError("segments must be strictly increasing frame indices")

    @property
    def frame_indices(self) -> tuple[int, ...]:
        return tuple(i for seg in self.segments for i in seg)

    def __len__(self) -> int:
        return len(self.segments)


@dataclass
class DatasetBundle:
    """A validated, normalized dataset: questions plus per-clip assets.

    rejected_question_ids is populated only when loading was asked to drop
    questions whose clip assets are missing instead of failing.
    """

    questions: list[NormalizedQuestion]
    assets: dict[str, ClipAssets]
    rejected_question_ids: list[str] = field(default_factory=list)

    def clip_for(self, question: NormalizedQuestion) -> ClipAssets:
        return self.assets[question.clip_id]

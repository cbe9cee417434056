from .model import ClipAssets, DatasetBundle, FrameRef, NormalizedQuestion, SegmentPlan, SubtitleEntry
from .loaders import SourceDescriptor, load_dataset, write_normalized
from .sampling import sample_questions
from .windows import (
    FRAME_LIMIT_VIDEO_ONLY,
    FRAME_LIMIT_VIDEO_WITH_SUBTITLE,
    frame_plan,
    subtitle_window,
)

__all__ = [
    "ClipAssets",
    "DatasetBundle",
    "FRAME_LIMIT_VIDEO_ONLY",
    "FRAME_LIMIT_VIDEO_WITH_SUBTITLE",
    "FrameRef",
    "NormalizedQuestion",
    "SegmentPlan",
    "SourceDescriptor",
    "SubtitleEntry",
    "frame_plan",
    "load_dataset",
    "sample_questions",
    "subtitle_window",
    "write_normalized",
]

"""Per-condition prompt policy: phrasing, image budget, batch size."""

from dataclasses import dataclass

from ..registry import ModalityRegistry, ModalitySubset, enumerate_subsets
from ..dataset.windows import FRAME_LIMIT_VIDEO_ONLY, FRAME_LIMIT_VIDEO_WITH_SUBTITLE

# questions per prompt when no images are attached
SUBTITLE_BATCH_SIZE = 5

VIDEO = "video"
SUBTITLE = "subtitle"


def default_registry() -> ModalityRegistry:
    return ModalityRegistry((VIDEO, SUBTITLE))


def standard_conditions(registry: ModalityRegistry) -> list[ModalitySubset]:
    return enumerate_subsets(registry)


@dataclass(frozen=True)
class ConditionSpec:
    subset: ModalitySubset
    label: str
    modality_phrase: str
    segment_phrase: str
    wants_images: bool
    wants_subtitles: bool
    image_limit: int
    batch_size: int


def condition_spec(subset: ModalitySubset, registry: ModalityRegistry) -> ConditionSpec:
    registry.validate_subset(subset)
    names = [registry.names[i] for i in subset]
    has_video = VIDEO in names
    has_subtitle = SUBTITLE in names

    # modality phrase lists video first, subtitles last; the evidence phrase
    # lists timestamp ranges first, image numbers last
    modality_parts = []
    segment_parts = []
    if has_video:
        modality_parts.append("video frames")
    if has_subtitle:
        segment_parts.append("timestamp ranges")
    for name in names:
        if name not in (VIDEO, SUBTITLE):
            modality_parts.append(name)
            segment_parts.append(f"{name} segments")
    if has_subtitle:
        modality_parts.append("subtitles")
    if has_video:
        segment_parts.append("image numbers")

    image_limit = 0
    if has_video:
        image_limit = (
            FRAME_LIMIT_VIDEO_WITH_SUBTITLE if has_subtitle else FRAME_LIMIT_VIDEO_ONLY
        )
    return ConditionSpec(
        subset=subset,
        label=subset.label(registry),
        modality_phrase=" and ".join(modality_parts),
        segment_phrase=" and ".join(segment_parts),
        wants_images=has_video,
        wants_subtitles=has_subtitle,
        image_limit=image_limit,
        batch_size=1 if has_video else SUBTITLE_BATCH_SIZE,
    )

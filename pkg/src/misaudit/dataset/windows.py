"""Time-window helpers: subtitle slicing and 1 Hz frame planning."""

import math

from ..errors import AssetError, DomainError
from .model import ClipAssets, SegmentPlan

# Per-prompt image budgets. Prompts that also carry subtitle text get a
# smaller budget to leave room in the context window.
FRAME_LIMIT_VIDEO_ONLY = 10
FRAME_LIMIT_VIDEO_WITH_SUBTITLE = 8


def _check_window(window) -> tuple[float, float]:
    start, end = float(window[0]), float(window[1])
    if not 0 <= start <= end:
        raise DomainError(f"window must satisfy 0 <= start <= end, got [{start}, {end}]")
    return start, end


def subtitle_window(assets: ClipAssets, window) -> str:
    """Join all subtitle lines whose interval intersects the window.

    Overlap is inclusive on both ends: an entry touching the window boundary
    is still included. Returns the empty string when nothing intersects.
    """
    start, end = _check_window(window)
    lines = [
        entry.rendered()
        for entry in assets.subtitles
        if entry.start <= end and entry.end >= start
    ]
    return "\n".join(lines)


def frame_plan(assets: ClipAssets, window, limit: int) -> SegmentPlan:
    """Pick ~1 frame per second from the window start onward, then chunk.

    Selection targets every integer second from ceil(t_start) through the
    last available frame timestamp and takes the nearest frame to each
    target (earlier frame on a tie). Consecutive duplicate picks collapse,
    so sparse clips yield fewer frames without repeats. The picks are then
    split greedily into contiguous segments of at most `limit` frames.
    """
    if limit < 1:
        raise DomainError(f"image limit {limit} must be positive")
    start, _ = _check_window(window)
    frames = assets.frames
    if not frames:
        raise AssetError(f"{assets.clip_id}: no frames available")

    first_target = math.ceil(start)
    last_target = math.floor(frames[-1].timestamp)
    # always plan at least one frame, even when the window starts past the
    # last frame of a short clip
    targets = range(first_target, max(last_target, first_target) + 1)

    selected: list[int] = []
    pos = 0
    for target in targets:
        while (
            pos + 1 < len(frames)
            and abs(frames[pos + 1].timestamp - target) < abs(frames[pos].timestamp - target)
        ):
            pos += 1
        if not selected or selected[-1] != pos:
            selected.append(pos)

    segments = [
        tuple(selected[i : i + limit]) for i in range(0, len(selected), limit)
    ]
    return SegmentPlan(segments=tuple(segments), limit=limit)

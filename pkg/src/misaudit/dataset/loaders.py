"""Source adapters: four on-disk layouts, one normalized bundle.

Supported flavors:

tvqa
    questions.jsonl        {qid, q, a0..a4, answer_idx, ts: "12.1-19.8",
                            vid_name, show_name}
    subtitles/<vid>.srt    SubRip; a leading "Name:" token becomes the speaker
    frames/<vid>/frames.json

lifeqa
    questions.json         {clip_id: {channel, questions: [{question_id,
                            question, answers, correct_index, window}]}}
    transcripts/<clip>.json  [{start, end, speaker|null, text}]
    frames/<clip>/frames.json

avqa
    questions.json         [{id, video_name, question, options, answer,
                            answer_type?}]
    clips.json             {video_name: {source_id, duration, sound_label}}
    frames/<video>/frames.json
    The sound label is injected as a single subtitle spanning [0, duration],
    and every question's window is the whole clip.

normalized
    questions.jsonl + clips/<clip_id>/{clip.json, frames.json, images...};
    the layout write_normalized() produces. Loading a written bundle is a
    fixed point.

Every frames.json is a JSON array of {timestamp, relative_path}, ordered by
timestamp, paths relative to the manifest's directory.
"""

import json
import re
import shutil
from dataclasses import dataclass
from pathlib import Path

from ..errors import IngestionError, IntegrityError
from .model import (
    ANNOTATED_ANSWER_TYPES,
    ClipAssets,
    DatasetBundle,
    FrameRef,
    NormalizedQuestion,
    SubtitleEntry,
)

FLAVORS = ("tvqa", "lifeqa", "avqa", "normalized")


@dataclass(frozen=True)
class SourceDescriptor:
    flavor: str
    root: Path

    def __post_init__(self):
        if self.flavor not in FLAVORS:
            raise IngestionError(
                f"unknown dataset flavor {self.flavor!r}; expected one of {FLAVORS}"
            )
        object.__setattr__(self, "root", Path(self.root))


def load_dataset(
    descriptor: SourceDescriptor, *, drop_dangling: bool = False
) -> DatasetBundle:
    """Load and validate one source into a normalized bundle.

    Questions pointing at clips with no assets abort the load by default;
    with drop_dangling they are removed and reported on the bundle instead.
    """
    root = descriptor.root
    if not root.is_dir():
        raise IngestionError(f"dataset root {root} is not a directory")
    loader = {
        "tvqa": _load_tvqa,
        "lifeqa": _load_lifeqa,
        "avqa": _load_avqa,
        "normalized": _load_normalized,
    }[descriptor.flavor]
    questions, assets = loader(root)

    seen = set()
    for q in questions:
        if q.question_id in seen:
            raise IntegrityError(f"duplicate question_id {q.question_id!r}")
        seen.add(q.question_id)

    dangling = sorted({q.clip_id for q in questions} - set(assets))
    if dangling and not drop_dangling:
        raise IntegrityError(
            "questions reference clips with no assets: " + ", ".join(dangling)
        )
    rejected = []
    if dangling:
        missing = set(dangling)
        rejected = [q.question_id for q in questions if q.clip_id in missing]
        questions = [q for q in questions if q.clip_id not in missing]
    return DatasetBundle(
        questions=questions, assets=assets, rejected_question_ids=rejected
    )


def _read_json(path: Path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise IngestionError(f"missing file {path}", path=str(path))
    except json.JSONDecodeError as exc:
        raise IngestionError(
            f"invalid JSON in {path}: {exc.msg}", path=str(path), line=exc.lineno
        )


def _iter_jsonl(path: Path):
    try:
        fh = open(path, encoding="utf-8")
    except FileNotFoundError:
        raise IngestionError(f"missing file {path}", path=str(path))
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                yield lineno, json.loads(raw)
            except json.JSONDecodeError as exc:
                raise IngestionError(
                    f"invalid JSON on line {lineno} of {path}: {exc.msg}",
                    path=str(path),
                    line=lineno,
                )


def _require(record: dict, key: str, path: Path, line: int | None = None):
    if key not in record:
        raise IngestionError(f"missing key {key!r} in {path}", path=str(path), line=line)
    return record[key]


def _load_frames(manifest_path: Path) -> tuple[tuple[FrameRef, ...], str]:
    entries = _read_json(manifest_path)
    if not isinstance(entries, list):
        raise IngestionError(
            f"{manifest_path} must contain a JSON array", path=str(manifest_path)
        )
    refs = tuple(
        FrameRef(
            timestamp=float(_require(e, "timestamp", manifest_path)),
            relative_path=_require(e, "relative_path", manifest_path),
        )
        for e in entries
    )
    return refs, str(manifest_path.parent)


# --- tvqa ----------------------------------------------------------------

_SRT_TIME = re.compile(
    r"(\d+):(\d\d):(\d\d)[,.](\d{1,3})\s*-->\s*(\d+):(\d\d):(\d\d)[,.](\d{1,3})"
)
_SPEAKER = re.compile(r"^([A-Za-z][A-Za-z0-9 .'\-]{0,30}?)\s*:\s*(\S.*)$")


def _srt_seconds(h, m, s, ms) -> float:
    return int(h) * 3600 + int(m) * 60 + int(s) + int(ms.ljust(3, "0")) / 1000


def _parse_srt(path: Path) -> tuple[SubtitleEntry, ...]:
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        return ()
    entries = []
    for block in re.split(r"\n\s*\n", text.strip()):
        lines = [ln.strip() for ln in block.splitlines() if ln.strip()]
        if not lines:
            continue
        if lines and lines[0].isdigit():
            lines = lines[1:]
        if not lines:
            continue
        m = _SRT_TIME.match(lines[0])
        if m is None:
            raise IngestionError(
                f"bad SRT timing line {lines[0]!r} in {path}", path=str(path)
            )
        start = _srt_seconds(*m.groups()[:4])
        end = _srt_seconds(*m.groups()[4:])
        body = " ".join(lines[1:])
        speaker = None
        sm = _SPEAKER.match(body)
        if sm:
            speaker, body = sm.group(1), sm.group(2)
        entries.append(SubtitleEntry(start=start, end=end, text=body, speaker=speaker))
    entries.sort(key=lambda e: e.start)
    return tuple(entries)


def _parse_ts(raw: str, path: Path, line: int) -> tuple[float, float]:
    try:
        start_s, end_s = raw.split("-", 1)
        return float(start_s), float(end_s)
    except ValueError:
        raise IngestionError(
            f"bad ts field {raw!r} (expected \"start-end\")", path=str(path), line=line
        )


def _load_tvqa(root: Path):
    qpath = root / "questions.jsonl"
    questions = []
    shows: dict[str, str] = {}
    for lineno, rec in _iter_jsonl(qpath):
        vid = _require(rec, "vid_name", qpath, lineno)
        show = _require(rec, "show_name", qpath, lineno)
        if shows.setdefault(vid, show) != show:
            raise IngestionError(
                f"clip {vid!r} claimed by two shows", path=str(qpath), line=lineno
            )
        choices = tuple(_require(rec, f"a{i}", qpath, lineno) for i in range(5))
        questions.append(
            NormalizedQuestion(
                question_id=str(_require(rec, "qid", qpath, lineno)),
                clip_id=vid,
                text=_require(rec, "q", qpath, lineno),
                choices=choices,
                correct_index=int(_require(rec, "answer_idx", qpath, lineno)),
                window=_parse_ts(_require(rec, "ts", qpath, lineno), qpath, lineno),
            )
        )
    assets = {}
    for vid, show in shows.items():
        manifest = root / "frames" / vid / "frames.json"
        if not manifest.is_file():
            continue  # dangling; handled by the caller
        frames, frames_dir = _load_frames(manifest)
        assets[vid] = ClipAssets(
            clip_id=vid,
            source_id=show,
            subtitles=_parse_srt(root / "subtitles" / f"{vid}.srt"),
            frames=frames,
            frames_dir=frames_dir,
        )
    return questions, assets


# --- lifeqa ---------------------------------------------------------------


def _load_lifeqa(root: Path):
    qpath = root / "questions.json"
    data = _read_json(qpath)
    questions = []
    assets = {}
    for clip_id in sorted(data):
        entry = data[clip_id]
        channel = _require(entry, "channel", qpath)
        for q in _require(entry, "questions", qpath):
            window = _require(q, "window", qpath)
            questions.append(
                NormalizedQuestion(
                    question_id=str(_require(q, "question_id", qpath)),
                    clip_id=clip_id,
                    text=_require(q, "question", qpath),
                    choices=tuple(_require(q, "answers", qpath)),
                    correct_index=int(_require(q, "correct_index", qpath)),
                    window=(float(window[0]), float(window[1])),
                )
            )
        manifest = root / "frames" / clip_id / "frames.json"
        if not manifest.is_file():
            continue
        frames, frames_dir = _load_frames(manifest)
        tpath = root / "transcripts" / f"{clip_id}.json"
        subtitles = []
        if tpath.is_file():
            for s in _read_json(tpath):
                subtitles.append(
                    SubtitleEntry(
                        start=float(_require(s, "start", tpath)),
                        end=float(_require(s, "end", tpath)),
                        text=_require(s, "text", tpath),
                        speaker=s.get("speaker"),
                    )
                )
        subtitles.sort(key=lambda e: e.start)
        assets[clip_id] = ClipAssets(
            clip_id=clip_id,
            source_id=channel,
            subtitles=tuple(subtitles),
            frames=frames,
            frames_dir=frames_dir,
        )
    return questions, assets


# --- avqa -----------------------------------------------------------------


def _canonical_answer_type(raw) -> str | None:
    if raw is None:
        return None
    # anything outside the three named types lands in the catch-all bucket
    return raw if raw in ANNOTATED_ANSWER_TYPES[:3] else "other"


def _load_avqa(root: Path):
    qpath = root / "questions.json"
    cpath = root / "clips.json"
    clip_meta = _read_json(cpath)
    questions = []
    for rec in _read_json(qpath):
        video = _require(rec, "video_name", qpath)
        meta = clip_meta.get(video)
        duration = float(_require(meta, "duration", cpath)) if meta else 0.0
        questions.append(
            NormalizedQuestion(
                question_id=str(_require(rec, "id", qpath)),
                clip_id=video,
                text=_require(rec, "question", qpath),
                choices=tuple(_require(rec, "options", qpath)),
                correct_index=int(_require(rec, "answer", qpath)),
                window=(0.0, duration),
                annotated_answer_type=_canonical_answer_type(rec.get("answer_type")),
            )
        )
    assets = {}
    for video in sorted(clip_meta):
        meta = clip_meta[video]
        manifest = root / "frames" / video / "frames.json"
        if not manifest.is_file():
            continue
        frames, frames_dir = _load_frames(manifest)
        duration = float(_require(meta, "duration", cpath))
        label = _require(meta, "sound_label", cpath)
        assets[video] = ClipAssets(
            clip_id=video,
            source_id=_require(meta, "source_id", cpath),
            subtitles=(SubtitleEntry(start=0.0, end=duration, text=label),),
            frames=frames,
            frames_dir=frames_dir,
        )
    return questions, assets


# --- normalized -----------------------------------------------------------


def _load_normalized(root: Path):
    questions = [
        NormalizedQuestion.from_record(rec)
        for _, rec in _iter_jsonl(root / "questions.jsonl")
    ]
    assets = {}
    clips_dir = root / "clips"
    if clips_dir.is_dir():
        for clip_dir in sorted(p for p in clips_dir.iterdir() if p.is_dir()):
            record = _read_json(clip_dir / "clip.json")
            frames, frames_dir = _load_frames(clip_dir / "frames.json")
            assets[record["clip_id"]] = ClipAssets.from_record(
                record, frames, frames_dir
            )
    return questions, assets


def write_normalized(
    bundle: DatasetBundle, root: Path, *, copy_images: bool = True
) -> None:
    """Write the bundle in the normalized layout under root.

    Image files are copied next to each clip's manifests so the result is
    self-contained; pass copy_images=False to emit metadata only.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "questions.jsonl", "w", encoding="utf-8") as fh:
        for q in sorted(bundle.questions, key=lambda q: q.question_id):
            fh.write(json.dumps(q.to_record(), sort_keys=True) + "\n")
    for clip_id in sorted(bundle.assets):
        assets = bundle.assets[clip_id]
        clip_dir = root / "clips" / clip_id
        clip_dir.mkdir(parents=True, exist_ok=True)
        with open(clip_dir / "clip.json", "w", encoding="utf-8") as fh:
            json.dump(assets.to_record(), fh, sort_keys=True, indent=2)
            fh.write("\n")
        manifest = [
            {"timestamp": f.timestamp, "relative_path": f.relative_path}
            for f in assets.frames
        ]
        with open(clip_dir / "frames.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, sort_keys=True, indent=2)
            fh.write("\n")
        if copy_images:
            for ref in assets.frames:
                dest = clip_dir / ref.relative_path
                dest.parent.mkdir(parents=True, exist_ok=True)
                shutil.copyfile(assets.frame_path(ref), dest)

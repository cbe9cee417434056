"""Deterministic fixture builders shared by probe/pipeline tests."""

from pathlib import Path

from misaudit.dataset import ClipAssets, FrameRef, NormalizedQuestion, SubtitleEntry

LETTERS = "abcde"


def build_clip(
    frames_root: Path,
    clip_id: str = "clipA",
    source_id: str = "showX",
    n_frames: int = 6,
    subtitles=None,
) -> ClipAssets:
    """Clip with real (tiny) image files at 1 Hz timestamps."""
    clip_dir = Path(frames_root) / clip_id
    clip_dir.mkdir(parents=True, exist_ok=True)
    frames = []
    for i in range(n_frames):
        name = f"frame_{i:04d}.jpg"
        (clip_dir / name).write_bytes(b"JPEGDATA:" + clip_id.encode() + bytes([i]))
        frames.append(FrameRef(timestamp=float(i), relative_path=name))
    if subtitles is None:
        subtitles = (
            SubtitleEntry(start=1.0, end=3.5, text="I made coffee.", speaker="Ann"),
            SubtitleEntry(start=4.0, end=5.5, text="someone knocks at the door"),
        )
    return ClipAssets(
        clip_id=clip_id,
        source_id=source_id,
        subtitles=tuple(subtitles),
        frames=tuple(frames),
        frames_dir=str(clip_dir),
    )


def build_question(
    question_id: str = "q001",
    clip_id: str = "clipA",
    correct_index: int = 1,
    window=(1.21, 8.49),
    annotated_answer_type: str | None = None,
) -> NormalizedQuestion:
    return NormalizedQuestion(
        question_id=question_id,
        clip_id=clip_id,
        text="What did Ann hold?",
        choices=("A cup", "A book", "A phone", "A hat", "A key"),
        correct_index=correct_index,
        window=window,
        annotated_answer_type=annotated_answer_type,
    )


def golden_pair(frames_root: Path):
    """The fixed (questions, clip) pair frozen in the prompt golden files."""
    clip = build_clip(frames_root)
    q1 = build_question("q001", correct_index=1)
    q2 = NormalizedQuestion(
        question_id="q002",
        clip_id="clipA",
        text="Where was Bo standing?",
        choices=("Kitchen", "Garden", "Office", "Car", "Roof"),
        correct_index=0,
        window=(3.8, 6.0),
    )
    return [q1, q2], clip


def build_keyword_corpus(frames_root: Path, n: int = 200, n_sources: int = 10):
    """Synthetic subtitle-biased set: each question's correct choice token
    appears verbatim in its own clip's subtitles, so a subtitle-keyword
    answerer is perfect on genuine text and reduced to guessing on a
    donor's."""
    import hashlib

    questions = []
    assets = {}
    for i in range(n):
        qid = f"kw{i:04d}"
        clip_id = f"clip-{qid}"
        token = f"token-{qid}"
        correct = (
            int(hashlib.sha256(qid.encode()).hexdigest(), 16) % 5
        )
        choices = tuple(
            token if j == correct else f"decoy-{qid}-{j}" for j in range(5)
        )
        subtitles = (
            SubtitleEntry(
                start=1.0,
                end=4.0,
                text=f"They said {token} twice.",
                speaker="Ann",
            ),
        )
        assets[clip_id] = build_clip(
            frames_root,
            clip_id=clip_id,
            source_id=f"show-{i % n_sources}",
            n_frames=4,
            subtitles=subtitles,
        )
        questions.append(
            NormalizedQuestion(
                question_id=qid,
                clip_id=clip_id,
                text="Which token did they say?",
                choices=choices,
                correct_index=correct,
                window=(0.5, 4.5),
            )
        )
    return questions, assets


def keyword_answerer(request):
    """Picks the choice quoted in the subtitles, else a stable pseudo-random
    guess (uniform over the 5 options across question ids)."""
    import hashlib

    text = request.subtitle_text or ""
    for i, choice in enumerate(request.choices):
        if choice in text:
            return i
    digest = hashlib.sha256(("guess:" + request.question_id).encode()).hexdigest()
    return int(digest, 16) % len(request.choices)


# Hand-labeled corpus: stub answer bits per condition and the category each
# bit pattern must land in. Bit order: (video, subtitle, combined).
CATEGORY_PATTERNS = [
    ("agnostic_correct", (1, 1, 1), 4),
    ("agnostic_incorrect", (0, 0, 0), 2),
    ("complementary", (0, 0, 1), 3),
    ("biased:subtitle", (0, 1, 1), 4),
    ("biased:subtitle", (0, 1, 0), 1),
    ("biased:video", (1, 0, 1), 3),
    ("biased:video", (1, 0, 0), 1),
    ("none", (1, 1, 0), 2),
]

# annotated answer types exercised by the proportions report; the two
# trailing pattern groups stay unannotated on purpose
ANNOTATION_BY_TOKEN = {
    "biased:subtitle": "Sound",
    "biased:video": "View",
    "complementary": "Both",
    "agnostic_correct": "other",
}


def build_labeled_corpus(frames_root: Path):
    """20 questions whose stub answers force hand-verified categories.

    Returns (questions, assets, stub_answers, expected) where expected maps
    question_id -> category token.
    """
    questions = []
    assets = {}
    stub_answers = {}
    expected = {}
    i = 0
    for token, (vid, sub, both), count in CATEGORY_PATTERNS:
        for _ in range(count):
            qid = f"q{i:03d}"
            clip_id = f"clip{i:02d}"
            correct = i % 5
            assets[clip_id] = build_clip(
                frames_root, clip_id=clip_id, source_id=f"show{i % 4}"
            )
            questions.append(
                NormalizedQuestion(
                    question_id=qid,
                    clip_id=clip_id,
                    text=f"What happened in scene {i}?",
                    choices=("A cup", "A book", "A phone", "A hat", "A key"),
                    correct_index=correct,
                    window=(1.0, 5.0),
                    annotated_answer_type=ANNOTATION_BY_TOKEN.get(token),
                )
            )
            right = LETTERS[correct]
            wrong = LETTERS[(correct + 2) % 5]
            stub_answers[qid] = {
                "video": right if vid else wrong,
                "subtitle": right if sub else wrong,
                "video+subtitle": right if both else wrong,
            }
            expected[qid] = token
            i += 1
    return questions, assets, stub_answers, expected


def write_labeled_dataset(root: Path):
    """Materialize the labeled corpus as a normalized dataset plus a stub
    answer fixture, ready for the CLI pipeline."""
    import json

    from misaudit.dataset import DatasetBundle
    from misaudit.dataset.loaders import write_normalized

    questions, assets, stub_answers, expected = build_labeled_corpus(
        root / "frames"
    )
    dataset_dir = root / "dataset"
    write_normalized(
        DatasetBundle(questions=questions, assets=assets, rejected_question_ids=[]),
        dataset_dir,
    )
    fixture_path = root / "stub.json"
    fixture_path.write_text(
        json.dumps({"answers": stub_answers}, indent=2, sort_keys=True),
        encoding="utf-8",
    )
    return dataset_dir, fixture_path, expected

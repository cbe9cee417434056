"""Certification suite: one test per headline guarantee.

Each test is self-contained and uses independent oracles (exhaustive
enumeration, statsmodels/sklearn references, golden files, hand labels)
rather than re-deriving expectations from package code.
"""

import json
import random
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
from click.testing import CliRunner
from sklearn.metrics import cohen_kappa_score
from statsmodels.stats.inter_rater import fleiss_kappa as statsmodels_fleiss

from misaudit import (
    AccuracyProfile,
    CategoryKind,
    ModalitySubset,
    categorize,
    mis,
    mis_vector,
)
from misaudit.cli import cli
from misaudit.dataset import frame_plan
from misaudit.permute import (
    CallableAdapter,
    EvaluationResult,
    PermutationRuns,
    QuestionOutcome,
    build_permutation_plan,
    delta_table,
    evaluate,
)
from misaudit.probe import (
    PromptParams,
    aggregate_segments,
    build_prompt,
    condition_spec,
    default_registry,
    prompt_text,
)
from misaudit.probe.parsing import ProbeOutcome
from misaudit.reports import category_columns, distribution_report
from misaudit.study.agreement import cohen_kappa, fleiss_kappa
from misaudit.study.records import AnnotationRecord
from misaudit.study.stats import weighted_modality_accuracy

from helpers import (
    CATEGORY_PATTERNS,
    build_clip,
    build_keyword_corpus,
    golden_pair,
    keyword_answerer,
    write_labeled_dataset,
)

GOLDEN_DIR = Path(__file__).parent / "goldens"

REG = default_registry()


# 1. Two-modality reference rows ----------------------------------------------

# (video, subtitle, video+subtitle) accuracy -> (MIS_video, MIS_subtitle)
REFERENCE_ROWS = [
    ((0, 0, 0), (0, 0)),
    ((0, 1, 0), (-1, 0)),
    ((1, 0, 0), (0, -1)),
    ((1, 1, 0), (-1, -1)),
    ((0, 0, 1), (1, 1)),
    ((0, 1, 1), (0, 1)),
    ((1, 0, 1), (1, 0)),
    ((1, 1, 1), (0, 0)),
]


def test_two_modality_reference_rows_exact():
    started = time.monotonic()
    for bits, expected in REFERENCE_ROWS:
        profile = AccuracyProfile.from_bits("q", 2, bits)
        assert mis_vector(profile).scores == tuple(
            Fraction(e) for e in expected
        ), bits
    assert time.monotonic() - started < 1.0


# 2. Enumeration oracle equivalence -------------------------------------------


def oracle_mis(profile: AccuracyProfile, j: int) -> Fraction:
    """Independent re-derivation: average over subsets containing modality j
    (minus its singleton) minus average over non-empty subsets without it."""
    include, exclude = [], []
    for mask in range(1, 1 << profile.k):
        if (mask >> j) & 1:
            if mask != 1 << j:
                include.append(mask)
        else:
            exclude.append(mask)
    avg_in = sum(
        (profile.value(ModalitySubset(m)) for m in include), Fraction(0)
    ) / len(include)
    avg_out = sum(
        (profile.value(ModalitySubset(m)) for m in exclude), Fraction(0)
    ) / len(exclude)
    return avg_in - avg_out


def binary_profiles(k: int):
    n_subsets = (1 << k) - 1
    for packed in range(1 << n_subsets):
        bits = [(packed >> i) & 1 for i in range(n_subsets)]
        yield AccuracyProfile.from_bits(f"p{packed}", k, bits)


def test_mis_matches_enumeration_oracle():
    started = time.monotonic()
    for k in (2, 3):
        for profile in binary_profiles(k):
            for j in range(k):
                assert mis(profile, j) == oracle_mis(profile, j)
    rng = random.Random(20240817)
    for i in range(10_000):
        values = {
            ModalitySubset(mask): Fraction(rng.randrange(0, 13), 12)
            for mask in range(1, 1 << 4)
        }
        profile = AccuracyProfile(question_id=f"r{i}", k=4, values=values)
        for j in range(4):
            assert mis(profile, j) == oracle_mis(profile, j)
    assert time.monotonic() - started < 30.0


# 3. Categorization closed form (k = 2) ---------------------------------------


def test_categorization_closed_form_two_modalities():
    expected_by_bits = {
        (1, 1, 1): (CategoryKind.AGNOSTIC_CORRECT, None),
        (0, 0, 0): (CategoryKind.AGNOSTIC_INCORRECT, None),
        (0, 1, 0): (CategoryKind.BIASED, "subtitle"),
        (0, 1, 1): (CategoryKind.BIASED, "subtitle"),
        (1, 0, 0): (CategoryKind.BIASED, "video"),
        (1, 0, 1): (CategoryKind.BIASED, "video"),
        (0, 0, 1): (CategoryKind.COMPLEMENTARY, None),
        (1, 1, 0): (CategoryKind.NONE, None),
    }
    assert len(expected_by_bits) == 8
    for bits, (kind, modality_name) in expected_by_bits.items():
        category = categorize(AccuracyProfile.from_bits("q", 2, bits))
        assert category.kind is kind, bits
        if modality_name is None:
            assert category.modality is None, bits
        else:
            assert REG.names[category.modality] == modality_name, bits


# 4. Distribution report rendering --------------------------------------------


def run_cli(args):
    result = CliRunner().invoke(cli, args, catch_exceptions=False)
    assert result.exit_code == 0, result.output
    return result


def run_stub_pipeline(root, runs_root, run_id="r1", cache_dir=None):
    dataset_dir, stub_path, expected = write_labeled_dataset(root)
    common = ["--runs-root", str(runs_root), "--run-id", run_id]
    run_cli(
        ["sample", *common, "--dataset-dir", str(dataset_dir), "--size", "20",
         "--seed", "7", "--dataset-tag", "demo"]
    )
    probe_args = ["--stub", str(stub_path), "probe", *common,
                  "--dataset-dir", str(dataset_dir)]
    if cache_dir is not None:
        probe_args += ["--cache-dir", str(cache_dir)]
    probe = run_cli(probe_args)
    run_cli(["score", *common])
    run_cli(["categorize", *common])
    return dataset_dir, stub_path, expected, probe


def test_distribution_rendering_stub_e2e_and_reference_row(tmp_path):
    # Offline end-to-end substitute: a 20-question stub run must land every
    # question in its hand-computed category, and the rendered counts must
    # conserve the sample size.
    runs_root = tmp_path / "runs"
    _, _, expected, _ = run_stub_pipeline(tmp_path, runs_root)
    run_cli(["report", "--runs-root", str(runs_root), "--run-id", "r1",
             "--table", "distribution"])
    rendered = json.loads(
        (runs_root / "r1" / "reports" / "distribution.json").read_text()
    )
    hand_counts = {}
    for token, _, count in CATEGORY_PATTERNS:
        hand_counts[token] = hand_counts.get(token, 0) + count
    assert rendered["counts"] == hand_counts
    assert sum(rendered["counts"].values()) == rendered["total"] == 20

    # Reference row rendering: counts 224/345/21/357/71/1 over 1019.
    counts = {
        "biased:subtitle": 224,
        "biased:video": 345,
        "complementary": 21,
        "agnostic_correct": 357,
        "agnostic_incorrect": 71,
        "none": 1,
    }
    by_token = {
        "biased:subtitle": lambda: _biased("subtitle"),
        "biased:video": lambda: _biased("video"),
        "complementary": _complementary,
        "agnostic_correct": _agnostic_correct,
        "agnostic_incorrect": _agnostic_incorrect,
        "none": _none_category,
    }
    categories = {}
    i = 0
    for token, count in counts.items():
        for _ in range(count):
            categories[f"t{i:04d}"] = by_token[token]()
            i += 1
    report = distribution_report(categories, "TVQA", REG)
    cells = [report.cell(token) for token in category_columns(REG)]
    # The 357/1019 cell is exactly 35.0339...%, which renders as 35.0 under
    # one-decimal half-up rounding; the reference tuple records 35.1. The
    # expectation is kept verbatim so the discrepancy stays visible instead
    # of being rounded away in the test.
    assert cells == [
        "224 (22.0%)",
        "345 (33.9%)",
        "21 (2.1%)",
        "357 (35.1%)",
        "71 (7.0%)",
        "1 (0.1%)",
    ]


def _biased(name):
    from misaudit import QuestionCategory

    return QuestionCategory.biased(REG.names.index(name))


def _complementary():
    from misaudit import QuestionCategory

    return QuestionCategory.complementary()


def _agnostic_correct():
    from misaudit import QuestionCategory

    return QuestionCategory.agnostic_correct()


def _agnostic_incorrect():
    from misaudit import QuestionCategory

    return QuestionCategory.agnostic_incorrect()


def _none_category():
    from misaudit import QuestionCategory

    return QuestionCategory.none()


# 5. Prompt golden files -------------------------------------------------------


def test_prompt_golden_files_bit_exact(tmp_path):
    questions, clip = golden_pair(tmp_path)
    params = PromptParams(model_name="test-model")
    assert params.top_p == 0.0 and params.seed == 123
    cases = [
        (REG.subset_of("subtitle"), "prompt_subtitle_only.txt"),
        (REG.subset_of("video"), "prompt_video_only.txt"),
        (REG.subset_of("video", "subtitle"), "prompt_video_subtitle.txt"),
    ]
    for subset, golden in cases:
        spec = condition_spec(subset, REG)
        if spec.wants_images:
            plan = frame_plan(clip, questions[0].window, spec.image_limit)
            doc = build_prompt(
                [questions[0]], subset, clip, registry=REG, params=params,
                plan=plan,
            )
        else:
            doc = build_prompt(questions, subset, clip, registry=REG, params=params)
        expected = (GOLDEN_DIR / golden).read_text(encoding="utf-8")
        assert prompt_text(doc) == expected, golden


# 6. Segmentation and the any-segment rule ------------------------------------


def test_segmentation_and_any_segment_rule(tmp_path):
    clip = build_clip(tmp_path, clip_id="long", n_frames=25)
    video_only = frame_plan(clip, (0.0, 25.0), 10)
    assert [len(seg) for seg in video_only.segments] == [10, 10, 5]
    combined = frame_plan(clip, (0.0, 25.0), 8)
    assert [len(seg) for seg in combined.segments] == [8, 8, 8, 1]

    def outcome(segment, chosen, rand=False):
        return ProbeOutcome(
            question_id="q", condition_mask=3, segment_index=segment,
            chosen_index=chosen, evidence=None, reason="", raw="",
            answered_random=rand,
        )

    outcomes = [
        outcome(0, None, rand=True),
        outcome(1, 2),
        outcome(2, 4),
        outcome(3, 1),
    ]
    # only the third segment names the correct choice
    assert aggregate_segments(outcomes, correct_index=4) == 1
    assert aggregate_segments(outcomes[:2], correct_index=4) == 0


# 7. Agreement statistic oracles -----------------------------------------------

# 10 items x 14 raters x 5 categories; the commonly printed kappa is 0.210
FOURTEEN_RATER_EXAMPLE = [
    [0, 0, 0, 0, 14],
    [0, 2, 6, 4, 2],
    [0, 0, 3, 5, 6],
    [0, 3, 9, 2, 0],
    [2, 2, 8, 1, 1],
    [7, 7, 0, 0, 0],
    [3, 2, 6, 3, 0],
    [2, 5, 3, 2, 2],
    [6, 5, 2, 1, 0],
    [0, 2, 2, 3, 7],
]


def test_kappa_reference_oracles():
    ours = fleiss_kappa(FOURTEEN_RATER_EXAMPLE)
    assert abs(float(ours) - 0.210) < 1e-3
    assert abs(float(ours) - statsmodels_fleiss(np.array(FOURTEEN_RATER_EXAMPLE))) < 1e-9

    rng = random.Random(424242)
    checked = 0
    while checked < 100:
        items = rng.randint(2, 12)
        cats = rng.randint(2, 6)
        raters = rng.randint(2, 9)
        matrix = []
        for _ in range(items):
            row = [0] * cats
            for _ in range(raters):
                row[rng.randrange(cats)] += 1
            matrix.append(row)
        if max(sum(row[j] for row in matrix) for j in range(cats)) == items * raters:
            continue
        assert abs(
            float(fleiss_kappa(matrix)) - statsmodels_fleiss(np.array(matrix))
        ) < 1e-9
        checked += 1

    checked = 0
    while checked < 100:
        n = rng.randint(5, 40)
        cats = rng.randint(2, 5)
        a = [rng.randrange(cats) for _ in range(n)]
        b = [rng.randrange(cats) for _ in range(n)]
        expected = sum(a.count(c) * b.count(c) for c in set(a) | set(b))
        if expected == n * n:
            continue
        assert abs(float(cohen_kappa(a, b)) - cohen_kappa_score(a, b)) < 1e-9
        checked += 1

    # perfect agreement is exactly 1, not merely close
    assert fleiss_kappa([[3, 0], [0, 3], [3, 0]]) == Fraction(1)
    assert cohen_kappa([0, 1, 2, 0], [0, 1, 2, 0]) == Fraction(1)


# 8. Confidence-weighted rounding boundary -------------------------------------


def test_weighted_accuracy_strict_boundary():
    records = [
        AnnotationRecord(
            annotator_id="a1", question_id="q", condition=ModalitySubset(3),
            chosen_index=0, confidence=5, submitted_at=0.0,
        ),
        AnnotationRecord(
            annotator_id="a2", question_id="q", condition=ModalitySubset(3),
            chosen_index=1, confidence=3, submitted_at=0.0,
        ),
    ]
    value, rounded = weighted_modality_accuracy(records, correct_index=0)
    assert value == Fraction(1, 2)
    assert rounded == 0


# 9. Permutation derangement and the collapse pattern ---------------------------


def test_permutation_derangement_and_collapse_pattern(tmp_path):
    questions, assets = build_keyword_corpus(tmp_path / "small", n=40, n_sources=5)
    clip_of = {q.question_id: q.clip_id for q in questions}
    source_of = {clip_id: a.source_id for clip_id, a in assets.items()}
    for seed in range(1000):
        plan = build_permutation_plan(questions, assets, seed % 2, seed)
        assert plan.cross_source
        for qid, donor in plan.entries.items():
            assert donor != clip_of[qid]
            assert source_of[donor] != source_of[clip_of[qid]]

    questions, assets = build_keyword_corpus(tmp_path / "big", n=200, n_sources=10)
    adapter = CallableAdapter("keyword", keyword_answerer)
    subtitle_index = REG.names.index("subtitle")
    video_index = REG.names.index("video")
    original = evaluate(adapter, questions, assets, REG)
    assert original.accuracy == Fraction(1)
    vp_plan = build_permutation_plan(questions, assets, video_index, seed=11)
    video_permuted = evaluate(adapter, questions, assets, REG, vp_plan)
    assert abs(original.accuracy - video_permuted.accuracy) <= Fraction(2, 100)
    sp_plan = build_permutation_plan(questions, assets, subtitle_index, seed=12)
    subtitle_permuted = evaluate(adapter, questions, assets, REG, sp_plan)
    # 99% normal-approximation interval around chance for n=200, p=0.2:
    # 0.2 +/- 2.5758 * sqrt(0.2*0.8/200) = (0.1271, 0.2729)
    assert Fraction(1271, 10000) < subtitle_permuted.accuracy < Fraction(2729, 10000)

    def synthetic(variant, n_correct, n=1000):
        outcomes = tuple(
            QuestionOutcome(f"q{i:04d}", 0, i < n_correct, False)
            for i in range(n)
        )
        return EvaluationResult("Merlot Reserve", variant, outcomes)

    runs = PermutationRuns(
        adapter="Merlot Reserve",
        original=synthetic("original", 915),
        subtitle_permuted=synthetic("permuted:subtitle", 316),
        video_permuted=synthetic("permuted:video", 866),
    )
    table = delta_table({"subtitle-biased": [runs]}).table("subtitle-biased")
    assert table[0] == (
        "Merlot Reserve", "91.5%", "31.6% (-59.9%)", "86.6% (-4.9%)"
    )


# 10. Pipeline determinism and warm-cache reruns --------------------------------


def test_pipeline_determinism_and_cached_rerun(tmp_path):
    cache_dir = tmp_path / "shared-cache"
    first_probe = run_stub_pipeline(
        tmp_path / "a", tmp_path / "a" / "runs", cache_dir=cache_dir
    )[3]
    second_probe = run_stub_pipeline(
        tmp_path / "b", tmp_path / "b" / "runs", cache_dir=cache_dir
    )[3]
    assert "stub handled 44 backend requests" in first_probe.output
    assert "stub handled 0 backend requests" in second_probe.output

    for rel in (
        "sample.jsonl",
        Path("logs") / "responses.jsonl",
        "profiles.jsonl",
        "categories.jsonl",
    ):
        a = (tmp_path / "a" / "runs" / "r1" / rel).read_bytes()
        b = (tmp_path / "b" / "runs" / "r1" / rel).read_bytes()
        assert a == b, rel

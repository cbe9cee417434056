"""Study records, confidence-weighted accuracy, and human profiles."""

import json
import random
from fractions import Fraction

import pytest

from misaudit.categories import CategoryKind, categorize
from misaudit.errors import DomainError, IngestionError, IntegrityError
from misaudit.registry import ModalityRegistry, ModalitySubset
from misaudit.study import (
    AnnotationRecord,
    GroupAssignment,
    RecordStore,
    StudyDefinition,
    human_profiles,
    unanimous_filter,
    weighted_modality_accuracy,
)

from helpers import build_question

REGISTRY = ModalityRegistry(("video", "subtitle"))
VIDEO = ModalitySubset(1)
SUBTITLE = ModalitySubset(2)
BOTH = ModalitySubset(3)


def record(annotator, qid, condition, chosen, confidence, at=0.0):
    return AnnotationRecord(annotator, qid, condition, chosen, confidence, at)


class TestAnnotationRecord:
    @pytest.mark.parametrize("confidence", [0, 6, -1, 100])
    def test_confidence_bounds(self, confidence):
        with pytest.raises(DomainError):
            record("a1", "q1", BOTH, 0, confidence)

    def test_negative_choice_rejected(self):
        with pytest.raises(DomainError):
            record("a1", "q1", BOTH, -1, 3)

    def test_roundtrip(self):
        rec = record("a1", "q1", SUBTITLE, 2, 4, at=17.5)
        assert AnnotationRecord.from_record(rec.to_record()) == rec

    def test_key_identifies_annotator_question_condition(self):
        assert record("a1", "q1", VIDEO, 0, 3).key == ("a1", "q1", 1)


class TestWeightedAccuracy:
    def test_perfect(self):
        recs = [record("a1", "q", BOTH, 0, 5), record("a2", "q", BOTH, 0, 5)]
        value, rounded = weighted_modality_accuracy(recs, 0)
        assert value == 1 and rounded == 1

    def test_boundary_half_rounds_down(self):
        # one right at confidence 5, one wrong at confidence 3: exactly 1/2
        recs = [record("a1", "q", BOTH, 0, 5), record("a2", "q", BOTH, 1, 3)]
        value, rounded = weighted_modality_accuracy(recs, 0)
        assert value == Fraction(1, 2)
        assert rounded == 0

    def test_low_confidence_correct_rounds_down(self):
        recs = [record("a1", "q", BOTH, 0, 2), record("a2", "q", BOTH, 0, 1)]
        value, rounded = weighted_modality_accuracy(recs, 0)
        assert value == Fraction(3, 10)
        assert rounded == 0

    def test_no_records(self):
        with pytest.raises(DomainError):
            weighted_modality_accuracy([], 0)

    def test_value_bounds_random(self):
        rng = random.Random(11)
        for _ in range(300):
            recs = [
                record(f"a{i}", "q", BOTH, rng.randrange(5), rng.randint(1, 5))
                for i in range(rng.randint(1, 6))
            ]
            value, rounded = weighted_modality_accuracy(recs, 0)
            assert 0 <= value <= 1
            assert rounded == int(value > Fraction(1, 2))

    def test_monotone_in_confidence_when_correct(self):
        for low, high in [(1, 2), (2, 5), (3, 4)]:
            base = [record("a1", "q", BOTH, 1, 3)]
            v_low, _ = weighted_modality_accuracy(
                base + [record("a2", "q", BOTH, 0, low)], 0
            )
            v_high, _ = weighted_modality_accuracy(
                base + [record("a2", "q", BOTH, 0, high)], 0
            )
            assert v_high > v_low

    def test_antimonotone_in_confidence_when_incorrect(self):
        v_low, _ = weighted_modality_accuracy(
            [record("a1", "q", BOTH, 0, 5), record("a2", "q", BOTH, 1, 1)], 0
        )
        v_high, _ = weighted_modality_accuracy(
            [record("a1", "q", BOTH, 0, 5), record("a2", "q", BOTH, 1, 5)], 0
        )
        # a wrong answer contributes 0 regardless of confidence
        assert v_high == v_low


def study_records(qid, video_bits, subtitle_bits, both_bits, correct=0):
    """Records for one question: per condition, one annotator per bit,
    right answers chosen with confidence 5, wrong with confidence 4."""
    recs = []
    for condition, bits, prefix in (
        (VIDEO, video_bits, "v"),
        (SUBTITLE, subtitle_bits, "s"),
        (BOTH, both_bits, "b"),
    ):
        for i, bit in enumerate(bits):
            chosen = correct if bit else correct + 1
            recs.append(record(f"{prefix}{i}", qid, condition, chosen, 5 if bit else 4))
    return recs


class TestHumanProfiles:
    def questions(self, n=1):
        return [
            build_question(question_id=f"q{i:03d}", correct_index=0)
            for i in range(n)
        ]

    def test_subtitle_biased_composition(self):
        # video wrong, subtitle right, both right -> Biased(subtitle)
        [question] = self.questions()
        recs = study_records(question.question_id, (0, 0), (1, 1), (1, 1, 1, 1))
        [profile] = human_profiles(recs, [question], REGISTRY)
        assert profile.value(VIDEO) == 0
        assert profile.value(SUBTITLE) == 1
        assert profile.value(BOTH) == 1
        category = categorize(profile)
        assert category.kind is CategoryKind.BIASED
        assert category.modality == REGISTRY.index("subtitle")

    def test_all_correct_is_agnostic(self):
        [question] = self.questions()
        recs = study_records(question.question_id, (1, 1), (1, 1), (1, 1))
        [profile] = human_profiles(recs, [question], REGISTRY)
        assert categorize(profile).kind is CategoryKind.AGNOSTIC_CORRECT

    def test_weighting_feeds_rounding(self):
        # subtitle annotators correct but at confidence 2 and 1: value 3/10 -> 0
        [question] = self.questions()
        recs = [
            record("v0", question.question_id, VIDEO, 1, 4),
            record("s0", question.question_id, SUBTITLE, 0, 2),
            record("s1", question.question_id, SUBTITLE, 0, 1),
            record("b0", question.question_id, BOTH, 1, 3),
        ]
        [profile] = human_profiles(recs, [question], REGISTRY)
        assert profile.value(SUBTITLE) == 0

    def test_missing_condition_listed(self):
        [question] = self.questions()
        recs = study_records(question.question_id, (0,), (1,), (1,))
        recs = [r for r in recs if r.condition != BOTH]
        with pytest.raises(IntegrityError) as err:
            human_profiles(recs, [question], REGISTRY)
        assert "q000/video+subtitle" in str(err.value)

    def test_missing_question_listed(self):
        q1, q2 = self.questions(2)
        recs = study_records(q1.question_id, (1,), (1,), (1,))
        with pytest.raises(IntegrityError) as err:
            human_profiles(recs, [q1, q2], REGISTRY)
        message = str(err.value)
        assert "q001/video" in message and "q001/subtitle" in message

    def test_output_sorted_by_question(self):
        q1, q2 = self.questions(2)
        recs = study_records(q2.question_id, (1,), (0,), (1,)) + study_records(
            q1.question_id, (0,), (0,), (0,)
        )
        profiles = human_profiles(recs, [q2, q1], REGISTRY)
        assert [p.question_id for p in profiles] == ["q000", "q001"]

    def test_relabeling_invariance(self):
        """Permuting annotator ids never changes categories on the
        unanimous subset."""
        rng = random.Random(23)
        questions = self.questions(6)
        recs = []
        for question in questions:
            bits = lambda n: tuple(rng.randrange(2) for _ in range(n))
            recs.extend(
                study_records(question.question_id, bits(2), bits(2), bits(4))
            )

        def pipeline(records):
            kept = unanimous_filter(records, questions)
            profiles = human_profiles(
                [r for r in records if r.question_id in {q.question_id for q in kept}],
                kept,
                REGISTRY,
            )
            return {p.question_id: categorize(p).token(REGISTRY) for p in profiles}

        baseline = pipeline(recs)
        names = sorted({r.annotator_id for r in recs})
        shuffled = names[:]
        rng.shuffle(shuffled)
        renamed = {old: new for old, new in zip(names, shuffled)}
        relabeled = [
            AnnotationRecord(
                renamed[r.annotator_id],
                r.question_id,
                r.condition,
                r.chosen_index,
                r.confidence,
                r.submitted_at,
            )
            for r in recs
        ]
        assert pipeline(relabeled) == baseline


class TestUnanimousFilter:
    def test_unanimous_kept(self):
        question = build_question(question_id="q1", correct_index=0)
        recs = study_records("q1", (0, 0), (1, 1), (1, 1))
        assert unanimous_filter(recs, [question]) == [question]

    def test_split_dropped(self):
        question = build_question(question_id="q1", correct_index=0)
        recs = study_records("q1", (0, 1), (1, 1), (1, 1))
        assert unanimous_filter(recs, [question]) == []

    def test_no_records_dropped(self):
        question = build_question(question_id="q1", correct_index=0)
        assert unanimous_filter([], [question]) == []


def assignment():
    return GroupAssignment(
        groups={
            "A": {"annotators": ("a1", "a2"), "condition": VIDEO},
            "B": {"annotators": ("b1", "b2"), "condition": SUBTITLE},
        },
        second_condition=BOTH,
    )


class TestGroupAssignment:
    def test_valid(self):
        assignment().validate(REGISTRY)

    def test_annotator_order_stable(self):
        assert assignment().annotators() == ["a1", "a2", "b1", "b2"]

    def test_first_condition_lookup(self):
        groups = assignment()
        assert groups.first_condition_of("b2") == SUBTITLE
        with pytest.raises(KeyError):
            groups.first_condition_of("nobody")

    def test_duplicate_condition_rejected(self):
        bad = GroupAssignment(
            groups={
                "A": {"annotators": ("a1",), "condition": VIDEO},
                "B": {"annotators": ("b1",), "condition": VIDEO},
            },
            second_condition=BOTH,
        )
        with pytest.raises(IntegrityError, match="duplicate"):
            bad.validate(REGISTRY)

    def test_annotator_in_two_groups_rejected(self):
        bad = GroupAssignment(
            groups={
                "A": {"annotators": ("a1",), "condition": VIDEO},
                "B": {"annotators": ("a1",), "condition": SUBTITLE},
            },
            second_condition=BOTH,
        )
        with pytest.raises(IntegrityError, match="two groups"):
            bad.validate(REGISTRY)

    def test_group_count_must_match_modalities(self):
        bad = GroupAssignment(
            groups={"A": {"annotators": ("a1",), "condition": VIDEO}},
            second_condition=BOTH,
        )
        with pytest.raises(IntegrityError, match="one group per modality"):
            bad.validate(REGISTRY)

    def test_second_condition_must_be_full(self):
        bad = GroupAssignment(
            groups={
                "A": {"annotators": ("a1",), "condition": VIDEO},
                "B": {"annotators": ("b1",), "condition": SUBTITLE},
            },
            second_condition=VIDEO,
        )
        with pytest.raises(IntegrityError, match="full modality set"):
            bad.validate(REGISTRY)


class TestStudyDefinition:
    def definition_file(self, tmp_path, **overrides):
        data = {
            "schema": "misaudit/study@1",
            "modalities": ["video", "subtitle"],
            "question_ids": ["q1", "q2"],
            "groups": {
                "A": {"annotators": ["a1", "a2"], "condition": "video"},
                "B": {"annotators": ["b1", "b2"], "condition": "subtitle"},
            },
            "seed": 7,
        }
        data.update(overrides)
        path = tmp_path / "study.json"
        path.write_text(json.dumps(data))
        return path

    def test_load(self, tmp_path):
        study = StudyDefinition.load(self.definition_file(tmp_path))
        assert study.question_ids == ("q1", "q2")
        assert study.assignment.first_condition_of("a1") == VIDEO
        assert study.registry().names == ("video", "subtitle")
        assert study.seed == 7

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestionError):
            StudyDefinition.load(tmp_path / "absent.json")

    def test_wrong_schema(self, tmp_path):
        path = self.definition_file(tmp_path, schema="misaudit/other@1")
        with pytest.raises(IngestionError, match="schema"):
            StudyDefinition.load(path)

    def test_duplicate_questions(self, tmp_path):
        path = self.definition_file(tmp_path, question_ids=["q1", "q1"])
        with pytest.raises(IngestionError, match="duplicate"):
            StudyDefinition.load(path)


class TestRecordStore:
    def test_resubmission_replaces(self, tmp_path):
        store = RecordStore(tmp_path / "annotations.jsonl")
        store.add(record("a1", "q1", VIDEO, 0, 3, at=1.0))
        store.add(record("a1", "q1", VIDEO, 2, 5, at=2.0))
        [only] = store.records()
        assert only.chosen_index == 2 and only.confidence == 5
        assert len(store) == 1

    def test_append_only_file_keeps_history(self, tmp_path):
        path = tmp_path / "annotations.jsonl"
        store = RecordStore(path)
        store.add(record("a1", "q1", VIDEO, 0, 3, at=1.0))
        store.add(record("a1", "q1", VIDEO, 2, 5, at=2.0))
        lines = path.read_text().splitlines()
        assert len(lines) == 2

    def test_reload_recovers_snapshot(self, tmp_path):
        path = tmp_path / "annotations.jsonl"
        store = RecordStore(path)
        store.add(record("a1", "q1", VIDEO, 0, 3))
        store.add(record("a2", "q1", SUBTITLE, 1, 4))
        reopened = RecordStore(path)
        assert reopened.records() == store.records()

    def test_records_sorted_by_key(self, tmp_path):
        store = RecordStore(tmp_path / "annotations.jsonl")
        store.add(record("b", "q2", BOTH, 0, 3))
        store.add(record("a", "q1", VIDEO, 0, 3))
        keys = [r.key for r in store.records()]
        assert keys == sorted(keys)

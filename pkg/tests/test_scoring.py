"""Scoring math against independent brute-force oracles."""

import itertools
import random
from fractions import Fraction

import pytest

from misaudit import (
    AccuracyProfile,
    CategoryKind,
    ModalityRegistry,
    ModalitySubset,
    QuestionCategory,
    categorize,
    enumerate_subsets,
    mis,
    mis_group,
    mis_vector,
    perf,
)
from misaudit.errors import ConfigurationError, DomainError, IntegrityError


def oracle_mis(profile, j):
    """Independent enumeration: list subsets as index tuples, filter, average."""
    k = profile.k
    all_subsets = []
    for size in range(1, k + 1):
        all_subsets.extend(itertools.combinations(range(k), size))
    included = [s for s in all_subsets if j in s and len(s) >= 2]
    excluded = [s for s in all_subsets if j not in s]
    val = lambda s: profile.value(ModalitySubset.of(*s))
    avg = lambda fam: sum((val(s) for s in fam), Fraction(0)) / len(fam)
    return avg(included) - avg(excluded)


def binary_profiles(k):
    n = (1 << k) - 1
    for bits in itertools.product((0, 1), repeat=n):
        yield AccuracyProfile.from_bits(f"b{bits}", k, bits)


def random_fractional_profile(k, rng, qid):
    values = {}
    for mask in range(1, 1 << k):
        num = rng.randrange(0, 13)
        den = rng.randrange(max(num, 1), 16)
        values[ModalitySubset(mask)] = Fraction(num, den)
    return AccuracyProfile(qid, k, values)


class TestEnumerateSubsets:
    def test_k2(self):
        reg = ModalityRegistry(["video", "subtitle"])
        subsets = enumerate_subsets(reg)
        assert [s.mask for s in subsets] == [1, 2, 3]
        assert subsets[0].indices() == (0,)
        assert subsets[2].indices() == (0, 1)

    def test_k3_count_and_last(self):
        reg = ModalityRegistry(["a", "b", "c"])
        subsets = enumerate_subsets(reg)
        assert len(subsets) == 7
        assert subsets[-1].indices() == (0, 1, 2)

    def test_k4_membership_counts(self):
        # each index appears in exactly half of all 16 masks = 8 subsets
        reg = ModalityRegistry(["a", "b", "c", "d"])
        subsets = enumerate_subsets(reg)
        assert len(subsets) == 15
        for j in range(4):
            assert sum(1 for s in subsets if j in s) == 8

    def test_bad_k(self):
        with pytest.raises(ConfigurationError):
            ModalityRegistry(["solo"])
        with pytest.raises(ConfigurationError):
            ModalityRegistry([f"m{i}" for i in range(17)])


class TestPerf:
    def test_singleton(self):
        p = AccuracyProfile.from_bits("q", 2, [0, 1, 0])
        assert perf(p, [ModalitySubset(2)]) == 1

    def test_mean_of_two(self):
        p = AccuracyProfile.from_bits("q", 2, [1, 0, 0])
        assert perf(p, [ModalitySubset(1), ModalitySubset(3)]) == Fraction(1, 2)

    def test_full_family_k3(self):
        # only the full set correct -> 1/7 over all seven subsets
        p = AccuracyProfile.from_bits("q", 3, [0, 0, 0, 0, 0, 0, 1])
        reg = ModalityRegistry(["a", "b", "c"])
        assert perf(p, enumerate_subsets(reg)) == Fraction(1, 7)

    def test_empty_family(self):
        p = AccuracyProfile.from_bits("q", 2, [1, 1, 1])
        with pytest.raises(DomainError):
            perf(p, [])

    def test_missing_subset(self):
        p = AccuracyProfile.from_bits("q", 2, [1, 1, 1])
        with pytest.raises(IntegrityError):
            perf(p, [ModalitySubset(4)])


# Reference rows: (vid, sub, vid+sub) accuracy -> (MIS_vid, MIS_sub)
TWO_MODALITY_ROWS = [
    ((0, 0, 0), (0, 0)),
    ((0, 1, 0), (-1, 0)),
    ((1, 0, 0), (0, -1)),
    ((1, 1, 0), (-1, -1)),
    ((0, 0, 1), (1, 1)),
    ((0, 1, 1), (0, 1)),
    ((1, 0, 1), (1, 0)),
    ((1, 1, 1), (0, 0)),
]


class TestMIS:
    @pytest.mark.parametrize("bits,expected", TWO_MODALITY_ROWS)
    def test_two_modality_reference_rows(self, bits, expected):
        p = AccuracyProfile.from_bits("q", 2, bits)
        v = mis_vector(p)
        assert v.scores == tuple(Fraction(e) for e in expected)

    def test_k3_full_set_only(self):
        p = AccuracyProfile.from_bits("q", 3, [0, 0, 0, 0, 0, 0, 1])
        assert mis(p, 0) == Fraction(1, 3)

    def test_closed_form_k2(self):
        # MIS_j = profile[both] - profile[other singleton], on all 8 profiles
        for p in binary_profiles(2):
            both = p.value(ModalitySubset(3))
            assert mis(p, 0) == both - p.value(ModalitySubset(2))
            assert mis(p, 1) == both - p.value(ModalitySubset(1))

    def test_bad_index(self):
        p = AccuracyProfile.from_bits("q", 2, [1, 1, 1])
        with pytest.raises(DomainError):
            mis(p, 2)

    def test_oracle_exhaustive_k2_k3(self):
        for k in (2, 3):
            for p in binary_profiles(k):
                for j in range(k):
                    assert mis(p, j) == oracle_mis(p, j)

    def test_oracle_random_fractional_k4(self):
        rng = random.Random(20240915)
        for i in range(10_000):
            p = random_fractional_profile(4, rng, f"r{i}")
            j = rng.randrange(4)
            assert mis(p, j) == oracle_mis(p, j)

    def test_range_bound(self):
        rng = random.Random(7)
        for i in range(500):
            p = random_fractional_profile(3, rng, f"r{i}")
            for j in range(3):
                assert Fraction(-1) <= mis(p, j) <= Fraction(1)


class TestMISGroup:
    def test_singleton_equals_mis(self):
        for p in binary_profiles(2):
            for j in range(2):
                assert mis_group(p, ModalitySubset.of(j)) == mis(p, j)

    def test_k3_pair_full_only_correct(self):
        p = AccuracyProfile.from_bits("q", 3, [0, 0, 0, 0, 0, 0, 1])
        assert mis_group(p, ModalitySubset.of(0, 1)) == 1

    def test_k3_pair_constant_profile(self):
        p = AccuracyProfile.from_bits("q", 3, [1] * 7)
        assert mis_group(p, ModalitySubset.of(0, 1)) == 0

    def test_full_group_rejected(self):
        p = AccuracyProfile.from_bits("q", 2, [1, 1, 1])
        with pytest.raises(DomainError):
            mis_group(p, ModalitySubset(3))

    def test_empty_group_unconstructible(self):
        with pytest.raises(DomainError):
            ModalitySubset.of()


EXPECTED_CATEGORIES = {
    (0, 0, 0): QuestionCategory.agnostic_incorrect(),
    (0, 1, 0): QuestionCategory.biased(1),
    (1, 0, 0): QuestionCategory.biased(0),
    (1, 1, 0): QuestionCategory.none(),
    (0, 0, 1): QuestionCategory.complementary(),
    (0, 1, 1): QuestionCategory.biased(1),
    (1, 0, 1): QuestionCategory.biased(0),
    (1, 1, 1): QuestionCategory.agnostic_correct(),
}


class TestCategorize:
    @pytest.mark.parametrize("bits,expected", sorted(EXPECTED_CATEGORIES.items()))
    def test_k2_exhaustive(self, bits, expected):
        p = AccuracyProfile.from_bits("q", 2, bits)
        assert categorize(p) == expected

    def test_biased_uniqueness_exhaustive(self):
        # no profile admits two distinct dominant indices
        for k in (2, 3):
            for p in binary_profiles(k):
                v = mis_vector(p)
                dominant = [
                    j
                    for j in range(k)
                    if v[j] >= 0
                    and all(v[i] <= 0 and v[i] != v[j] for i in range(k) if i != j)
                ]
                assert len(dominant) <= 1

    def test_agnostic_iff_constant_k2(self):
        for p in binary_profiles(2):
            v = mis_vector(p)
            constant = len(set(p.values.values())) == 1
            agnostic = categorize(p, v).kind in (
                CategoryKind.AGNOSTIC_CORRECT,
                CategoryKind.AGNOSTIC_INCORRECT,
            )
            zero_vector = all(s == 0 for s in v.scores)
            assert constant == agnostic == zero_vector

    def test_complementary_iff_both_required_k2(self):
        for p in binary_profiles(2):
            is_comp = categorize(p).kind is CategoryKind.COMPLEMENTARY
            bits = tuple(p.value(ModalitySubset(m)) for m in (1, 2, 3))
            assert is_comp == (bits == (0, 0, 1))

    def test_all_zero_mis_nonconstant_falls_to_none(self):
        # fractional k=3 profile engineered so every score is zero yet values
        # differ: singletons 1/2, pairs 0, full set 1
        values = {}
        for mask in range(1, 8):
            size = bin(mask).count("1")
            values[ModalitySubset(mask)] = {
                1: Fraction(1, 2),
                2: Fraction(0),
                3: Fraction(1),
            }[size]
        p = AccuracyProfile("engineered", 3, values)
        v = mis_vector(p)
        assert all(s == 0 for s in v.scores)
        assert categorize(p, v).kind is CategoryKind.NONE

    def test_category_shape_rules(self):
        with pytest.raises(DomainError):
            QuestionCategory(CategoryKind.BIASED)
        with pytest.raises(DomainError):
            QuestionCategory(CategoryKind.COMPLEMENTARY, modality=0)

    def test_token_and_json_roundtrip(self):
        reg = ModalityRegistry(["video", "subtitle"])
        cat = QuestionCategory.biased(1)
        assert cat.token(reg) == "biased:subtitle"
        assert QuestionCategory.from_json(cat.to_json(reg)) == cat
        plain = QuestionCategory.none()
        assert QuestionCategory.from_json(plain.to_json()) == plain


class TestProfileValidation:
    def test_rejects_floats(self):
        with pytest.raises(DomainError):
            AccuracyProfile("q", 2, {ModalitySubset(m): 0.5 for m in (1, 2, 3)})

    def test_rejects_incomplete(self):
        with pytest.raises(IntegrityError):
            AccuracyProfile("q", 2, {ModalitySubset(1): Fraction(1)})

    def test_rejects_out_of_range_value(self):
        values = {ModalitySubset(m): Fraction(1) for m in (1, 2)}
        values[ModalitySubset(3)] = Fraction(3, 2)
        with pytest.raises(IntegrityError):
            AccuracyProfile("q", 2, values)

    def test_record_roundtrip(self):
        rng = random.Random(3)
        p = random_fractional_profile(3, rng, "rt")
        assert AccuracyProfile.from_record(p.to_record()) == p

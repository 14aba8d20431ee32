import itertools
import math
import random
from fractions import Fraction
from statistics import mean, stdev

import pytest

from a2p2 import evalstats, patientsim
from a2p2.errors import (
    BadItemCount,
    DegenerateTable,
    DomainError,
    EmptySample,
    NoData,
    OutOfRange,
    ZeroVariance,
)
from a2p2.evalstats import (
    ContingencyTable2x3,
    PairedSample,
    cohens_d,
    fisher_enumeration,
    fisher_exact_2x3,
    paired_permutation_test,
    percent_reduction,
    summarize,
    sus_score,
    unpaired_permutation_test,
)

# frozen by the enumeration oracle before the build; see test_fisher_oracle
TABLE2_P = 0.0009528563767573295


# -- percent reduction --------------------------------------------------------


def test_percent_reduction_reported_values():
    assert percent_reduction(31.26, 22.089) == 29.34
    assert percent_reduction(32.15, 21.55) == 32.97


def test_percent_reduction_expert_column_arithmetic():
    # (30.54 - 22.53) / 30.54 = 26.2279%; exact 2-decimal rounding gives 26.23
    assert percent_reduction(30.54, 22.53) == 26.23


def test_percent_reduction_identity_and_sign():
    assert percent_reduction(10.0, 10.0) == 0.0
    assert percent_reduction(10.0, 12.0) == -20.0


def test_percent_reduction_domain():
    with pytest.raises(DomainError):
        percent_reduction(0.0, 1.0)
    with pytest.raises(DomainError):
        percent_reduction(-3.0, 1.0)


# -- paired permutation test ----------------------------------------------------


def oracle_sign_flip_p(pairs):
    """Brute force: every sign pattern over the per-pair differences."""
    diffs = [c - i for i, c in pairs]
    observed = abs(sum(diffs))
    hits = 0
    for signs in itertools.product((1, -1), repeat=len(diffs)):
        stat = abs(sum(s * d for s, d in zip(signs, diffs)))
        if stat >= observed - 1e-12:
            hits += 1
    return hits / 2 ** len(diffs)


def test_identical_pairs_give_p_one():
    sample = PairedSample(((5.0, 5.0), (7.2, 7.2), (1.0, 1.0)))
    assert paired_permutation_test(sample, "exact") == 1.0


def test_hand_dataset_matches_enumeration_over_16_patterns():
    pairs = ((20.0, 31.0), (25.0, 28.0), (22.0, 35.0), (30.0, 29.0))
    expected = oracle_sign_flip_p(pairs)
    assert paired_permutation_test(PairedSample(pairs), "exact") == pytest.approx(expected, abs=1e-12)
    assert len(pairs) == 4  # 2^4 = 16 sign patterns


def test_exact_matches_oracle_on_random_fixtures():
    rng = random.Random(2026)
    for _ in range(25):
        n = rng.randint(1, 10)
        pairs = tuple((rng.uniform(10, 40), rng.uniform(10, 40)) for _ in range(n))
        expected = oracle_sign_flip_p(pairs)
        got = paired_permutation_test(PairedSample(pairs), "exact")
        assert got == pytest.approx(expected, abs=1e-12)


def test_exact_invariant_under_pair_reordering():
    rng = random.Random(7)
    pairs = [(rng.uniform(10, 40), rng.uniform(10, 40)) for _ in range(8)]
    p1 = paired_permutation_test(PairedSample(tuple(pairs)), "exact")
    rng.shuffle(pairs)
    p2 = paired_permutation_test(PairedSample(tuple(pairs)), "exact")
    assert p1 == pytest.approx(p2, abs=1e-12)


def test_exact_invariant_under_zero_difference_pair():
    pairs = ((20.0, 31.0), (25.0, 28.0), (22.0, 35.0))
    with_zero = pairs + ((4.2, 4.2),)
    p1 = paired_permutation_test(PairedSample(pairs), "exact")
    p2 = paired_permutation_test(PairedSample(with_zero), "exact")
    # the zero pair doubles both hit count and denominator
    assert p1 == pytest.approx(p2, abs=1e-12)
    assert oracle_sign_flip_p(with_zero) == pytest.approx(p1, abs=1e-12)


def test_monte_carlo_deterministic_per_seed():
    sample = PairedSample(tuple((float(i), float(i) + (i % 3)) for i in range(12)))
    a = paired_permutation_test(sample, "monte_carlo", n_resamples=2000, seed=9)
    b = paired_permutation_test(sample, "monte_carlo", n_resamples=2000, seed=9)
    assert a == b
    c = paired_permutation_test(sample, "monte_carlo", n_resamples=2000, seed=10)
    assert isinstance(c, float)


def test_monte_carlo_converges_to_exact_within_3_se():
    rng = random.Random(11)
    for _ in range(5):
        pairs = tuple((rng.uniform(15, 30), rng.uniform(20, 35)) for _ in range(10))
        sample = PairedSample(pairs)
        exact = paired_permutation_test(sample, "exact")
        n = 4000
        mc = paired_permutation_test(sample, "monte_carlo", n_resamples=n, seed=3)
        se = math.sqrt(exact * (1 - exact) / n) if 0 < exact < 1 else 1 / n
        assert abs(mc - exact) <= 3 * se + 2 / n


def test_empty_sample():
    with pytest.raises(EmptySample):
        paired_permutation_test(PairedSample(()), "exact")


def test_exact_refuses_oversized_input():
    pairs = tuple((float(i), float(i + 1)) for i in range(21))
    with pytest.raises(DomainError):
        paired_permutation_test(PairedSample(pairs), "exact")


def test_nonfinite_values_rejected():
    with pytest.raises(DomainError):
        PairedSample(((float("nan"), 1.0),))


def test_unpaired_permutation_matches_bitmask_oracle():
    a = [20.0, 24.0, 22.5]
    b = [28.0, 30.5, 26.0, 29.0]
    values = a + b
    n, n_a = len(values), len(a)
    observed = abs(mean(a) - mean(b))
    hits = 0
    count = 0
    for mask in range(1 << n):
        if bin(mask).count("1") != n_a:
            continue
        count += 1
        group_a = [values[i] for i in range(n) if mask >> i & 1]
        group_b = [values[i] for i in range(n) if not mask >> i & 1]
        if abs(mean(group_a) - mean(group_b)) >= observed - 1e-12:
            hits += 1
    expected = hits / count
    assert unpaired_permutation_test(a, b, "exact") == pytest.approx(expected, abs=1e-12)


def test_unpaired_monte_carlo_deterministic():
    a = [20.0, 24.0, 22.5, 21.0]
    b = [28.0, 30.5, 26.0, 29.0]
    p1 = unpaired_permutation_test(a, b, "monte_carlo", n_resamples=1000, seed=5)
    p2 = unpaired_permutation_test(a, b, "monte_carlo", n_resamples=1000, seed=5)
    assert p1 == p2


# -- Freeman-Halton exact test -------------------------------------------------


def oracle_fisher_2x3(row0, row1):
    """Independent recomputation with binomial coefficients instead of factorials."""
    rows = [sum(row0), sum(row1)]
    cols = [a + b for a, b in zip(row0, row1)]
    grand = sum(rows)

    def prob(a):
        return Fraction(
            math.comb(cols[0], a[0]) * math.comb(cols[1], a[1]) * math.comb(cols[2], a[2]),
            math.comb(grand, rows[0]),
        )

    observed = prob(row0)
    p = Fraction(0)
    total = Fraction(0)
    for a0 in range(min(rows[0], cols[0]) + 1):
        for a1 in range(min(rows[0] - a0, cols[1]) + 1):
            a2 = rows[0] - a0 - a1
            if a2 > cols[2]:
                continue
            candidate = prob((a0, a1, a2))
            total += candidate
            if candidate <= observed:
                p += candidate
    return float(p), float(total)


def test_fisher_reported_contingency_table():
    table = ContingencyTable2x3(control=(12, 7, 1), intervention=(2, 9, 9))
    p = fisher_exact_2x3(table)
    assert p < 0.001
    assert p == pytest.approx(TABLE2_P, abs=1e-12)
    detail = fisher_enumeration(table)
    assert detail["total_probability"] == pytest.approx(1.0, abs=1e-12)


def test_fisher_oracle():
    rng = random.Random(3)
    cases = [((12, 7, 1), (2, 9, 9)), ((5, 5, 5), (5, 5, 5)), ((1, 2, 3), (3, 2, 1))]
    for _ in range(10):
        row0 = tuple(rng.randint(0, 9) for _ in range(3))
        row1 = tuple(rng.randint(0, 9) for _ in range(3))
        if 0 in (sum(row0), sum(row1)) or 0 in [a + b for a, b in zip(row0, row1)]:
            continue
        cases.append((row0, row1))
    for row0, row1 in cases:
        expected_p, expected_total = oracle_fisher_2x3(row0, row1)
        detail = fisher_enumeration(ContingencyTable2x3(control=row0, intervention=row1))
        assert detail["p_value"] == pytest.approx(expected_p, abs=1e-12), (row0, row1)
        assert detail["total_probability"] == pytest.approx(expected_total, abs=1e-12)


def test_fisher_identical_rows_is_one():
    assert fisher_exact_2x3(ContingencyTable2x3(control=(5, 5, 5), intervention=(5, 5, 5))) == 1.0


def test_fisher_stable_across_runs():
    table = ContingencyTable2x3(control=(12, 7, 1), intervention=(2, 9, 9))
    values = {fisher_exact_2x3(table) for _ in range(5)}
    assert len(values) == 1


def test_fisher_column_permutation_invariance():
    base = ContingencyTable2x3(control=(12, 7, 1), intervention=(2, 9, 9))
    p = fisher_exact_2x3(base)
    for perm in itertools.permutations(range(3)):
        permuted = ContingencyTable2x3(
            control=tuple(base.control[i] for i in perm),
            intervention=tuple(base.intervention[i] for i in perm),
        )
        assert fisher_exact_2x3(permuted) == pytest.approx(p, abs=1e-12)


def test_fisher_degenerate_margins():
    with pytest.raises(DegenerateTable):
        fisher_exact_2x3(ContingencyTable2x3(control=(0, 0, 0), intervention=(1, 2, 3)))
    with pytest.raises(DegenerateTable):
        fisher_exact_2x3(ContingencyTable2x3(control=(1, 2, 0), intervention=(3, 4, 0)))


def test_contingency_rejects_negative_cells():
    with pytest.raises(DomainError):
        ContingencyTable2x3(control=(-1, 2, 3), intervention=(1, 2, 3))


# -- effect size ---------------------------------------------------------------


def test_cohens_d_identical_groups_pooled_zero():
    sample = PairedSample(((1.0, 1.0), (2.0, 2.0), (3.0, 3.0)))
    assert cohens_d(sample, "pooled") == 0.0


def test_cohens_dz_constructed_unit_effect():
    # differences 0, 1, 2: mean 1, sd 1
    sample = PairedSample(((0.0, 0.0), (0.0, 1.0), (0.0, 2.0)))
    assert cohens_d(sample, "dz") == pytest.approx(1.0, abs=1e-12)


def test_cohens_dz_zero_mean_diff():
    sample = PairedSample(((0.0, -1.0), (0.0, 1.0)))
    assert cohens_d(sample, "dz") == 0.0


def test_cohens_d_matches_direct_formula():
    rng = random.Random(13)
    pairs = tuple((rng.uniform(15, 30), rng.uniform(20, 40)) for _ in range(12))
    diffs = [c - i for i, c in pairs]
    assert cohens_d(PairedSample(pairs), "dz") == pytest.approx(mean(diffs) / stdev(diffs), abs=1e-12)
    interventions = [i for i, _ in pairs]
    controls = [c for _, c in pairs]
    pooled_sd = math.sqrt((stdev(interventions) ** 2 * 11 + stdev(controls) ** 2 * 11) / 22)
    expected = (mean(controls) - mean(interventions)) / pooled_sd
    assert cohens_d(PairedSample(pairs), "pooled") == pytest.approx(expected, abs=1e-12)


def test_cohens_d_zero_variance():
    sample = PairedSample(((0.0, 1.0), (2.0, 3.0)))  # all diffs exactly 1
    with pytest.raises(ZeroVariance):
        cohens_d(sample, "dz")


# -- usability scale -----------------------------------------------------------


def test_sus_neutral_midpoint():
    assert sus_score([3] * 10) == 50.0


def test_sus_ceiling_and_floor():
    assert sus_score([5, 1, 5, 1, 5, 1, 5, 1, 5, 1]) == 100.0
    assert sus_score([1, 5, 1, 5, 1, 5, 1, 5, 1, 5]) == 0.0


def test_sus_validation():
    with pytest.raises(BadItemCount):
        sus_score([3] * 9)
    with pytest.raises(OutOfRange):
        sus_score([3] * 9 + [6])


# -- summarize ----------------------------------------------------------------


@pytest.fixture(scope="module")
def cohort_dir(runtime, tmp_path_factory):
    out = tmp_path_factory.mktemp("cohort")
    patientsim.build_synthetic_cohort(runtime, out, participants=6, experts=3, base_seed=77)
    return out


def test_summarize_wellformed(cohort_dir):
    import json

    groups = json.loads((cohort_dir / "groups.json").read_text())
    report = summarize(cohort_dir, groups)
    assert report["n_participants"] == 6
    assert set(report["groups"]) == {"all", "expert", "non_expert"}
    for group in report["groups"].values():
        rt = group["response_time"]
        for key in ("control_mean", "intervention_mean", "reduction_pct", "permutation_p"):
            assert rt[key] is not None
        table = group["empathy_accuracy"]["contingency"]
        assert sum(table["control"]) == group["n"]
        assert sum(table["intervention"]) == group["n"]
        assert group["goal_selection"]["accuracy"]["intervention"] == 1.0
        assert group["symptom_identification"]["intervention"] == 1.0
    # intervention empathy accuracy is perfect under ranked suggestions
    assert report["groups"]["all"]["empathy_accuracy"]["contingency"]["intervention"][2] == 6


def test_summarize_group_contrast(cohort_dir):
    import json

    groups = json.loads((cohort_dir / "groups.json").read_text())
    report = summarize(cohort_dir, groups)
    contrast = report["group_contrast"]
    assert contrast["metric"] == "relative_rt_reduction"
    assert 0 <= contrast["permutation_p"] <= 1
    # oracle: recompute the group means from the participant rows
    for group, key in (("expert", "expert_mean"), ("non_expert", "non_expert_mean")):
        rows = [r for r in report["participants"] if r["group"] == group]
        expected = mean(
            (r["control"]["avg_rt"] - r["intervention"]["avg_rt"]) / r["control"]["avg_rt"] for r in rows
        )
        assert contrast[key] == pytest.approx(expected, abs=1e-4)


def test_summarize_contrast_absent_without_both_groups(runtime, tmp_path):
    patientsim.build_synthetic_cohort(runtime, tmp_path, participants=2, experts=2, base_seed=19)
    import json

    report = summarize(tmp_path, json.loads((tmp_path / "groups.json").read_text()))
    assert "group_contrast" not in report


def test_summarize_single_participant(runtime, tmp_path):
    patientsim.build_synthetic_cohort(runtime, tmp_path, participants=1, experts=1, base_seed=5)
    report = summarize(tmp_path, {"p01": "expert"})
    assert report["n_participants"] == 1
    assert any("n=1" in note for note in report["notes"])
    assert report["groups"]["all"]["response_time"]["permutation_p"] == 1.0
    assert report["groups"]["all"]["response_time"]["cohens_dz"] is None


def test_summarize_empty_dir(tmp_path):
    with pytest.raises(NoData):
        summarize(tmp_path)
    with pytest.raises(NoData):
        summarize(tmp_path / "missing")


def test_summarize_ignores_unpaired_participants(runtime, tmp_path):
    import json

    patientsim.build_synthetic_cohort(runtime, tmp_path, participants=2, experts=1, base_seed=31)
    (tmp_path / "p02_control.json").unlink()
    report = summarize(tmp_path, json.loads((tmp_path / "groups.json").read_text()))
    assert report["n_participants"] == 1

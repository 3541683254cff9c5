from __future__ import annotations

import math

import numpy as np
import pytest

from oracles import exact_mwu_oracle, kw_h_by_hand, kw_permutation_midp, u_by_pair_counting
from retweetshift.errors import DataError
from retweetshift.shift import ShiftRecord
from retweetshift.stats import (
    StatMethod,
    bootstrap_mean,
    bootstrap_means,
    chi2_sf,
    delta_sentiment_matrix,
    kruskal_wallis,
    mann_whitney_u,
)

# --- bootstrap ------------------------------------------------------------------


def test_bootstrap_constant_vector():
    s = bootstrap_mean([3.5, 3.5, 3.5], iterations=500, seed=1)
    assert s.mean_of_means == 3.5
    assert s.std_of_means == 0.0


def test_bootstrap_two_point_distribution():
    # resample means of [0, 1] are {0: 1/4, 1/2: 1/2, 1: 1/4}: mean 0.5,
    # std sqrt(1/8); 3 standard errors at 10000 iterations
    s = bootstrap_mean([0.0, 1.0], iterations=10000, seed=7)
    se_mean = math.sqrt(1 / 8) / math.sqrt(10000)
    assert s.mean_of_means == pytest.approx(0.5, abs=3 * se_mean)
    se_std = math.sqrt(1 / 8) / math.sqrt(2 * 10000)
    assert s.std_of_means == pytest.approx(math.sqrt(1 / 8), abs=3 * se_std)


def test_bootstrap_deterministic_given_seed():
    data = [0.3, -0.2, 0.9, 0.1, 0.0]
    a = bootstrap_mean(data, iterations=2000, seed=42)
    b = bootstrap_mean(data, iterations=2000, seed=42)
    assert a == b
    c = bootstrap_mean(data, iterations=2000, seed=43)
    assert c.mean_of_means != a.mean_of_means


def test_bootstrap_chunking_invisible():
    # the stream is chunked internally; totals must not depend on iteration
    # count sharing chunk boundaries
    data = [1.0, 2.0, 4.0]
    m1 = bootstrap_means(data, iterations=700, seed=5)
    m2 = bootstrap_means(data, iterations=1300, seed=5)
    assert np.array_equal(m1, m2[:700])


def test_bootstrap_empty_rejected():
    with pytest.raises(DataError):
        bootstrap_mean([], seed=0)


def test_bootstrap_subsample_fraction():
    means = bootstrap_means([0.0, 1.0, 2.0, 3.0], iterations=50, seed=3, subsample_fraction=0.5)
    # k = 2 draws per iteration: means land on the half-integer grid
    assert all(m * 2 == int(m * 2) for m in means)


# --- Mann-Whitney U -----------------------------------------------------------


def test_mwu_canonical_separated_fixture():
    r = mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert r.statistic == 0.0
    assert r.p_value == pytest.approx(0.1, rel=1e-12)
    assert r.method is StatMethod.MWU_EXACT
    assert r.n_per_group == (3, 3)


def test_mwu_statistic_counts_pairs():
    x, y = [3.0, 1.0, 4.0], [2.0, 2.0, 5.0]
    r = mann_whitney_u(x, y)
    assert r.statistic == u_by_pair_counting(x, y)


def test_mwu_identical_multisets_p_near_one():
    r = mann_whitney_u([1, 2, 3], [1, 2, 3])
    assert r.method is StatMethod.MWU_NORMAL  # ties force the approximation
    assert r.p_value >= 0.99


def test_mwu_all_values_identical_p_one():
    r = mann_whitney_u([2, 2], [2, 2, 2])
    assert r.p_value == 1.0


def test_mwu_exact_matches_enumeration_oracle_on_sample_sizes():
    rng = np.random.default_rng(0)
    for n, m in [(1, 1), (1, 8), (8, 1), (2, 6), (3, 3), (4, 4), (5, 7), (8, 8)]:
        vals = rng.permutation(np.arange(1.0, n + m + 1))
        x, y = vals[:n].tolist(), vals[n:].tolist()
        r = mann_whitney_u(x, y)
        assert r.method is StatMethod.MWU_EXACT
        assert r.p_value == pytest.approx(exact_mwu_oracle(x, y), rel=1e-12)


def test_mwu_sizes_above_cutoff_use_normal():
    x = list(range(9))
    y = [v + 0.5 for v in range(9)]
    r = mann_whitney_u(x, y)
    assert r.method is StatMethod.MWU_NORMAL


def test_mwu_tied_small_fixture_vs_oracle():
    # At n=3+3 the normal approximation is inherently coarse: the
    # inclusive-tail permutation oracle gives 1.0, the mid-p oracle 0.55,
    # and continuity-corrected normal 0.6193 (plain normal 0.456), so no
    # convention pairing lands within 0.01 here. Freeze both values and
    # bound the small-sample gap honestly; tight 0.01 agreement with the
    # permutation oracle is asserted at adequate sizes in test_acceptance.
    x, y = [1, 1, 2], [1, 2, 2]
    r = mann_whitney_u(x, y)
    assert r.method is StatMethod.MWU_NORMAL
    assert r.tie_correction_applied
    oracle_inclusive = exact_mwu_oracle(x, y)
    assert oracle_inclusive == pytest.approx(1.0)
    assert abs(r.p_value - oracle_inclusive) < 0.4
    assert r.p_value == pytest.approx(0.6193, abs=5e-4)  # frozen implementation value


def test_mwu_symmetric_in_arguments():
    rng = np.random.default_rng(5)
    for _ in range(10):
        x = rng.normal(size=6).tolist()
        y = rng.normal(size=9).tolist()
        assert mann_whitney_u(x, y).p_value == pytest.approx(
            mann_whitney_u(y, x).p_value, rel=1e-12
        )


def test_mwu_empty_sample_rejected():
    with pytest.raises(DataError):
        mann_whitney_u([], [1.0])
    with pytest.raises(DataError):
        mann_whitney_u([1.0], [])


# --- Kruskal-Wallis -------------------------------------------------------------


def test_kw_identical_groups():
    r = kruskal_wallis([[1, 2, 3], [1, 2, 3]])
    assert r.statistic == pytest.approx(0.0, abs=1e-12)
    assert r.p_value == pytest.approx(1.0, abs=1e-9)


def test_kw_two_groups_vs_permutation_midp():
    groups = [[1, 2, 3], [4, 5, 6]]
    r = kruskal_wallis(groups)
    assert r.statistic == pytest.approx(kw_h_by_hand(groups), abs=1e-12)
    # the chi-square tail estimates the mid-p of the discrete permutation null
    assert abs(r.p_value - kw_permutation_midp(groups)) < 0.02


def test_kw_three_group_hand_fixture():
    groups = [[1, 3], [2, 5], [4, 6]]
    # ranks 1..6: R = (4, 7, 10); H = 12/42 * (8 + 24.5 + 50) - 21 = 18/7
    r = kruskal_wallis(groups)
    assert r.statistic == pytest.approx(18 / 7, abs=1e-9)
    assert r.n_per_group == (2, 2, 2)
    assert not r.tie_correction_applied


def test_kw_tied_hand_fixture():
    groups = [[1, 1], [1, 2]]
    # midranks -> raw H = 0.6, tie factor = 1 - 24/60 = 0.6, H = 1.0
    r = kruskal_wallis(groups)
    assert r.statistic == pytest.approx(1.0, abs=1e-12)
    assert r.tie_correction_applied
    assert r.p_value == pytest.approx(chi2_sf(1.0, 1), abs=1e-12)


def test_kw_all_identical_values():
    r = kruskal_wallis([[5, 5], [5, 5, 5]])
    assert r.statistic == 0.0
    assert r.p_value == 1.0


def test_kw_empty_group_rejected():
    with pytest.raises(DataError):
        kruskal_wallis([[1.0], []])
    with pytest.raises(DataError):
        kruskal_wallis([[1.0]])


def test_kw_equals_squared_z_for_two_tiefree_groups():
    rng = np.random.default_rng(8)
    for trial in range(20):
        n, m = int(rng.integers(2, 13)), int(rng.integers(2, 13))
        vals = rng.permutation(np.arange(1.0, n + m + 1)) + rng.random() * 0.1
        x, y = vals[:n].tolist(), vals[n:].tolist()
        u = mann_whitney_u(x, y).statistic
        z = (u - n * m / 2.0) / math.sqrt(n * m * (n + m + 1) / 12.0)
        h = kruskal_wallis([x, y]).statistic
        assert h == pytest.approx(z * z, abs=1e-9)


def test_chi2_sf_known_values():
    # chi-square(1) critical value 3.841 -> 0.05; chi-square(2) at 5.991 -> 0.05
    assert chi2_sf(3.841458820694124, 1) == pytest.approx(0.05, abs=1e-9)
    assert chi2_sf(5.991464547107979, 2) == pytest.approx(0.05, abs=1e-9)
    assert chi2_sf(0.0, 3) == 1.0


# --- delta sentiment matrix ------------------------------------------------------


def _shift(user, a, b):
    return ShiftRecord(user, a, b)


def test_delta_matrix_all_zero_when_sentiment_unchanged():
    records = [_shift("u1", "democratic", "democratic"), _shift("u2", "republican", "republican")]
    s = {"u1": 0.3, "u2": -0.2}
    cells = delta_sentiment_matrix(records, s, dict(s), ["democratic", "republican"], iterations=200, seed=1)
    for cell in cells:
        if cell.summary is not None:
            assert cell.summary.mean_of_means == 0.0


def test_delta_matrix_planted_movers():
    records = []
    s1, s2 = {}, {}
    for i in range(40):
        u = f"stay{i}"
        records.append(_shift(u, "republican", "republican"))
        s1[u] = 0.2
        s2[u] = 0.2
    for i in range(10):
        u = f"move{i}"
        records.append(_shift(u, "republican", "democratic"))
        s1[u] = 0.25
        s2[u] = 0.15
    cells = {(c.label_t1, c.label_t2): c for c in delta_sentiment_matrix(
        records, s1, s2, ["democratic", "republican"], iterations=3000, seed=9
    )}
    mover_cell = cells[("republican", "democratic")]
    assert mover_cell.n_users == 10
    assert mover_cell.summary.mean_of_means == pytest.approx(-0.1, abs=1e-9)
    empty_cell = cells[("democratic", "republican")]
    assert empty_cell.n_users == 0
    assert empty_cell.summary is None  # reported, not fatal


def test_delta_matrix_unknown_label_rejected():
    with pytest.raises(DataError):
        delta_sentiment_matrix(
            [_shift("u", "green", "republican")], {"u": 0.0}, {"u": 0.0},
            ["democratic", "republican"], iterations=10, seed=0,
        )

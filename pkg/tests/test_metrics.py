import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from refrig_imc import benchmark as bm
from refrig_imc.errors import WindowOutOfRange, ZeroBaselineIndex
from refrig_imc.imc import imc_pid
from refrig_imc.metrics import (RATIO_NAMES, JWeights, RawIndices, aggregate_j, iae, iavu,
                                itae, j_from_ratios, raw_indices, score)
from refrig_imc.scenario import default_scenario, run_closed_loop

signals = st.lists(st.floats(-100, 100), min_size=2, max_size=50).map(np.array)
positive = st.floats(1e-3, 1e3)
raw_vectors = st.tuples(*[positive] * 8)
weight_vectors = st.tuples(*[st.floats(0.0, 10.0)] * 8).filter(lambda w: sum(w) > 1e-3)


def raw_from(v):
    return RawIndices(tuple(v[:2]), tuple(v[2:6]), tuple(v[6:]))


# -- raw indices -----------------------------------------------------------------

def test_iae_examples():
    assert iae(np.zeros(20), 1.0) == 0.0
    assert iae(np.ones(11), 1.0) == 10.0
    t = np.arange(0, 1.0 + 1e-12, 0.001)
    assert iae(t, 0.001) == pytest.approx(0.5, abs=1e-5)


def test_itae_examples():
    assert itae(np.zeros(5), 1.0, (0.0, 2.0)) == 0.0
    assert itae(np.ones(3), 1.0, (0.0, 2.0)) == pytest.approx(2.0, abs=1e-15)
    with pytest.raises(WindowOutOfRange):
        itae(np.ones(3), 1.0, (5.0, 1.0))


def test_itae_window_between_samples():
    # e = 1 on a fine grid: integral of (t - t_c) over length L is L^2 / 2
    e = np.ones(1001)
    assert itae(e, 0.01, (1.234, 3.5)) == pytest.approx(3.5 ** 2 / 2, rel=1e-12)


def test_itae_against_dense_quadrature():
    ts = 0.5
    t = np.arange(0, 50 + ts / 2, ts)
    e = np.sin(0.3 * t) * np.exp(-0.05 * t)
    fine = np.linspace(10.0, 30.0, 200001)
    dense = np.trapezoid((fine - 10.0) * np.abs(np.interp(fine, t, e)), fine)
    assert itae(e, ts, (10.0, 20.0)) == pytest.approx(dense, rel=2e-3)


def test_iavu_examples():
    assert iavu(np.full(10, 3.0)) == 0.0
    assert iavu(np.array([0.0, 1.0, 0.0])) == 2.0
    assert iavu(np.linspace(0, 5, 7)) == pytest.approx(5.0, abs=1e-14)
    assert iavu(np.linspace(0, 5, 700)) == pytest.approx(5.0, abs=1e-12)
    with pytest.raises(ValueError):
        iavu(np.array([1.0]))


@given(signals, st.floats(-10, 10))
def test_scale_covariance(e, a):
    assert iae(a * e, 0.5) == pytest.approx(abs(a) * iae(e, 0.5), rel=1e-9, abs=1e-9)
    t_end = 0.5 * (e.size - 1)
    w = (0.0, t_end)
    assert itae(a * e, 0.5, w) == pytest.approx(abs(a) * itae(e, 0.5, w), rel=1e-9, abs=1e-9)
    assert iavu(a * e) == pytest.approx(abs(a) * iavu(e), rel=1e-9, abs=1e-9)


@given(signals)
def test_raw_indices_non_negative(e):
    assert iae(e, 1.0) >= 0 and iavu(e) >= 0
    assert itae(e, 1.0, (0.0, e.size - 1.0)) >= 0


# -- aggregate J -------------------------------------------------------------------

def test_equal_weight_j_of_decentralized_column():
    # hand sum of the eight published ratios is 5.5401; the published J
    # (0.68209) is not their equal-weight mean
    j = j_from_ratios(bm.DECENTRALIZED_RATIOS)
    assert j == pytest.approx(5.5401 / 8, abs=1e-12)
    assert abs(j - bm.DECENTRALIZED_J) == pytest.approx(0.0104225, abs=1e-7)


def test_equal_weight_j_of_imc_column_differs_from_printed_value():
    j = j_from_ratios(bm.IMC_RATIOS)
    assert j == pytest.approx(0.574, abs=1e-3)
    assert abs(j - bm.IMC_J) > 0.3


def test_aggregate_j_through_raw_indices():
    base = raw_from((1.0,) * 8)
    cand = raw_from(bm.DECENTRALIZED_RATIOS)
    rep = aggregate_j(cand, base)
    assert rep.ratios == bm.DECENTRALIZED_RATIOS
    assert rep.J == pytest.approx(0.6925125, abs=1e-12)
    assert list(rep.ratio_dict()) == list(RATIO_NAMES)


@given(raw_vectors, weight_vectors)
def test_identity_gives_exactly_one(v, w):
    rep = aggregate_j(raw_from(v), raw_from(v), JWeights(w))
    assert all(r == 1.0 for r in rep.ratios)
    assert rep.J == 1.0


@given(raw_vectors, raw_vectors, st.tuples(*[st.floats(0.01, 10.0)] * 8),
       st.integers(0, 7), st.floats(1.01, 10))
def test_j_strictly_monotone_in_each_ratio(c, b, w, idx, factor):
    weights = JWeights(w)
    j0 = aggregate_j(raw_from(c), raw_from(b), weights).J
    bumped = list(c)
    bumped[idx] *= factor
    assert aggregate_j(raw_from(bumped), raw_from(b), weights).J > j0


@given(raw_vectors, raw_vectors, weight_vectors, st.floats(1e-3, 1e3))
def test_weight_normalization(c, b, w, scale):
    j1 = aggregate_j(raw_from(c), raw_from(b), JWeights(w)).J
    j2 = aggregate_j(raw_from(c), raw_from(b), JWeights(tuple(scale * x for x in w))).J
    assert j2 == pytest.approx(j1, rel=1e-12)


def test_zero_baseline_index_is_named():
    base = raw_from((1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0))
    with pytest.raises(ZeroBaselineIndex) as exc:
        aggregate_j(raw_from((1.0,) * 8), base)
    assert exc.value.index_name == "ITAE2@w2"


def test_weights_validation():
    for w in ((1.0,) * 7, (-1.0,) + (1.0,) * 7, (0.0,) * 8, (math.inf,) + (1.0,) * 7):
        with pytest.raises(ValueError):
            JWeights(w)
    assert JWeights.from_obj({"weights": [2] * 8}).w == (2.0,) * 8
    assert JWeights.from_obj([1] * 8) == JWeights()


def test_zero_weight_drops_ratio():
    w = JWeights((1, 1, 1, 1, 1, 1, 0, 0))
    cand = raw_from((2, 2, 2, 2, 2, 2, 100, 100))
    assert aggregate_j(cand, raw_from((1.0,) * 8), w).J == 2.0


# -- on simulations ----------------------------------------------------------------

def test_window_assignment_follows_loops():
    s = default_scenario()
    sim = run_closed_loop(bm.surrogate_plant(1.0),
                          (imc_pid(bm.G11_RED, 0.1, limits=bm.AV_LIMITS),
                           imc_pid(bm.G22_RED, 0.1, limits=bm.N_COMP_LIMITS)), s)
    raw = raw_indices(sim, s.transient_windows)
    assert raw.itae[0] == itae(sim.e[0], 1.0, s.transient_windows[0])
    for w in range(1, 4):
        assert raw.itae[w] == itae(sim.e[1], 1.0, s.transient_windows[w])
    assert raw.iae == (iae(sim.e[0], 1.0), iae(sim.e[1], 1.0))


def test_score_self_is_one():
    s = default_scenario()
    sim = run_closed_loop(bm.surrogate_plant(1.0), bm.baseline_pid(), s)
    rep = score(sim, sim, s.transient_windows, JWeights((3, 1, 4, 1, 5, 9, 2, 6)))
    assert rep.J == 1.0
    assert rep.to_dict()["J"] == 1.0

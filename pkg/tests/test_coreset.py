import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pointline.coreset import (
    D_VC,
    SparseWeights,
    StreamState,
    WeightedPairSet,
    alignment_lift,
    alignment_lift_nd,
    build_coreset,
    lift_pair,
    lift_pairset,
    lift_rows,
    merge_coresets,
    row_sensitivities,
    sample_size,
    sensitivities,
    stream_coreset,
    stream_extend,
    stream_insert,
)
from pointline.errors import PointLineError
from pointline.geometry import Alignment, Line, PairSet, point_line_distance
from pointline.harness import GenConfig, gen_instance

# ------------------------------------------------------------------ lifting


def test_identity_lift():
    np.testing.assert_array_equal(alignment_lift(Alignment.identity()), [1, 0, 0, 1, 0, 0, -1])


def test_point_on_line_lifts_to_zero():
    l = Line((3, 4), 5)
    p = l.project((7, -2))
    assert abs(alignment_lift(Alignment.identity()) @ lift_pair(p, l, 2.0)) < 1e-12


def test_lift_rejects_bad_weight():
    with pytest.raises(PointLineError):
        lift_pair((0, 0), Line((0, 1), 0), -1.0)


@given(
    st.floats(0, 2 * math.pi),
    st.tuples(st.floats(-20, 20), st.floats(-20, 20)),
    st.tuples(st.floats(-100, 100), st.floats(-100, 100)),
    st.floats(0, 2 * math.pi),
    st.floats(0, 10),
    st.floats(0.01, 5),
)
def test_lift_identity(th, t, p, phi, b, w):
    a = Alignment.from_angle(th, t)
    l = Line((math.cos(phi), math.sin(phi)), b)
    lhs = abs(alignment_lift(a) @ lift_pair(p, l, w))
    rhs = w * point_line_distance(a.apply(p), l)
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def test_lift_pairset_matches_single(rng):
    inst = gen_instance(GenConfig(n=20, seed=1))
    w = rng.uniform(0, 2, 20)
    S = lift_pairset(inst.pairs, w)
    for i in (0, 7, 19):
        p, l = inst.pairs[i]
        np.testing.assert_allclose(S[i], lift_pair(p, l, w[i]))


def test_lift_general_dimension(rng):
    # d = 3: line through c with direction u; the two rows of V span u's complement
    for _ in range(50):
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        Q, _ = np.linalg.qr(np.column_stack([u, rng.normal(size=(3, 2))]))
        V = Q[:, 1:].T
        c = rng.normal(size=3) * 5
        b = V @ c
        p = rng.normal(size=3) * 5
        R, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        if np.linalg.det(R) < 0:
            R[:, 0] *= -1
        t = rng.normal(size=3)
        S = lift_rows(p[None], V[None], b[None], [1.5])
        assert S.shape == (2, 13)
        x = alignment_lift_nd(R, t)
        q = R @ p - t
        # orthogonal distance from q to the line
        dist = np.linalg.norm((q - c) - ((q - c) @ u) * u)
        assert np.linalg.norm(S @ x) == pytest.approx(1.5 * dist, rel=1e-10)


# -------------------------------------------------------------- sensitivities


def test_sensitivity_symmetry():
    S = np.tile(np.arange(1.0, 8.0), (10, 1))
    s = row_sensitivities(S)
    np.testing.assert_allclose(s, s[0])


def test_sensitivity_orthogonal_row(rng):
    S = np.zeros((20, 7))
    S[:19, :6] = rng.normal(size=(19, 6))
    S[19, 6] = 3.0
    s = row_sensitivities(S)
    # x = e_7 puts all the mass on the last row
    assert s[19] >= 1.0


def test_sensitivity_errors():
    with pytest.raises(PointLineError):
        row_sensitivities(np.zeros((3, 7)))
    with pytest.raises(PointLineError):
        row_sensitivities(np.zeros((0, 7)))
    with pytest.raises(PointLineError):
        sensitivities(np.ones((3, 7)), rows_per_pair=2)


def test_sensitivity_monte_carlo_audit(rng):
    inst = gen_instance(GenConfig(n=50, seed=4))
    S = lift_pairset(inst.pairs, rng.uniform(0.1, 2, 50))
    sp, t = sensitivities(S)
    assert t == pytest.approx(sp.sum())
    X = rng.normal(size=(10_000, 7))
    R = np.abs(X @ S.T)
    ratio = R / R.sum(axis=1, keepdims=True)
    assert np.all(ratio <= sp[None, :])
    # also over actual alignments
    for _ in range(200):
        a = Alignment.from_angle(rng.uniform(0, 2 * np.pi), rng.uniform(0, 10, 2))
        r = np.abs(S @ alignment_lift(a))
        assert np.all(r / r.sum() <= sp)


# ------------------------------------------------------------------ sampling


def test_sample_size_formula():
    t, eps, delta, c = 100.0, 0.1, 0.1, 1.0
    want = math.ceil(c * t / eps**2 * (D_VC * math.log(t) + math.log(1 / delta)))
    assert sample_size(t, eps, delta, c) == want
    assert sample_size(1.0, 0.5, 0.5, 1e-9) == 1
    for bad in [(100, 0, 0.1), (100, 1, 0.1), (100, 0.1, 0), (100, 0.1, 1.5)]:
        with pytest.raises(PointLineError):
            sample_size(*bad)
    with pytest.raises(PointLineError):
        sample_size(100, 0.1, 0.1, c=0)


def test_build_coreset_shape_and_weights(rng):
    inst = gen_instance(GenConfig(n=500, seed=5))
    sw = build_coreset(inst.pairs, 0.1, 0.1, size=100, rng=1)
    assert isinstance(sw, SparseWeights)
    assert sw.m == 100 and 0 < sw.nnz <= 100
    assert np.all(sw.values > 0)
    assert sw.dense().shape == (500,)
    assert np.count_nonzero(sw.dense()) == sw.nnz
    C = sw.apply(inst.pairs)
    assert len(C) == sw.nnz


def test_build_coreset_deterministic():
    inst = gen_instance(GenConfig(n=300, seed=6))
    a = build_coreset(inst.pairs, size=50, rng=3)
    b = build_coreset(inst.pairs, size=50, rng=3)
    np.testing.assert_array_equal(a.indices, b.indices)
    np.testing.assert_array_equal(a.values, b.values)


def test_zero_weights_never_sampled():
    inst = gen_instance(GenConfig(n=100, seed=6))
    w = np.ones(100)
    w[:50] = 0
    sw = build_coreset(WeightedPairSet(inst.pairs, w), size=400, rng=0)
    assert np.all(sw.indices >= 50)
    empty = build_coreset(WeightedPairSet(inst.pairs, np.zeros(100)), size=10, rng=0)
    assert empty.nnz == 0


def test_build_coreset_errors():
    inst = gen_instance(GenConfig(n=10, seed=6))
    with pytest.raises(PointLineError):
        build_coreset(inst.pairs, eps=1.2)
    with pytest.raises(PointLineError):
        build_coreset(inst.pairs, delta=0)
    with pytest.raises(PointLineError):
        build_coreset(inst.pairs, size=0)
    with pytest.raises(PointLineError):
        WeightedPairSet(inst.pairs, -np.ones(10))


def test_unbiased():
    inst = gen_instance(GenConfig(n=200, seed=8, k=0.1))
    rng = np.random.default_rng(9)
    w = rng.uniform(0.5, 2, 200)
    A = WeightedPairSet(inst.pairs, w)
    alignments = [Alignment.from_angle(rng.uniform(0, 2 * np.pi), rng.uniform(0, 10, 2)) for _ in range(5)]
    dists = np.array([np.abs(inst.pairs.residuals(a)) for a in alignments])  # (5, n)
    truth = dists @ w
    est = np.empty((1000, 5))
    for r in range(1000):
        sw = build_coreset(A, size=40, rng=rng)
        est[r] = dists[:, sw.indices] @ sw.values
    se = est.std(axis=0, ddof=1) / math.sqrt(len(est))
    assert np.all(np.abs(est.mean(axis=0) - truth) <= 3 * se)


def test_weight_total_unbiased():
    inst = gen_instance(GenConfig(n=100, seed=8))
    w = np.random.default_rng(0).uniform(0.5, 2, 100)
    A = WeightedPairSet(inst.pairs, w)
    tot = [build_coreset(A, size=30, rng=r).values.sum() for r in range(2000)]
    se = np.std(tot, ddof=1) / math.sqrt(len(tot))
    assert abs(np.mean(tot) - w.sum()) <= 3 * se


def test_oversampled_coreset_is_tight():
    inst = gen_instance(GenConfig(n=200, seed=2))
    sw = build_coreset(inst.pairs, size=200_000, rng=0)
    C = sw.apply(inst.pairs)
    a = Alignment.from_angle(1.0, (2, 3))
    full = WeightedPairSet(inst.pairs).cost(a)
    assert C.cost(a) == pytest.approx(full, rel=0.05)


# ---------------------------------------------------------------- streaming


def _stream(n, L, seed=0):
    inst = gen_instance(GenConfig(n=n, seed=seed))
    st_ = StreamState(eps=0.1, delta=0.1, n_est=n, leaf_size=L, seed=seed)
    return inst, stream_extend(st_, inst.pairs)


def test_stream_below_leaf_is_exact():
    inst, s = _stream(64, 64)
    C = stream_coreset(s)
    np.testing.assert_allclose(C.pairs.points, inst.pairs.points)
    np.testing.assert_allclose(C.weights, 1)
    inst, s = _stream(40, 64)
    np.testing.assert_allclose(stream_coreset(s).pairs.offsets, inst.pairs.offsets)


def test_stream_tree_arithmetic():
    L = 64
    inst, s = _stream(4 * L, L)
    assert len(s.buckets) <= 3
    assert s.peak_resident <= 3 * L
    assert s.resident() <= 3 * L
    assert s.n_seen == 4 * L
    # 4 leaves collapse into one bucket at level 2
    assert sorted(s.buckets) == [2]


def test_stream_deterministic():
    _, a = _stream(500, 64, seed=3)
    _, b = _stream(500, 64, seed=3)
    ca, cb = stream_coreset(a), stream_coreset(b)
    np.testing.assert_array_equal(ca.pairs.points, cb.pairs.points)
    np.testing.assert_array_equal(ca.weights, cb.weights)


def test_stream_insert_forms():
    s = StreamState(leaf_size=4)
    stream_insert(s, ((0, 1), Line((0, 1), 0)))
    stream_insert(s, ((0, 1), ((0, 1), 2.0), 3.0))
    with pytest.raises(PointLineError):
        stream_insert(s, ((0, 1), Line((0, 1), 0), -1))
    C = stream_coreset(s)
    np.testing.assert_allclose(C.weights, [1, 3])
    with pytest.raises(PointLineError):
        stream_coreset(StreamState(leaf_size=4))
    with pytest.raises(PointLineError):
        StreamState(leaf_size=1)


def test_stream_default_parameters():
    s = StreamState(eps=0.1, delta=0.1, n_est=10**5)
    assert s.levels_est == 17
    assert s.eps_level == pytest.approx(0.1 / 34)
    assert s.delta_level == pytest.approx(0.1 / 17)
    assert s.leaf_size >= 2 and s.reduce_size == s.leaf_size // 2


def test_stream_cost_close(rng):
    inst, s = _stream(4000, 500, seed=1)
    C = stream_coreset(s)
    full = WeightedPairSet(inst.pairs)
    for _ in range(5):
        a = Alignment.from_angle(rng.uniform(0, 2 * np.pi), rng.uniform(0, 10, 2))
        assert C.cost(a) == pytest.approx(full.cost(a), rel=0.25)


def test_merge_coresets():
    _, a = _stream(100, 32, seed=1)
    _, b = _stream(100, 32, seed=2)
    m = merge_coresets([stream_coreset(a), stream_coreset(b)])
    assert len(m) == len(stream_coreset(a)) + len(stream_coreset(b))


def test_unit_constant_example():
    # with c = 1 the draw count dwarfs n, so the coreset is dense and very tight
    inst = gen_instance(GenConfig(n=10_000, seed=0))
    W = WeightedPairSet(inst.pairs)
    sw = build_coreset(W, 0.1, 0.1, c=1.0, rng=0)
    assert sw.m > 10**7
    C = sw.apply(W)
    rng = np.random.default_rng(1)
    hits = 0
    for _ in range(100):
        a = Alignment.from_angle(rng.uniform(0, 2 * np.pi), rng.uniform(0, 10, 2))
        hits += abs(C.cost(a) - W.cost(a)) <= 0.1 * W.cost(a)
    assert hits >= 90

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnarspec.graph import (
    Network,
    NetworkContext,
    augment_mask,
    compute_stages,
    edge_stage_weights,
    equal_stage_weights,
    induced_adjacency,
    random_network,
)


def floyd_warshall(A):
    d = A.shape[0]
    D = np.where(A > 0, 1.0, np.inf)
    np.fill_diagonal(D, 0)
    for k in range(d):
        D = np.minimum(D, D[:, [k]] + D[[k], :])
    return D


def test_triangle_is_one_stage():
    st_ = compute_stages(Network(3, [(0, 1), (1, 2), (0, 2)]))
    assert st_.r_max == 1
    np.testing.assert_array_equal(st_.stage(1), np.ones((3, 3)) - np.eye(3))


def test_path_second_stage(path3):
    st_ = compute_stages(path3)
    assert st_.distances[0, 2] == 2
    expected = np.zeros((3, 3), dtype=int)
    expected[0, 2] = expected[2, 0] = 1
    np.testing.assert_array_equal(st_.stage(2), expected)


def test_distances_match_floyd_warshall():
    net = random_network(10, 3, seed=7)
    np.testing.assert_array_equal(compute_stages(net).distances, floyd_warshall(net.adjacency))


def test_disconnected_pairs_have_no_stage():
    net = Network(4, [(0, 1), (2, 3)])
    st_ = compute_stages(net)
    assert np.isinf(st_.distances[0, 2])
    assert st_.r_max == 1
    assert not net.is_connected()


def test_first_stage_is_adjacency(ctx10):
    np.testing.assert_array_equal(ctx10.stages.stage(1), ctx10.network.adjacency)


def test_stage_beyond_diameter_is_zero(path3):
    assert not compute_stages(path3).stage(5).any()


def test_equal_weights_path(path3):
    W = equal_stage_weights(compute_stages(path3))
    assert W[1, 0] == W[1, 2] == 0.5
    assert W[0, 1] == 1.0 and W[0, 2] == 1.0


def test_equal_weights_complete_graph():
    W = equal_stage_weights(compute_stages(Network(3, [(0, 1), (1, 2), (0, 2)])))
    np.testing.assert_array_equal(W, (np.ones((3, 3)) - np.eye(3)) / 2)


def test_equal_weights_star(star5):
    W = equal_stage_weights(compute_stages(star5))
    assert np.all(W[0, 1:] == 0.25)
    assert np.all(W[1:, 0] == 1.0)
    assert W[1, 2] == pytest.approx(1 / 3)


def test_edge_weights_renormalized(star5):
    net = Network(5, star5.edges, {(0, 1): 1.0, (0, 2): 1.0, (0, 3): 2.0, (0, 4): 4.0})
    ctx = NetworkContext.from_network(net, weights="edge")
    np.testing.assert_allclose(ctx.weights[0, 1:], [0.125, 0.125, 0.25, 0.5])
    np.testing.assert_allclose(ctx.weights[1, 2:], 1 / 3)
    W = edge_stage_weights(ctx.stages, net.weight_matrix())
    np.testing.assert_array_equal(W, ctx.weights)


def test_induced_adjacency_first_two_stages(ctx10):
    st_ = ctx10.stages
    np.testing.assert_array_equal(induced_adjacency(st_, 1), st_.stage(1) + st_.stage(2))


def test_induced_adjacency_saturates(path3):
    np.testing.assert_array_equal(induced_adjacency(compute_stages(path3), 1), np.ones((3, 3)) - np.eye(3))


def test_augment_mask_tiling(path3):
    A = compute_stages(path3).stage(1)
    At = augment_mask(A)
    for bi in range(2):
        for bj in range(2):
            np.testing.assert_array_equal(At[3 * bi : 3 * bi + 3, 3 * bj : 3 * bj + 3], A)
    assert not augment_mask(np.zeros((2, 2))).any()


def test_network_validation():
    with pytest.raises(ValueError):
        Network(3, [(0, 0)])
    with pytest.raises(ValueError):
        Network(3, [(0, 3)])
    with pytest.raises(ValueError):
        Network(3, [(0, 1)], {(0, 1): -1.0})
    assert Network(3, [(1, 0), (0, 1)]).edges == ((0, 1),)


def test_shipped_networks(ctx5, ctx10):
    assert ctx5.d == 5 and ctx5.r_max == 3 and ctx5.network.is_connected()
    assert ctx10.d == 10 and ctx10.r_max >= 5 and ctx10.network.is_connected()


networks = st.builds(
    random_network,
    d=st.integers(1, 12),
    extra_edges=st.integers(0, 6),
    seed=st.integers(0, 2**31),
)


@pytest.mark.property
@settings(max_examples=60, deadline=None)
@given(networks)
def test_stage_properties(net):
    stages = compute_stages(net)
    A = stages.stage_adjacency
    for r, Ar in enumerate(A):
        assert np.array_equal(Ar, Ar.T) and not np.diag(Ar).any()
        for As in A[r + 1 :]:
            assert not (Ar * As).any()
    reach = sum(A, np.eye(net.d, dtype=int))
    np.testing.assert_array_equal(reach, np.isfinite(stages.distances).astype(int))
    W = equal_stage_weights(stages)
    for Ar in A:
        rows = Ar.sum(axis=1) > 0
        np.testing.assert_allclose((W * Ar).sum(axis=1)[rows], 1.0, rtol=0, atol=1e-15)
    for r in range(1, stages.r_max + 1):
        assert np.all(induced_adjacency(stages, r) <= induced_adjacency(stages, r + 1))
        assert induced_adjacency(stages, r).max(initial=0) <= 1

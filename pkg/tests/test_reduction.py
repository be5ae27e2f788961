import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import coth, csqrt, grid, rel
from singstar.errors import ConfigError
from singstar.graph import group_structure, star
from singstar.reduction import (
    ReductionInput,
    blank_edge,
    closed_loop,
    direct_propagation_set,
    forward_weyl,
    grouped_propagation_set,
    grouped_sigma_systems,
    kirchhoff_complete,
    propagate_known_edges,
    propagation_top,
    psi_on_edge_s,
    reduce,
    reduce_point,
    sigma_window,
    solve_sigma,
)
from singstar.weyl import solve_psi, vertex_jets, weyl_matrix_mj


def forward_psi_jets(graph, s, k, lam):
    jets = vertex_jets(graph, lam)
    psi = solve_psi(graph, s, k, lam, jets)
    return {j: psi.coeffs[j] @ jets[j] for j in jets}


def test_zero_row_gives_S(star_322):
    inp = ReductionInput(star_322, 1, forward_weyl(star_322, 1))
    jets = vertex_jets(star_322, 1j)
    psi = psi_on_edge_s(inp, 1, np.eye(3), jets[1])
    assert np.allclose(psi, jets[1][0])


def test_two_edge_closed_forms():
    l1, l2 = 0.7, 1.1
    g = star([2, 2], [l1, l2], w=2)
    L = l1 + l2
    lam = 3 + 1j
    r = csqrt(lam)
    tr = reduce_point(ReductionInput(blank_edge(g, 2), 1, forward_weyl(g, 1)), lam)
    psi1 = tr.psi_s[1]
    assert np.isclose(psi1[0], np.sinh(r * (L - l1)) / np.sinh(r * L))
    assert np.isclose(psi1[1], -r * np.cosh(r * (L - l1)) / np.sinh(r * L))
    # continuity and Kirchhoff with identity forms
    psi2 = tr.psi_w[1]
    assert np.isclose(psi2[0], psi1[0])
    assert np.isclose(psi2[1], -psi1[1])
    a = 1 / np.sinh(r * L)
    assert np.allclose(psi2, [a * np.sinh(r * l2), a * r * np.cosh(r * l2)])
    assert np.isclose(tr.m[0, 1], r * coth(r * l2))


@pytest.mark.parametrize("fixture", ["star_322", "star_332", "star_222"])
def test_stagewise_oracle(fixture, request):
    g = request.getfixturevalue(fixture)
    w = g.groups.w
    for s in g.groups.admissible_s():
        inp = ReductionInput(blank_edge(g, w), s, forward_weyl(g, s))
        for lam in grid(3):
            tr = reduce_point(inp, lam)
            for k in range(1, inp.kmax + 1):
                ref = forward_psi_jets(g, s, k, lam)
                assert rel(tr.psi_s[k], ref[s]) < 1e-10
                for j, part in tr.propagated[k].items():
                    assert len(part) == propagation_top(g.orders[j - 1], k) + 1
                    assert rel(part, ref[j][: len(part)]) < 1e-8
                for j, full in tr.full[k].items():
                    assert rel(full, ref[j]) < 1e-8
                assert rel(tr.psi_w[k], ref[w]) < 1e-8


def test_window_system_size_322(star_322):
    assert len(sigma_window(2, 2)) == 1
    assert propagation_top(2, 2) == 0
    assert len(sigma_window(2, 1)) == 1


def test_single_unknown_window():
    g = star([2, 2, 2], [1.0, 0.8, 0.6], q=[((0.3,),), ((0.1, 0.2),), ()], w=3)
    lam = 2 + 1j
    ref = forward_psi_jets(g, 1, 1, lam)
    inp = ReductionInput(g, 1, forward_weyl(g, 1))
    jets = vertex_jets(g, lam)
    full = solve_sigma(inp, 1, 2, ref[2][:1], jets[2])
    assert np.allclose(full, ref[2][0] / jets[2][1][0] * jets[2][1])


def test_propagation_and_kirchhoff_directly(star_332):
    g = star_332
    lam = -4 + 1j
    inp = ReductionInput(g, 2, forward_weyl(g, 2))
    ref = forward_psi_jets(g, 2, 1, lam)
    table = propagate_known_edges(inp, 1, ref[2])
    assert set(table) == {1, 3}
    known = {1: ref[1], 2: ref[2]}
    got = kirchhoff_complete(inp, 1, table[3], known)
    assert rel(got, ref[3]) < 1e-10


def test_edge_w_potential_is_never_used(star_322):
    lams = grid(4)
    weyl = {1: forward_weyl(star_322, 1)}
    a = reduce(star_322, weyl, lams)
    b = reduce(blank_edge(star_322, 3), weyl, lams)
    other = star_322.replace_edge(3, star_322.edge(3).with_potential([(9.0, -3.0)]))
    c = reduce(other, weyl, lams)
    for x, y, z in zip(a.m[1], b.m[1], c.m[1]):
        assert np.array_equal(x, y) and np.array_equal(x, z)


@pytest.mark.parametrize("fixture", ["star_322", "star_332", "star_222"])
def test_closed_loop(fixture, request):
    rep = closed_loop(request.getfixturevalue(fixture), grid(8))
    assert rep.passed, rep
    assert rep.max_dev < 1e-10


def test_s_independence(star_332):
    g = star_332
    res = reduce(blank_edge(g, 3), {s: forward_weyl(g, s) for s in (1, 2)}, grid(6))
    assert res.consistency < 1e-10
    assert not any(res.skipped.values())


def test_omitted_edge_in_first_group(star_332):
    g = star_332.with_omitted(2)
    assert g.groups.admissible_s() == [1]
    rep = closed_loop(g, grid(4))
    assert rep.passed and set(rep.per_k) == {1, 2}


def test_four_edges_general_forms():
    gamma = [
        [[1, 0, 0], [0.3, 2, 0], [0.1, -0.2, 1.5]],
        [[1, 0, 0], [0.1, 1, 0], [0.2, 0.3, 0.7]],
        [[2, 0], [0.4, 1.2]],
        [[1, 0], [0, 0.9]],
    ]
    from helpers import NU3
    g = star([3, 3, 2, 2], [1.0, 0.9, 1.2, 0.7], nu=[NU3, NU3, (-0.5,), (0,)],
             q=[((0.2, 0.1, 0.3), (0.4, -0.2)), ((0.6,), (0.1, 0.2)), ((0.5, -0.4, 0.1),), ((1.1, 0.3),)],
             w=4, gamma=gamma)
    rep = closed_loop(g, grid(4))
    assert rep.passed and rep.consistency < 1e-10


def test_skipped_point_is_isolated(two_edge):
    lams = grid(5) + [complex(-(np.pi / 2) ** 2, 0)]
    res = reduce(blank_edge(two_edge, 2), {1: forward_weyl(two_edge, 1)}, lams)
    assert list(res.skipped[1]) == [5]
    assert "NearEigenvalue" in res.skipped[1][5] or "unavailable" in res.skipped[1][5]
    for lam, m in zip(lams[:5], res.m[1][:5]):
        assert rel(m, weyl_matrix_mj(two_edge, 2, lam).m) < 1e-10


def test_vanishing_denominator_is_skipped(two_edge):
    # psi_s1w(l_w) = 0 exactly at the Dirichlet eigenvalues of edge w
    lam = complex(-np.pi ** 2, 0)
    res = reduce(blank_edge(two_edge, 2), {1: forward_weyl(two_edge, 1)}, [lam, 1j])
    assert 0 in res.skipped[1] and res.m[1][1] is not None


def test_empty_grid(two_edge):
    res = reduce(two_edge, {1: forward_weyl(two_edge, 1)}, [])
    assert res.m[1] == [] and res.skipped[1] == {}


def test_corrupted_input_fails_and_localizes(star_332):
    g = star_332.with_omitted(2)
    clean = forward_weyl(g, 1)

    def corrupt(lam):
        M = np.array(clean(lam))
        M[1, 2] *= 1.01
        return M

    rep = closed_loop(g, grid(4), weyl_by_s={1: corrupt})
    assert not rep.passed
    assert rep.worst_k == 2
    assert rep.per_k[1] < 1e-10


def test_inadmissible_s(star_322):
    with pytest.raises(ConfigError):
        ReductionInput(star_322, 2, forward_weyl(star_322, 2))
    with pytest.raises(ConfigError):
        ReductionInput(star([2, 2]), 1, forward_weyl(star([2, 2]), 1))


def test_parallel_matches_serial(star_322):
    weyl = {1: forward_weyl(star_322, 1)}
    a = reduce(star_322, weyl, grid(6))
    b = reduce(star_322, weyl, grid(6), jobs=3)
    for x, y in zip(a.m[1], b.m[1]):
        assert np.array_equal(x, y)


def admissible_cases(orders):
    g = group_structure(orders)
    for i in range(1, g.m + 1):
        w = g.bounds[i]
        try:
            gw = group_structure(orders, w)
            yield w, gw.admissible_s()
        except ConfigError:
            continue


orders_st = st.lists(st.integers(2, 5), min_size=2, max_size=5).map(lambda o: sorted(o, reverse=True))


@settings(max_examples=300, deadline=None)
@given(orders_st)
def test_range_arithmetic(orders):
    for w, s_list in admissible_cases(orders):
        assert direct_propagation_set(orders, w) == grouped_propagation_set(orders, w)
        n_w = orders[w - 1]
        for s in s_list:
            assert s != w and orders[s - 1] == orders[0]
            for k, j, rows, mus in grouped_sigma_systems(orders, w, s):
                assert 1 <= k <= n_w - 1
                assert len(rows) == len(mus) == min(k, orders[j - 1] - 1)
                assert mus == list(sigma_window(orders[j - 1], k))
                assert rows[-1] == propagation_top(orders[j - 1], k)

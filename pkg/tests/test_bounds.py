import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cachedof.bounds import (
    BoundsError,
    Inequality,
    baseline_dof,
    best_structured_lambda,
    closed_form_lower,
    closed_form_upper,
    contained_fraction,
    counted_ratio,
    enumerate_rt_pairs,
    gap,
    lp_upper,
    memory_sharing_inequalities,
    mu_grid,
    region_inequalities,
    remove_redundant,
    solve_symmetric_dof,
    tstar_candidates,
)
from cachedof.channels import draw_channels
from cachedof.placement import memory_share, place

F = Fraction


# ------------------------------------------------------------- (R, T) pairs

def test_fig6_pairs(fig6_topology):
    cs = draw_channels(fig6_topology, 1, 0)
    pairs = enumerate_rt_pairs(fig6_topology, cs, 2)
    as_sets = {(frozenset(p.R), frozenset(p.T)) for p in pairs}
    assert as_sets == {
        (frozenset({"1"}), frozenset({"a"})),
        (frozenset({"1"}), frozenset({"b"})),
        (frozenset({"2"}), frozenset({"b"})),
        (frozenset({"2"}), frozenset({"c"})),
        (frozenset({"1", "2"}), frozenset({"a", "b"})),
        (frozenset({"1", "2"}), frozenset({"b", "c"})),
        (frozenset({"1", "2"}), frozenset({"a", "c"})),
    }
    # disconnected singleton is excluded by the rank test
    assert (frozenset({"1"}), frozenset({"c"})) not in as_sets


def test_fig6_rbar(fig6_topology):
    cs = draw_channels(fig6_topology, 1, 0)
    pairs = {(p.R, p.T): p.Rbar for p in enumerate_rt_pairs(fig6_topology, cs, 2)}
    assert pairs[(("1",), ("b",))] == ("2",)
    assert pairs[(("1",), ("a",))] == ()
    assert pairs[(("1", "2"), ("a", "c"))] == ()


def test_torus_singleton_pairs(torus4):
    cs = draw_channels(torus4, 1, 0)
    pairs = enumerate_rt_pairs(torus4, cs, 1)
    assert len(pairs) == 4 * len(torus4.users)
    for p in pairs:
        assert p.T[0] in torus4.neighbors_of_user(p.R[0])


# ------------------------------------------------------------------ region

def fig6_region(fig6_topology, fig6_placement):
    cs = draw_channels(fig6_topology, 1, 0)
    pairs = enumerate_rt_pairs(fig6_topology, cs, 2)
    return region_inequalities(fig6_placement, pairs)


def test_fig6_inequality_pins(fig6_topology, fig6_placement):
    ineqs = fig6_region(fig6_topology, fig6_placement)
    as_maps = [(dict(i.coeffs), i.rhs) for i in ineqs]
    assert ({"d_{1,A1}": 1, "d_{1,A2}": 1, "d_{2,A2}": 1}, 1) in as_maps
    assert ({"d_{1,A1}": 1, "d_{1,A2}": 1}, 1) in as_maps
    everything = {"d_{1,A1}": 1, "d_{1,A2}": 1, "d_{2,A1}": 1, "d_{2,A2}": 1}
    assert (everything, 2) in as_maps


def test_fig6_reduction(fig6_topology, fig6_placement):
    reduced = remove_redundant(fig6_region(fig6_topology, fig6_placement))
    normalized = {i.normalized() for i in reduced}
    want = {
        Inequality.from_map({"d_{1,A1}": 1, "d_{1,A2}": 1, "d_{2,A2}": 1}, 1),
        Inequality.from_map({"d_{2,A1}": 1, "d_{2,A2}": 1, "d_{1,A2}": 1}, 1),
    }
    assert normalized == {i.normalized() for i in want}


def test_duplicate_kept_once():
    a = Inequality.from_map({"x": 1, "y": 1}, 1)
    assert remove_redundant([a, a]) == [a]


def test_implied_sum_dropped():
    a = Inequality.from_map({"x": 1}, 1)
    b = Inequality.from_map({"y": 1}, 1)
    summed = Inequality.from_map({"x": 1, "y": 1}, 2)
    assert remove_redundant([a, b, summed]) == [a, b]


def test_reduction_preserves_polyhedron(fig6_topology, fig6_placement):
    full = fig6_region(fig6_topology, fig6_placement)
    reduced = remove_redundant(full)
    variables = sorted({v for i in full for v, _ in i.coeffs})

    def member(ineqs, point):
        return all(
            sum(c * point[v] for v, c in i.coeffs) <= i.rhs for i in ineqs
        )

    # grid sample of the bounding box [0, 1]^4 at quarter steps
    steps = [F(k, 4) for k in range(5)]
    for values in itertools.product(steps, repeat=len(variables)):
        point = dict(zip(variables, values))
        assert member(full, point) == member(reduced, point)


def test_inequality_validation():
    with pytest.raises(BoundsError):
        Inequality.from_map({"x": 1}, 0)
    with pytest.raises(BoundsError):
        Inequality.from_map({"x": -1}, 1)


# -------------------------------------------------- structured candidates

def test_tstar_candidates(torus4):
    cands = tstar_candidates(torus4)
    assert len(cands) == 15
    sizes = sorted(len(T) for T in cands)
    assert sizes == [4] * 4 + [8] * 6 + [12] * 4 + [16]
    # every candidate reaches every user
    for T in cands:
        for u in torus4.users:
            assert torus4.neighbors_of_user(u) & T


def test_counted_ratio_table(torus4, torus4_channels):
    ratios = {}
    for T in tstar_candidates(torus4):
        ratios.setdefault(len(T), counted_ratio(torus4, torus4_channels, T))
    assert ratios == {4: F(3), 8: F(1), 12: F(1, 3), 16: F(0)}


def test_lemma1_bruteforce_matches_table(torus4, torus4_channels):
    for mode, lam_expect in (("quarter", F(3, 4)), ("half", F(1, 6))):
        p = place(torus4, mode)
        T_cnt, lam_cnt = best_structured_lambda(torus4, torus4_channels, p, count_ratios=True)
        T_tab, lam_tab = best_structured_lambda(torus4, torus4_channels, p, count_ratios=False)
        assert lam_cnt == lam_tab == lam_expect
        assert T_cnt in tstar_candidates(torus4)


def test_contained_fraction(torus4):
    quarter = place(torus4, "quarter")
    half = place(torus4, "half")
    b1 = tstar_candidates(torus4)[0]
    assert contained_fraction(quarter, b1) == F(1, 4)
    assert contained_fraction(half, b1) == 0
    assert contained_fraction(half, frozenset(torus4.bss)) == 1


# ------------------------------------------------------- memory-sharing LP

def ineq_map(ineqs):
    return {tuple(sorted(dict(i.coeffs).items())): i.rhs for i in ineqs}


def test_low_branch_coefficient_pins():
    rows = ineq_map(memory_sharing_inequalities(F(1, 3)))
    assert (("d_half", F(1)), ("d_quarter", F(7, 4))) in rows          # single class
    assert (("d_half", F(7, 6)), ("d_quarter", F(3, 2))) in rows       # class pair
    assert (("d_half", F(7, 6)), ("d_quarter", F(5, 4))) in rows       # complement
    assert (("d_half", F(1)), ("d_quarter", F(1))) in rows             # everything


def test_high_branch_coefficient_pins():
    rows = ineq_map(memory_sharing_inequalities(F(3, 4)))
    assert (("d_full", F(1)), ("d_half", F(7, 6))) in rows
    assert (("d_full", F(1)), ("d_half", F(1))) in rows


def substitution_oracle(mu):
    """Fold the coupling into one scalar and minimize row by row."""
    plan = memory_share(mu)
    weights = {"d_quarter": None, "d_half": None, "d_full": None}
    low, high = plan.low_mode, plan.high_mode
    low_var = {"quarter": "d_quarter", "half": "d_half"}[low]
    high_var = {"half": "d_half", "full": "d_full"}[high]
    best = None
    for ineq in memory_sharing_inequalities(mu):
        coeffs = dict(ineq.coeffs)
        denom = plan.gamma * coeffs[low_var] + (1 - plan.gamma) * coeffs[high_var]
        bound = ineq.rhs / denom
        best = bound if best is None else min(best, bound)
    return best


@pytest.mark.parametrize("mu", ["1/4", "3/10", "2/5", "1/2", "3/4", "1"])
def test_lp_matches_substitution_oracle(mu):
    mu = F(mu)
    plan = memory_share(mu)
    lp = solve_symmetric_dof(memory_sharing_inequalities(mu), plan)
    assert lp == substitution_oracle(mu)


@pytest.mark.parametrize(
    "mu,d", [("1/4", F(4, 7)), ("2/5", F(10, 13)), ("1", F(1)), ("1/2", F(6, 7))]
)
def test_lp_values(mu, d):
    assert lp_upper(F(mu)).d == d


def test_lp_equals_closed_form_on_grid():
    for mu in mu_grid(F(1, 120)):
        assert lp_upper(mu).inv_d == closed_form_upper(mu).inv_d


# ----------------------------------------------------------- closed forms

@pytest.mark.parametrize("mu,inv", [("1/4", F(2)), ("1/2", F(7, 6)), ("1", F(1))])
def test_lower_corners(mu, inv):
    assert closed_form_lower(F(mu)).inv_d == inv


@pytest.mark.parametrize(
    "mu,d", [("1/4", F(4, 7)), ("1/2", F(6, 7)), ("3/4", F(12, 13))]
)
def test_upper_values(mu, d):
    point = closed_form_upper(F(mu))
    assert point.d == d
    if mu == "3/4":
        assert point.inv_d == F(4, 3) - F(1, 4) == F(13, 12)


@pytest.mark.parametrize("mu,inv", [("1/4", F(4)), ("1/2", F(2)), ("1", F(1))])
def test_baseline_values(mu, inv):
    assert baseline_dof(F(mu)).inv_d == inv


@pytest.mark.parametrize("mu,g", [("2/5", F(4, 39)), ("1/2", F(0)), ("1/4", F(1, 14))])
def test_gap_values(mu, g):
    assert gap(F(mu)) == g


def test_mu_out_of_range():
    for fn in (closed_form_lower, closed_form_upper, baseline_dof, lp_upper):
        with pytest.raises(BoundsError):
            fn(F(1, 8))
        with pytest.raises(BoundsError):
            fn(F(9, 8))


def test_curve_invariants_on_grid():
    grid = mu_grid(F(1, 120))
    assert len(grid) == 91
    max_gap = F(0)
    argmax = []
    for mu in grid:
        lower = closed_form_lower(mu)
        upper = closed_form_upper(mu)
        base = baseline_dof(mu)
        assert upper.d >= lower.d
        assert lower.inv_d <= base.inv_d
        if mu >= F(1, 2):
            assert upper.inv_d == lower.inv_d
        g = gap(mu)
        assert g <= F(4, 39)
        if g > max_gap:
            max_gap, argmax = g, [mu]
        elif g == max_gap:
            argmax.append(mu)
    assert max_gap == F(4, 39)
    assert argmax == [F(2, 5)]
    assert closed_form_lower(F(1)).inv_d == baseline_dof(F(1)).inv_d


def test_lower_reciprocal_convex():
    grid = mu_grid(F(1, 60))
    invs = [closed_form_lower(mu).inv_d for mu in grid]
    for a, b, c in zip(invs, invs[1:], invs[2:]):
        assert b <= (a + c) / 2  # midpoint convexity on the uniform grid


@settings(max_examples=30, deadline=None)
@given(st.fractions(min_value=F(1, 4), max_value=F(1, 1)))
def test_lp_closed_form_property(mu):
    assert lp_upper(mu).inv_d == closed_form_upper(mu).inv_d

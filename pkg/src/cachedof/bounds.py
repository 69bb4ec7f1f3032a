"""Converse machinery: genie-aided DoF-region outer bounds, the structured
transmitter-set candidates, the memory-sharing LP, and the closed-form
achievable/upper/baseline curves.

Everything here is exact rational arithmetic; floating point enters only
through the full-rank test used to admit (R, T) pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from . import simplex
from .channels import ChannelSet, submatrix
from .placement import (
    FULL,
    HALF,
    MixturePlan,
    Placement,
    QUARTER,
    group_token,
    groups_within,
    memory_share,
)
from .topology import GRID, Topology, bs_class, node_key, user_class
from .verify import DofPoint, numeric_rank

LOWER_SOURCE = "achievable-closed-form"
UPPER_SOURCE = "upper-closed-form"
UPPER_LP_SOURCE = "upper-lp"
BASELINE_SOURCE = "baseline"

# |Rbar|/|R| for structured transmitter sets of size k/4 of all BSs
RBAR_RATIO = {1: Fraction(3), 2: Fraction(1), 3: Fraction(1, 3), 4: Fraction(0)}


class BoundsError(ValueError):
    pass


@dataclass(frozen=True)
class RtPair:
    """Equal-size user/BS sets with full-rank cross channel, plus the
    bystander users Rbar connected to T."""

    R: tuple
    T: tuple
    Rbar: tuple


@dataclass(frozen=True)
class Inequality:
    """Nonnegative-coefficient constraint sum(coeffs * d) <= rhs."""

    coeffs: tuple  # sorted ((variable, Fraction), ...)
    rhs: Fraction

    def __post_init__(self):
        if self.rhs <= 0:
            raise BoundsError("inequality needs a positive right-hand side")
        if any(c < 0 for _, c in self.coeffs):
            raise BoundsError("inequality coefficients must be nonnegative")

    @staticmethod
    def from_map(coeffs: dict, rhs) -> "Inequality":
        items = tuple(sorted((v, Fraction(c)) for v, c in coeffs.items() if c != 0))
        return Inequality(items, Fraction(rhs))

    def coeff_map(self) -> dict:
        return dict(self.coeffs)

    def normalized(self) -> "Inequality":
        """Scale to rhs 1 so equal half-spaces compare equal."""
        return Inequality(tuple((v, c / self.rhs) for v, c in self.coeffs), Fraction(1))

    def to_document(self) -> dict:
        return {"coeffs": {v: str(c) for v, c in self.coeffs}, "rhs": str(self.rhs)}


def enumerate_rt_pairs(t: Topology, cs: ChannelSet, max_size: int) -> list:
    """All (R, T) pairs with |R| = |T| <= max_size passing the rank test."""
    if max_size < 1:
        raise BoundsError("max_size must be at least 1")
    users = sorted(t.users, key=node_key)
    bss = sorted(t.bss, key=node_key)
    pairs = []
    for size in range(1, max_size + 1):
        for R in itertools.combinations(users, size):
            for T in itertools.combinations(bss, size):
                H = submatrix(cs, list(R), list(T), 0)
                if numeric_rank(H) != size:
                    continue
                connected = set()
                for b in T:
                    connected |= t.users_of_bs(b)
                rbar = tuple(sorted(connected - set(R), key=node_key))
                pairs.append(RtPair(R, T, rbar))
    return pairs


def region_inequalities(p: Placement, pairs) -> list:
    """One genie-aided inequality per (R, T) pair.

    Users in R are charged for all their subfile streams; bystanders in Rbar
    only for subfiles whose cache group lies entirely inside T.
    """
    out = []
    for pair in pairs:
        coeffs = {}
        for u in pair.R:
            for grp in p.groups:
                coeffs[group_token(u, grp.label)] = Fraction(1)
        inside = groups_within(p, pair.T)
        for u in pair.Rbar:
            for grp in inside:
                coeffs[group_token(u, grp.label)] = Fraction(1)
        out.append(Inequality.from_map(coeffs, len(pair.R)))
    return out


def _implied_by(target: Inequality, others) -> bool:
    """Exact LP test: is ``target`` implied by ``others`` over x >= 0?"""
    variables = sorted({v for ineq in [target, *others] for v, _ in ineq.coeffs})
    index = {v: k for k, v in enumerate(variables)}
    objective = [Fraction(0)] * len(variables)
    for v, c in target.coeffs:
        objective[index[v]] = c
    rows = []
    rhs = []
    for ineq in others:
        row = [Fraction(0)] * len(variables)
        for v, c in ineq.coeffs:
            row[index[v]] = c
        rows.append(row)
        rhs.append(ineq.rhs)
    try:
        value, _ = simplex.maximize(objective, rows, rhs)
    except simplex.Unbounded:
        return False
    return value <= target.rhs


def remove_redundant(ineqs) -> list:
    """Minimal subset cutting the same polyhedron from the nonnegative orthant."""
    kept = list(ineqs)
    i = 0
    while i < len(kept):
        candidate = kept[i]
        rest = kept[:i] + kept[i + 1:]
        if rest and _implied_by(candidate, rest):
            kept.pop(i)
        else:
            i += 1
    return kept


# --------------------------------------------------------------------------
# Structured transmitter sets (grid placements)
# --------------------------------------------------------------------------

def bs_class_partition(t: Topology) -> dict:
    if t.kind != GRID:
        raise BoundsError("BS classes exist on grid topologies only")
    classes = {k: set() for k in (1, 2, 3, 4)}
    for b in t.bss:
        classes[bs_class(b)].add(b)
    return {k: frozenset(v) for k, v in classes.items()}


def tstar_candidates(t: Topology) -> list:
    """The 15 structured candidates: singles, pairwise unions, complements, all."""
    classes = bs_class_partition(t)
    singles = [classes[k] for k in (1, 2, 3, 4)]
    pairs = [classes[a] | classes[b] for a, b in itertools.combinations((1, 2, 3, 4), 2)]
    complements = [frozenset(t.bss) - classes[k] for k in (1, 2, 3, 4)]
    return singles + pairs + complements + [frozenset(t.bss)]


def structured_class_sets() -> list:
    """Same candidates at the abstract class level (subsets of {1,2,3,4})."""
    singles = [frozenset({k}) for k in (1, 2, 3, 4)]
    pairs = [frozenset(p) for p in itertools.combinations((1, 2, 3, 4), 2)]
    complements = [frozenset({1, 2, 3, 4}) - frozenset({k}) for k in (1, 2, 3, 4)]
    return singles + pairs + complements + [frozenset({1, 2, 3, 4})]


def counted_ratio(t: Topology, cs: ChannelSet, T) -> Fraction:
    """|Rbar|/|R| for a structured T, with R realized from user classes.

    R is a union of user classes of matching size whose cross channel to T
    passes the rank test; every structured T is connected to all users, so
    Rbar is simply the remaining users.
    """
    classes = bs_class_partition(t)
    size_classes = round(4 * len(T) / len(t.bss))
    by_class = {r: sorted((u for u in t.users if user_class(u) == r), key=node_key)
                for r in (1, 2, 3, 4)}
    for combo in itertools.combinations((1, 2, 3, 4), size_classes):
        R = [u for r in combo for u in by_class[r]]
        H = submatrix(cs, R, sorted(T, key=node_key), 0)
        if numeric_rank(H) == len(R):
            return Fraction(len(t.users) - len(R), len(R))
    raise BoundsError(f"no full-rank user-class union found for T of size {len(T)}")


def contained_fraction(p: Placement, T) -> Fraction:
    """File mass of the cache groups lying entirely inside T."""
    return sum((g.fraction for g in groups_within(p, T)), Fraction(0))


def lambda_value(ratio: Fraction, frac: Fraction) -> Fraction:
    """Per-unit-DoF genie weight of a structured pair: ratio times mass inside."""
    return ratio * frac


def best_structured_lambda(t: Topology, cs: ChannelSet, p: Placement,
                           count_ratios: bool = False) -> tuple:
    """(T*, lambda*) over the 15 structured candidates.

    With ``count_ratios`` the |Rbar|/|R| factors are counted on the actual
    grid (brute-force cross-check); otherwise the closed ratio table is used.
    """
    best = None
    for T in tstar_candidates(t):
        size = round(4 * len(T) / len(t.bss))
        ratio = counted_ratio(t, cs, T) if count_ratios else RBAR_RATIO[size]
        lam = lambda_value(ratio, contained_fraction(p, T))
        if best is None or lam > best[1]:
            best = (T, lam)
    return best


# --------------------------------------------------------------------------
# Memory-sharing LP and closed forms
# --------------------------------------------------------------------------

_SPLIT_VAR = {QUARTER: "d_quarter", HALF: "d_half", FULL: "d_full"}

_MODE_GROUPS = {
    QUARTER: [(frozenset({k}), Fraction(1, 4)) for k in (1, 2, 3, 4)],
    HALF: [(frozenset(pair), Fraction(1, 6))
           for pair in ((1, 2), (3, 4), (1, 3), (2, 4), (1, 4), (2, 3))],
    FULL: [(frozenset({1, 2, 3, 4}), Fraction(1))],
}


def _mode_contained_fraction(mode: str, classes: frozenset) -> Fraction:
    return sum((frac for members, frac in _MODE_GROUPS[mode] if members <= classes),
               Fraction(0))


def memory_sharing_inequalities(mu) -> list:
    """The per-candidate constraints on the split DoF variables at cache size mu.

    For each structured candidate the coefficient of a split variable is
    1 + ratio * (file mass of that placement's groups inside the candidate).
    """
    plan = memory_share(mu)
    out = []
    for classes in structured_class_sets():
        ratio = RBAR_RATIO[len(classes)]
        coeffs = {}
        for mode in (plan.low_mode, plan.high_mode):
            coeffs[_SPLIT_VAR[mode]] = 1 + ratio * _mode_contained_fraction(mode, classes)
        out.append(Inequality.from_map(coeffs, 1))
    return out


def solve_symmetric_dof(ineqs, plan: MixturePlan) -> Fraction:
    """Exact max of d_low + d_high under the constraints and the split coupling.

    The coupling d_low (1 - gamma) = d_high gamma enters as an equality pair;
    the LP is solved with exact simplex pivoting.
    """
    variables = [_SPLIT_VAR[plan.low_mode], _SPLIT_VAR[plan.high_mode]]
    index = {v: k for k, v in enumerate(variables)}
    rows = []
    rhs = []
    for ineq in ineqs:
        row = [Fraction(0), Fraction(0)]
        for v, c in ineq.coeffs:
            if v not in index:
                raise BoundsError(f"inequality variable {v} outside the split pair")
            row[index[v]] = c
        rows.append(row)
        rhs.append(ineq.rhs)
    coupling = [1 - plan.gamma, -plan.gamma]
    rows.append(coupling)
    rhs.append(Fraction(0))
    rows.append([-c for c in coupling])
    rhs.append(Fraction(0))
    try:
        value, _ = simplex.maximize([Fraction(1), Fraction(1)], rows, rhs)
    except simplex.SimplexError as exc:
        raise BoundsError(f"malformed memory-sharing system: {exc}") from exc
    return value


def _check_mu(mu) -> Fraction:
    mu = Fraction(mu)
    if not Fraction(1, 4) <= mu <= 1:
        raise BoundsError(f"mu {mu} outside [1/4, 1]")
    return mu


def closed_form_lower(mu) -> DofPoint:
    """Achievable 1/d: piecewise linear through (1/4,2), (1/2,7/6), (1,1)."""
    mu = _check_mu(mu)
    if mu < Fraction(1, 2):
        inv = Fraction(17, 6) - Fraction(10, 3) * mu
    else:
        inv = Fraction(4, 3) - Fraction(1, 3) * mu
    return DofPoint(mu, inv, LOWER_SOURCE)


def closed_form_upper(mu) -> DofPoint:
    """Converse d: min of two genie bounds below mu = 1/2, linear above."""
    mu = _check_mu(mu)
    if mu < Fraction(1, 2):
        d = min(Fraction(2, 1) / (5 - 6 * mu), Fraction(6, 1) / (11 - 8 * mu))
        inv = 1 / d
    else:
        inv = Fraction(4, 3) - Fraction(1, 3) * mu
    return DofPoint(mu, inv, UPPER_SOURCE)


def baseline_dof(mu) -> DofPoint:
    """One-shot alternating-activation baseline: 1/d = 6 - 8 mu, then 3 - 2 mu."""
    mu = _check_mu(mu)
    if mu < Fraction(1, 2):
        inv = 6 - 8 * mu
    else:
        inv = 3 - 2 * mu
    return DofPoint(mu, inv, BASELINE_SOURCE)


def gap(mu) -> Fraction:
    """Additive DoF gap between the converse and the achievable scheme."""
    return closed_form_upper(mu).d - closed_form_lower(mu).d


def lp_upper(mu) -> DofPoint:
    """Converse d via the exact memory-sharing LP (independent of the closed form)."""
    mu = _check_mu(mu)
    plan = memory_share(mu)
    d = solve_symmetric_dof(memory_sharing_inequalities(mu), plan)
    return DofPoint(mu, 1 / d, UPPER_LP_SOURCE)


def mu_grid(step) -> list:
    """All mu = 1/4 + k*step inside [1/4, 1]."""
    step = Fraction(step)
    if step <= 0:
        raise BoundsError("grid step must be positive")
    out = []
    mu = Fraction(1, 4)
    while mu <= 1:
        out.append(mu)
        mu += step
    return out

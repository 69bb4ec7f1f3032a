"""Uncoded prefetching at the base stations: cache groups and memory sharing.

A cache group is the set of BSs holding one subfile class; the group *is*
the subfile's identity, no bits are ever materialized.  Three named modes
cover the corner cache sizes (quarter/half/full of the library); arbitrary
group lists are allowed for converse fixtures on general topologies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

from .topology import GRID, Topology, bs_class, node_key, node_token

QUARTER = "quarter"
HALF = "half"
FULL = "full"
CUSTOM = "custom"

MODE_MU = {QUARTER: Fraction(1, 4), HALF: Fraction(1, 2), FULL: Fraction(1)}

# half mode: pairwise unions of BS classes, in the conventional order
_HALF_UNIONS = [(1, 2), (3, 4), (1, 3), (2, 4), (1, 4), (2, 3)]


class PlacementError(ValueError):
    """Invalid cache size, mode, or group structure."""


@dataclass(frozen=True)
class CacheGroup:
    """One subfile class: its label, member BS set, and file fraction."""

    label: str
    members: frozenset
    fraction: Fraction

    def __post_init__(self):
        if not self.members:
            raise PlacementError(f"cache group {self.label} has no members")
        if not 0 < self.fraction <= 1:
            raise PlacementError(f"cache group {self.label} fraction out of (0,1]")


@dataclass(frozen=True)
class Placement:
    mu: Fraction
    mode: str
    groups: tuple

    def __post_init__(self):
        if self.mode not in (QUARTER, HALF, FULL, CUSTOM):
            raise PlacementError(f"unknown placement mode {self.mode!r}")
        labels = [g.label for g in self.groups]
        if len(set(labels)) != len(labels):
            raise PlacementError("duplicate cache group labels")
        if sum(g.fraction for g in self.groups) != 1:
            raise PlacementError("group fractions must partition the file")
        if self.mode in MODE_MU:
            if self.mu != MODE_MU[self.mode]:
                raise PlacementError(f"mode {self.mode} requires mu {MODE_MU[self.mode]}")
            expected = {QUARTER: 4, HALF: 6, FULL: 1}[self.mode]
            if len(self.groups) != expected:
                raise PlacementError(f"mode {self.mode} requires {expected} groups")
        for b in set().union(*(g.members for g in self.groups)):
            load = sum(g.fraction for g in self.groups if b in g.members)
            if load > self.mu:
                raise PlacementError(f"BS {b!r} load {load} exceeds mu {self.mu}")

    def group(self, label) -> CacheGroup:
        for g in self.groups:
            if g.label == label:
                return g
        raise PlacementError(f"no cache group labeled {label!r}")

    def bs_load(self, b) -> Fraction:
        return sum((g.fraction for g in self.groups if b in g.members), Fraction(0))


@dataclass(frozen=True)
class MixturePlan:
    """Memory-sharing split: weight ``gamma`` on the low corner placement."""

    mu: Fraction
    gamma: Fraction
    low_mode: str
    high_mode: str

    def __post_init__(self):
        if not 0 <= self.gamma <= 1:
            raise PlacementError("gamma must lie in [0,1]")
        mixed = self.gamma * MODE_MU[self.low_mode] + (1 - self.gamma) * MODE_MU[self.high_mode]
        if mixed != self.mu:
            raise PlacementError("gamma does not reproduce mu")


def place(t: Topology, mode: str) -> Placement:
    """Build the named placement on a grid topology via its BS classes."""
    if t.kind != GRID:
        raise PlacementError("named placements need a grid topology (BS classes)")
    classes = {k: frozenset(b for b in t.bss if bs_class(b) == k) for k in (1, 2, 3, 4)}
    if mode == QUARTER:
        groups = tuple(
            CacheGroup(f"A{k}", classes[k], Fraction(1, 4)) for k in (1, 2, 3, 4)
        )
    elif mode == HALF:
        groups = tuple(
            CacheGroup(f"A{k+1}", classes[a] | classes[b], Fraction(1, 6))
            for k, (a, b) in enumerate(_HALF_UNIONS)
        )
    elif mode == FULL:
        groups = (CacheGroup("A1", frozenset(t.bss), Fraction(1)),)
    else:
        raise PlacementError(f"unknown placement mode {mode!r}")
    return Placement(MODE_MU[mode], mode, groups)


def memory_share(mu) -> MixturePlan:
    """Split cache size ``mu`` between the neighboring corner placements.

    On [1/4,1/2) the file is shared between the quarter and half placements
    with weight gamma = 2 - 4 mu on the quarter side; on [1/2,1] between the
    half and full placements with gamma = 2 - 2 mu.
    """
    mu = Fraction(mu)
    if not Fraction(1, 4) <= mu <= 1:
        raise PlacementError(f"mu {mu} outside [1/4, 1]")
    if mu < Fraction(1, 2):
        return MixturePlan(mu, 2 - 4 * mu, QUARTER, HALF)
    return MixturePlan(mu, 2 - 2 * mu, HALF, FULL)


def groups_within(p: Placement, bs_set) -> list:
    """Cache groups whose members all lie inside ``bs_set``."""
    bs_set = frozenset(bs_set)
    return [g for g in p.groups if g.members <= bs_set]


def placement_to_document(p: Placement) -> dict:
    return {
        "mu": str(p.mu),
        "mode": p.mode,
        "groups": [
            {
                "label": g.label,
                "members": [list(b) if isinstance(b, tuple) else b
                            for b in sorted(g.members, key=node_key)],
                "fraction": str(g.fraction),
            }
            for g in p.groups
        ],
    }


def placement_from_document(document) -> Placement:
    if isinstance(document, str):
        document = json.loads(document)
    try:
        groups = tuple(
            CacheGroup(
                g["label"],
                frozenset(tuple(m) if isinstance(m, list) else m for m in g["members"]),
                Fraction(g["fraction"]),
            )
            for g in document["groups"]
        )
        return Placement(Fraction(document["mu"]), document["mode"], groups)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, PlacementError):
            raise
        raise PlacementError(f"bad placement document: {exc}") from exc


def group_token(user, label) -> str:
    """Canonical DoF-variable name d_{user,group}."""
    return f"d_{{{node_token(user)},{label}}}"

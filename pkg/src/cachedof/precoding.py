"""Delivery-scheme construction: monomial IA precoders, the diagonal U
designs that neutralize interference over the air, and full-cooperation
zero-forcing.

Precoding columns are monomials in a generator set of diagonal channels
(raw channels for the no-cooperation scheme, effective channels for the
partial-cooperation scheme).  Full generator sets grow with the network,
so desk-scale work uses a focus user (the generator set of one verified
user) or an explicitly truncated micro instance.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .channels import (
    CASE_I,
    CASE_II,
    CASE_III,
    DESIRED,
    ChannelSet,
    draw_channels,
    effective_channel,
    keyed_diagonal,
    submatrix,
)
from .placement import HALF, Placement, place
from .topology import GRID, Topology, node_key, node_token

QUARTER_MODE = "quarter"
HALF_MODE = "half"
FULL_MODE = "full"

# BS (p,q) serves user (p+dx, q+dy) in each phase; phase 1 is fixed by the
# scheme, phases 2-4 rotate clockwise through the remaining diagonals.
PHASE_OFFSETS = {1: (-1, 1), 2: (1, 1), 3: (1, -1), 4: (-1, -1)}

# largest symbol-extension count we will realize numerically
MAX_NUMERIC_EXTENSIONS = 4096
# largest monomial basis we will enumerate explicitly
MAX_BASIS_SIZE = 1 << 20


class SchemeError(ValueError):
    """Invalid scheme construction request."""


class DimensionBudgetError(SchemeError):
    """Instance too large to realize numerically; reduce n or the generator set."""


@dataclass(frozen=True)
class GeneratorSet:
    """Ordered generator channels; exponent vectors index into ``ids``.

    Ids are ("H", user, bs) for raw channels and ("G", target, group, source)
    for effective channels.  ``truncated`` marks focus/micro restrictions.
    """

    ids: tuple
    truncated: bool = False

    def __post_init__(self):
        if len(set(self.ids)) != len(self.ids):
            raise SchemeError("generator ids must be distinct")

    def __len__(self):
        return len(self.ids)

    def __contains__(self, gid):
        return gid in self.ids

    def axis(self, gid) -> int:
        return self.ids.index(gid)


def monomial_basis(gset: GeneratorSet, n: int) -> list:
    """All exponent vectors in [n]^g, lexicographic.  |result| = n^g."""
    if len(gset) == 0:
        raise SchemeError("empty generator set")
    if n < 1:
        raise SchemeError("monomial order n must be at least 1")
    if n ** len(gset) > MAX_BASIS_SIZE:
        raise DimensionBudgetError(
            f"basis size {n}^{len(gset)} exceeds enumeration budget"
        )
    return list(itertools.product(range(1, n + 1), repeat=len(gset)))


def in_exponent_box(vec, m: int) -> bool:
    """Membership test for [m]^g."""
    return all(1 <= e <= m for e in vec)


def bump(vec, axis: int):
    """Exponent vector after one extra multiplication by generator ``axis``."""
    out = list(vec)
    out[axis] += 1
    return tuple(out)


def phase_partner(t: Topology, phase: int, bs):
    """User served by ``bs`` in the given phase, or None on a bare margin."""
    if phase not in PHASE_OFFSETS:
        raise SchemeError(f"phase must be in 1..4, got {phase}")
    if t.kind != GRID:
        raise SchemeError("phase schedule needs a grid topology")
    dx, dy = PHASE_OFFSETS[phase]
    user = t.reduce_user((bs[0] + dx, bs[1] + dy))
    return user if user in t.users else None


def phase_server(t: Topology, phase: int, user):
    """BS serving ``user`` in the given phase."""
    if phase not in PHASE_OFFSETS:
        raise SchemeError(f"phase must be in 1..4, got {phase}")
    if t.kind != GRID:
        raise SchemeError("phase schedule needs a grid topology")
    dx, dy = PHASE_OFFSETS[phase]
    bs = t.reduce_bs((user[0] - dx, user[1] - dy))
    if bs not in t.bss:
        raise SchemeError(f"no serving BS for {user!r} in phase {phase}")
    return bs


# --------------------------------------------------------------------------
# Diagonal U design (partial cooperation)
# --------------------------------------------------------------------------

U_ZERO = "zero"
U_ZF = "zf"
U_RANDOM = "random"

_ROW_GROUPS = {frozenset({1, 2}): 0, frozenset({3, 4}): 2}
_COL_GROUPS = {frozenset({1, 3}): 0, frozenset({2, 4}): 2}


@dataclass(frozen=True)
class UEntry:
    """Design of one diagonal U matrix: zero, a ZF-pair member, or random.

    A ZF member copies the channel from the pair's protected user (victim)
    to the partner BS, with opposite signs on the two members so the pair
    cancels over the air at the victim.
    """

    kind: str
    victim: tuple = None
    partner: tuple = None
    sign: int = 1


class UDesign:
    """Map (intended user, cache group, BS) -> diagonal design."""

    __slots__ = ("topology", "placement", "seed", "_entries")

    def __init__(self, topology, placement, seed, entries):
        self.topology = topology
        self.placement = placement
        self.seed = seed
        self._entries = entries

    def entry(self, user, group_label, bs) -> UEntry:
        try:
            return self._entries[(user, group_label, bs)]
        except KeyError:
            raise SchemeError(
                f"no U design for user {user!r}, group {group_label}, BS {bs!r}"
            ) from None

    def realize(self, cs: ChannelSet, user, group_label, bs) -> np.ndarray:
        ent = self.entry(user, group_label, bs)
        if ent.kind == U_ZERO:
            return np.zeros(cs.n_extensions, dtype=complex)
        if ent.kind == U_ZF:
            return ent.sign * cs.gain(ent.victim, ent.partner)
        label = f"{node_token(user)}|{group_label}|{node_token(bs)}"
        return keyed_diagonal(self.seed, label, cs.n_extensions)

    def classify(self, intended, group_label, pair, target) -> str:
        """Effective-channel case of signal (intended, group) seen at ``target``."""
        if intended == target:
            return DESIRED
        ents = [self.entry(intended, group_label, b) for b in pair]
        if all(e.kind == U_ZERO for e in ents):
            return CASE_II
        if all(e.kind == U_ZF and e.victim == target for e in ents):
            return CASE_I
        return CASE_III


def build_u_design(t: Topology, placement: Placement, cs: ChannelSet, seed: int) -> UDesign:
    """Per-user, per-group diagonal design for the half-cache scheme.

    For each user, the group holding the two BSs of one adjacent row (or
    column) transmits only from that row: the two nearest BSs form a
    zero-forcing pair protecting the user behind them, farther BSs in the
    row get fresh random diagonals, and every other row is silent.  The
    two diagonal groups transmit from all members with random diagonals.
    The orientation follows the user's class residues, so all four user
    classes get the same design up to group relabeling.
    """
    if t.kind != GRID:
        raise SchemeError("U design needs a grid topology")
    if placement.mode != HALF:
        raise SchemeError("U design applies to the half placement")
    entries = {}
    for grp in placement.groups:
        classes = frozenset({_class_of_member(b) for b in grp.members})
        for user in t.users:
            for bs in grp.members:
                entries[(user, grp.label, bs)] = _u_entry(t, user, classes, bs)
    return UDesign(t, placement, seed, entries)


def _class_of_member(b):
    return {(0, 0): 1, (2, 0): 2, (0, 2): 3, (2, 2): 4}[(b[0] % 4, b[1] % 4)]


def _u_entry(t: Topology, user, classes, bs) -> UEntry:
    i, j = user
    if classes in _ROW_GROUPS:
        qr = _ROW_GROUPS[classes]
        q_active = j - 1 if (j - 1) % 4 == qr else j + 1
        victim = (i, j - 2) if q_active == j - 1 else (i, j + 2)
        lo = t.reduce_bs((i - 1, q_active))
        hi = t.reduce_bs((i + 1, q_active))
        on_axis = bs[1] == t.reduce_bs((0, q_active))[1]
    elif classes in _COL_GROUPS:
        pr = _COL_GROUPS[classes]
        p_active = i - 1 if (i - 1) % 4 == pr else i + 1
        victim = (i - 2, j) if p_active == i - 1 else (i + 2, j)
        lo = t.reduce_bs((p_active, j - 1))
        hi = t.reduce_bs((p_active, j + 1))
        on_axis = bs[0] == t.reduce_bs((p_active, 0))[0]
    else:
        return UEntry(U_RANDOM)
    if not on_axis:
        return UEntry(U_ZERO)
    victim = t.reduce_user(victim)
    if bs == lo:
        partner, sign = hi, 1
    elif bs == hi:
        partner, sign = lo, -1
    else:
        return UEntry(U_RANDOM)
    # margin fallback: no user to protect (or no channel to copy) off-torus
    if victim not in t.users or not t.has_edge(victim, partner):
        return UEntry(U_RANDOM)
    return UEntry(U_ZF, victim=victim, partner=partner, sign=sign)


def classify_all(t: Topology, placement: Placement, u_design: UDesign, target) -> dict:
    """(group label, source user) -> effective-channel tag at ``target``."""
    out = {}
    for grp in placement.groups:
        pair = tuple(sorted(t.neighbors_of_user(target) & grp.members))
        if len(pair) != 2:
            raise SchemeError(f"group {grp.label} has {len(pair)} BSs near {target!r}")
        for src in t.users:
            out[(grp.label, src)] = u_design.classify(src, grp.label, pair, target)
    return out


# --------------------------------------------------------------------------
# Scheme instances
# --------------------------------------------------------------------------

class SchemeInstance:
    """One constructed delivery scheme, symbolic plus (optionally) numeric.

    ``numeric`` is True when the channel set's extension count matches the
    scheme's N and the instance fits the realization budget; only then do
    desired/lambda matrices exist.  ``rebuild(seed)`` reconstructs the same
    recipe against a fresh channel realization.
    """

    def __init__(self, mode, topology, channels, n, gset, M, N, verified_users,
                 recipe, u_design=None, desired=None, interference=None,
                 desired_factor=None, phase=None, realization=None,
                 zf_matrices=None):
        self.mode = mode
        self.topology = topology
        self.channels = channels
        self.n = n
        self.gset = gset
        self.M = M
        self.N = N
        self.verified_users = tuple(verified_users)
        self.u_design = u_design
        self.desired = desired or {}              # user -> list of EffectiveChannel
        self.interference = interference or {}    # user -> list of generator ids
        self.desired_factor = desired_factor or {}  # user -> raw-channel id
        self.phase = phase
        self.zf_matrices = zf_matrices
        self._recipe = recipe
        self._realization = realization

    @property
    def numeric(self) -> bool:
        return self._realization is not None or self.zf_matrices is not None

    @property
    def desired_streams(self) -> int:
        return {QUARTER_MODE: 1, HALF_MODE: 6, FULL_MODE: 1}[self.mode]

    def dof(self) -> Fraction:
        """Exact per-user DoF achieved by this instance."""
        if self.mode == FULL_MODE:
            return Fraction(1)
        return Fraction(self.desired_streams * self.M, self.N)

    def desired_matrix(self, user) -> np.ndarray:
        """Received desired block: N x (streams * M)."""
        self._need_numeric()
        basis_cols, _ = self._realization
        if self.mode == QUARTER_MODE:
            gain = self.channels.gain(user, phase_server(self.topology, self.phase, user))
            return gain[:, None] * basis_cols
        blocks = [g.values[:, None] * basis_cols for g in self.desired[user]]
        return np.hstack(blocks)

    def lambda_matrix(self, user) -> np.ndarray:
        """[desired block | aligned interference basis], square N x N."""
        self._need_numeric()
        _, aligned_cols = self._realization
        return np.hstack([self.desired_matrix(user), aligned_cols])

    def rebuild(self, seed: int) -> "SchemeInstance":
        """Same construction against channels drawn from ``seed``."""
        return self._recipe(seed)

    def _need_numeric(self):
        if self._realization is None:
            raise DimensionBudgetError(
                f"instance not realized numerically (needs N={self.N} extensions, "
                f"channel set has {self.channels.n_extensions}); reduce n or the "
                f"generator set"
            )

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "g": len(self.gset),
            "n": self.n,
            "M": self.M,
            "N": self.N,
            "per_user_dof": str(self.dof()),
            "truncated": self.gset.truncated,
            "numeric": self.numeric,
        }


def _realize_columns(gen_values, exponents, n_ext) -> np.ndarray:
    cols = np.empty((n_ext, len(exponents)), dtype=complex)
    for m, exp in enumerate(exponents):
        col = np.ones(n_ext, dtype=complex)
        for values, e in zip(gen_values, exp):
            col = col * values**e
        cols[:, m] = col
    return cols


def quarter_extension_count(g_size: int, n: int) -> int:
    return n**g_size + (n + 1) ** g_size


def half_extension_count(g_size: int, n: int) -> int:
    return 6 * n**g_size + (n + 1) ** g_size


def build_quarter_scheme(t: Topology, cs: ChannelSet, n: int, focus=None,
                         generator_override=None) -> SchemeInstance:
    """No-cooperation scheme: per-phase monomial IA over raw channels.

    With ``focus`` the generator set is the focus user's three phase-1
    interference channels (the desk-scale restriction used throughout);
    otherwise it spans every user's interference channels, which is
    symbolic-only for any real network.  ``generator_override`` drops
    generators for negative controls.
    """
    if t.kind != GRID:
        raise SchemeError("quarter scheme needs a grid topology")
    if n < 1:
        raise SchemeError("IA order n must be at least 1")
    phase = 1
    if focus is not None and focus not in t.users:
        raise SchemeError(f"focus user {focus!r} not in topology")

    def natural_ids(user):
        server = phase_server(t, phase, user)
        return [
            ("H", user, b)
            for b in sorted(t.neighbors_of_user(user) - {server}, key=node_key)
            if phase_partner(t, phase, b) is not None
        ]

    if generator_override is not None:
        ids = tuple(generator_override)
        truncated = True
    elif focus is not None:
        ids = tuple(natural_ids(focus))
        truncated = True
    else:
        seen = []
        for user in sorted(t.users, key=node_key):
            for gid in natural_ids(user):
                if gid not in seen:
                    seen.append(gid)
        ids = tuple(seen)
        truncated = False
    gset = GeneratorSet(ids, truncated=truncated)
    g = len(gset)
    M = n**g
    N = quarter_extension_count(g, n)
    verified = [focus] if focus is not None else sorted(t.users, key=node_key)
    interference = {u: natural_ids(u) for u in verified}
    desired_factor = {u: ("H", u, phase_server(t, phase, u)) for u in verified}

    realization = None
    if cs.n_extensions == N and N <= MAX_NUMERIC_EXTENSIONS:
        gen_values = [cs.gain(gid[1], gid[2]) for gid in gset.ids]
        basis_cols = _realize_columns(gen_values, monomial_basis(gset, n), N)
        aligned_cols = _realize_columns(gen_values, monomial_basis(gset, n + 1), N)
        realization = (basis_cols, aligned_cols)

    def recipe(seed, _t=t, _n=n, _focus=focus, _override=generator_override):
        fresh = draw_channels(_t, N, seed)
        return build_quarter_scheme(_t, fresh, _n, focus=_focus,
                                    generator_override=_override)

    return SchemeInstance(QUARTER_MODE, t, cs, n, gset, M, N, verified, recipe,
                          interference=interference, desired_factor=desired_factor,
                          phase=phase, realization=realization)


def interference_ids(t: Topology, placement: Placement, u_design: UDesign, target) -> list:
    """Generator ids of the nonzero effective interference channels at ``target``."""
    tags = classify_all(t, placement, u_design, target)
    out = []
    for grp in placement.groups:
        for src in sorted(t.users, key=node_key):
            if tags[(grp.label, src)] == CASE_III:
                out.append(("G", target, grp.label, src))
    return out


def build_half_scheme(t: Topology, cs: ChannelSet, n: int, focus,
                      generators=None, allow_truncation=False,
                      design_seed=None) -> SchemeInstance:
    """Partial-cooperation scheme: U (neutralize) times W (align).

    The generator set defaults to every nonzero effective interference
    channel of the focus user.  ``generators`` may give an id subset or a
    count of canonically-ordered ids for micro instances; dropping a live
    interferer is refused unless ``allow_truncation`` is set, because
    alignment would silently fail.
    """
    if focus is None or focus not in t.users:
        raise SchemeError(f"half scheme needs a focus user in the topology, got {focus!r}")
    if n < 1:
        raise SchemeError("IA order n must be at least 1")
    placement = place(t, HALF)
    seed = cs.seed if design_seed is None else design_seed
    u_design = build_u_design(t, placement, cs, seed)
    full_ids = interference_ids(t, placement, u_design, focus)
    if generators is None:
        ids = tuple(full_ids)
    else:
        if isinstance(generators, int):
            ids = tuple(full_ids[:generators])
        else:
            ids = tuple(generators)
        unknown = [gid for gid in ids if gid not in full_ids]
        if unknown:
            raise SchemeError(f"generators not in the focus user's interference set: {unknown}")
        if set(ids) != set(full_ids) and not allow_truncation:
            raise SchemeError(
                "generator truncation drops nonzero interference of the focus "
                "user; pass allow_truncation=True for micro instances"
            )
    gset = GeneratorSet(ids, truncated=len(ids) < len(full_ids))
    g = len(gset)
    M = n**g
    N = half_extension_count(g, n)
    desired = {
        focus: [effective_channel(cs, u_design, focus, grp, focus) for grp in placement.groups]
    }
    interference = {focus: list(full_ids)}

    realization = None
    if cs.n_extensions == N and N <= MAX_NUMERIC_EXTENSIONS:
        gen_values = []
        for _, target, glabel, src in gset.ids:
            eff = effective_channel(cs, u_design, target, placement.group(glabel), src)
            gen_values.append(eff.values)
        basis_cols = _realize_columns(gen_values, monomial_basis(gset, n), N)
        aligned_cols = _realize_columns(gen_values, monomial_basis(gset, n + 1), N)
        realization = (basis_cols, aligned_cols)

    def recipe(seed, _t=t, _n=n, _focus=focus, _gen=generators, _allow=allow_truncation):
        fresh = draw_channels(_t, N, seed)
        return build_half_scheme(_t, fresh, _n, _focus, generators=_gen,
                                 allow_truncation=_allow, design_seed=seed)

    return SchemeInstance(HALF_MODE, t, cs, n, gset, M, N, [focus], recipe,
                          u_design=u_design, desired=desired,
                          interference=interference, realization=realization)


def build_full_zf(t: Topology, cs: ChannelSet) -> SchemeInstance:
    """Full-cooperation scheme: pseudo-inverse precoding of the sparse network matrix."""
    users = sorted(t.users, key=node_key)
    bss = sorted(t.bss, key=node_key)
    H = submatrix(cs, users, bss, 0)
    precoder = np.linalg.pinv(H)

    def recipe(seed, _t=t):
        fresh = draw_channels(_t, 1, seed)
        return build_full_zf(_t, fresh)

    return SchemeInstance(FULL_MODE, t, cs, 1, GeneratorSet(()), 1, 1, users,
                          recipe, zf_matrices=(H, precoder))

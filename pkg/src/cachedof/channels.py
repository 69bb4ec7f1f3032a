"""Random symbol-extended channels and effective interference channels.

Every user-BS edge carries a diagonal channel over N symbol extensions,
drawn i.i.d. circularly symmetric complex Gaussian with unit variance.
Draws are keyed per (seed, edge) through a counter-based Philox stream, so
a sub-network sees the same realization no matter the iteration order.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .topology import Topology, node_key, node_token

# effective-channel classification tags
DESIRED = "desired"
CASE_I = "case1"    # zero-forced over the air
CASE_II = "case2"   # both cooperating BSs silent toward this user
CASE_III = "case3"  # generic nonzero interference

_INV_SQRT2 = 1.0 / np.sqrt(2.0)


class ChannelError(ValueError):
    """Invalid draw parameters or unknown edge/extension."""


def _philox(*tokens) -> np.random.Generator:
    """Generator keyed by a stable hash of the given tokens."""
    digest = hashlib.blake2b("|".join(map(str, tokens)).encode(), digest_size=16).digest()
    key = np.frombuffer(digest, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def complex_gaussian(rng: np.random.Generator, n: int) -> np.ndarray:
    """n i.i.d. CN(0,1) samples."""
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * _INV_SQRT2


def keyed_diagonal(seed, label, n: int) -> np.ndarray:
    """Deterministic length-n CN(0,1) diagonal for an off-channel random matrix."""
    return complex_gaussian(_philox("diag", seed, label), n)


def diag_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise complex product that is bitwise-commutative.

    Vectorized complex multiplication may fuse operations so that rounding
    depends on operand order; the over-the-air cancellations checked here
    must be exactly zero, so the product is formed from plain real
    arithmetic (each partial product and sum commutes bitwise).
    """
    out = np.empty(np.broadcast(a, b).shape, dtype=complex)
    out.real = a.real * b.real - a.imag * b.imag
    out.imag = a.real * b.imag + a.imag * b.real
    return out


class ChannelSet:
    """Per-edge diagonal channels over ``n_extensions`` symbol extensions."""

    __slots__ = ("topology", "n_extensions", "seed", "_gains")

    def __init__(self, topology: Topology, n_extensions: int, seed: int, gains):
        self.topology = topology
        self.n_extensions = n_extensions
        self.seed = seed
        self._gains = gains

    def gain(self, user, bs) -> np.ndarray:
        """Diagonal of H_{user,bs}; raises on non-edges."""
        try:
            return self._gains[(user, bs)]
        except KeyError:
            raise ChannelError(f"no edge between {user!r} and {bs!r}") from None

    def to_document(self) -> dict:
        """Debug dump: per-edge [re, im] pair lists."""
        return {
            f"{node_token(u)}|{node_token(b)}": [[z.real, z.imag] for z in self._gains[(u, b)]]
            for u, b in self.topology.edge_list()
        }


def draw_channels(t: Topology, n_extensions: int, seed: int) -> ChannelSet:
    """Draw the i.i.d. channel realization for every edge of ``t``."""
    if n_extensions < 1:
        raise ChannelError("need at least one symbol extension")
    gains = {}
    for u, b in t.edge_list():
        rng = _philox("chan", seed, node_token(u), node_token(b))
        gains[(u, b)] = complex_gaussian(rng, n_extensions)
    return ChannelSet(t, n_extensions, seed, gains)


class EffectiveChannel:
    """Combined gain of one cache group's cooperative signal at one user."""

    __slots__ = ("target", "group_label", "intended", "values", "tag")

    def __init__(self, target, group_label, intended, values, tag):
        self.target = target
        self.group_label = group_label
        self.intended = intended
        self.values = values
        self.tag = tag

    def __repr__(self):
        return (f"EffectiveChannel(target={self.target}, group={self.group_label}, "
                f"intended={self.intended}, tag={self.tag})")


def effective_terms(cs: ChannelSet, u_design, target, group, intended):
    """The two H_{target,b} U_{intended,group}^{b} products, ordered by BS.

    ``u_design`` supplies the per-BS diagonal design (see precoding.UDesign);
    only its entry lookup and realization are used here.
    """
    pair = sorted(cs.topology.neighbors_of_user(target) & group.members)
    if len(pair) != 2:
        raise ChannelError(
            f"need exactly 2 BSs of group {group.label} near {target!r}, got {len(pair)}"
        )
    terms = [
        diag_mul(cs.gain(target, b), u_design.realize(cs, intended, group.label, b))
        for b in pair
    ]
    return tuple(pair), terms


def effective_channel(cs: ChannelSet, u_design, target, group, intended) -> EffectiveChannel:
    """Combined gain at ``target`` of the (intended, group) cooperative signal."""
    pair, terms = effective_terms(cs, u_design, target, group, intended)
    values = terms[0] + terms[1]
    tag = u_design.classify(intended, group.label, pair, target)
    return EffectiveChannel(target, group.label, intended, values, tag)


def submatrix(cs: ChannelSet, users, bss, extension_index: int) -> np.ndarray:
    """Channel matrix H_{R,T} at one symbol extension, zeros on non-edges."""
    if not 0 <= extension_index < cs.n_extensions:
        raise ChannelError(f"extension index {extension_index} out of range")
    rows = sorted(users, key=node_key) if isinstance(users, (set, frozenset)) else list(users)
    cols = sorted(bss, key=node_key) if isinstance(bss, (set, frozenset)) else list(bss)
    out = np.zeros((len(rows), len(cols)), dtype=complex)
    for r, u in enumerate(rows):
        for c, b in enumerate(cols):
            if cs.topology.has_edge(u, b):
                out[r, c] = cs.gain(u, b)[extension_index]
    return out

import json
from fractions import Fraction

import pytest

from cachedof.channels import draw_channels
from cachedof.placement import CacheGroup, Placement
from cachedof.topology import GridSpec, load_topology, make_grid

# Simplified names for the 3x3 example network: users counted left-to-right,
# bottom-to-top; the four central BSs are a, b, c, d.
EXAMPLE_USERS = {
    1: (-1, -1), 2: (1, -1), 3: (3, -1),
    4: (-1, 1), 5: (1, 1), 6: (3, 1),
    7: (-1, 3), 8: (1, 3), 9: (3, 3),
}
EXAMPLE_BSS = {"a": (0, 0), "b": (2, 0), "c": (0, 2), "d": (2, 2)}

FIG6_DOC = {
    "users": ["1", "2"],
    "bss": ["a", "b", "c"],
    "edges": [["1", "a"], ["1", "b"], ["2", "b"], ["2", "c"]],
}


@pytest.fixture(scope="session")
def torus4():
    return make_grid(GridSpec(4, 4, wrap=True))


@pytest.fixture(scope="session")
def example_grid():
    """The 3x3-cell example network around user 5 = (1, 1)."""
    return make_grid(GridSpec(3, 3, wrap=False, origin_cells=(-1, -1)))


@pytest.fixture(scope="session")
def fig6_topology():
    return load_topology(FIG6_DOC)


@pytest.fixture(scope="session")
def fig6_placement():
    """Two cache groups: one file half at BSs {a, c}, the other at {b}."""
    return Placement(
        Fraction(1, 2),
        "custom",
        (
            CacheGroup("A1", frozenset({"a", "c"}), Fraction(1, 2)),
            CacheGroup("A2", frozenset({"b"}), Fraction(1, 2)),
        ),
    )


@pytest.fixture()
def fig6_files(tmp_path, fig6_placement):
    """Fig.-6 topology and placement documents on disk for the CLI."""
    from cachedof.placement import placement_to_document

    topo = tmp_path / "fig6_topology.json"
    topo.write_text(json.dumps(FIG6_DOC))
    plc = tmp_path / "fig6_placement.json"
    plc.write_text(json.dumps(placement_to_document(fig6_placement)))
    return topo, plc


@pytest.fixture(scope="session")
def torus4_channels(torus4):
    return draw_channels(torus4, 4, 0)

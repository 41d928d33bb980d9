import numpy as np
import pytest

from cmap import geometry as geo
from cmap.geometry import Disc, DomainSpec, PuncturedDomain
from cmap.layout import Layout, LayoutError, LayoutNode, build_layout, verify_layout
from cmap.localsolve import build_neighborhoods

DISC = DomainSpec.disc()
SQUARE = geo.square()


def make(domain, n, z0=0j):
    nbs = build_neighborhoods(domain, n)
    pd = PuncturedDomain(domain, z0, n)
    return build_layout(domain, nbs, pd, n), nbs, pd


@pytest.fixture(scope="module")
def disc3():
    return make(DISC, 3)


def test_disc_n3_verifies(disc3):
    layout, nbs, pd = disc3
    assert verify_layout(layout, DISC, nbs, pd) == []


def test_node_kinds(disc3):
    layout, nbs, pd = disc3
    kinds = [nd.kind for nd in layout.nodes]
    assert kinds.count("boundary-core") == len(nbs)
    assert kinds.count("puncture-annulus") == 1
    assert layout.size == kinds.count("interior") > 0


def test_radius_rule_and_safety(disc3):
    layout, _, pd = disc3
    for d in layout.interior:
        assert d.radius == pytest.approx(float(pd.node_radius(d.center)), rel=1e-12)
        assert 2 * d.radius < float(pd.distance(d.center))


def test_greedy_ordering(disc3):
    # each new center lies outside all earlier nodes
    layout, _, _ = disc3
    c = np.array([d.center for d in layout.interior])
    r = np.array([d.radius for d in layout.interior])
    for j in range(1, len(c)):
        assert np.all(np.abs(c[j] - c[:j]) >= 0.8 * r[:j] - 1e-15)


def test_deterministic(disc3):
    layout, _, _ = disc3
    again, _, _ = make(DISC, 3)
    assert again.to_json() == layout.to_json()


def test_deleted_node_reported(disc3):
    # neighbors can absorb a deleted disc, so try the largest few
    layout, nbs, pd = disc3
    order = sorted(range(layout.size), key=lambda i: -layout.nodes[i].disc.radius)
    reported = []
    for i in order[:5]:
        nodes = [nd for j, nd in enumerate(layout.nodes) if j != i]
        problems = verify_layout(Layout(nodes, 3, pd), DISC, nbs, pd, samples=20_000)
        reported.append(any("covering" in p for p in problems))
    assert any(reported)


def test_doubled_radius_reported(disc3):
    layout, nbs, pd = disc3
    nodes = list(layout.nodes)
    d = nodes[0].disc
    nodes[0] = LayoutNode(Disc(d.center, 2 * d.radius), "interior")
    problems = verify_layout(Layout(nodes, 3, pd), DISC, nbs, pd)
    assert any("safety" in p or "radius rule" in p for p in problems)


def test_min_radius_guard():
    nbs = build_neighborhoods(DISC, 2)
    pd = PuncturedDomain(DISC, 0j, 2)
    with pytest.raises(LayoutError):
        build_layout(DISC, nbs, pd, 2, min_radius=0.05)


def test_square_size_growth_subquadratic():
    sizes = [make(SQUARE, n)[0].size for n in range(2, 8)]
    for a, b in zip(sizes, sizes[1:]):
        assert b / a <= 3
    # log-log slope over n in 2..7 well below 2
    slope = np.polyfit(np.log(np.arange(2, 8)), np.log(sizes), 1)[0]
    assert slope < 2


def test_to_json_fields(disc3):
    rec = disc3[0].to_json()[0]
    assert set(rec) == {"center", "radius", "kind"}

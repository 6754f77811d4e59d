import math

import numpy as np
import pytest
from scipy.stats import wasserstein_distance as scipy_w1

from coho.citygraph import BlockNode, Building, CityGraph, Edge
from coho.errors import ContractViolation, NoContext
from coho.geometry import Polygon
from coho.metrics import (CP, CS, building_features, community_ct,
                          community_report, context_score, layout_sim,
                          out_block_pct, overlap_pct, reconstruction_errors,
                          wasserstein_1d, wd_5d, wd_count)


def rect(x0, y0, w, h):
    return Polygon([(x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h)])


def block(specs, x0=0.0, y0=0.0, side=100.0, height=10.0, bid="b"):
    """specs: (u, v, w, h) unit-frame fractions."""
    buildings = [Building(rect(x0 + u * side - w * side / 2,
                               y0 + v * side - h * side / 2,
                               w * side, h * side), height)
                 for u, v, w, h in specs]
    return BlockNode(bid, rect(x0, y0, side, side), buildings)


ONE = [(0.5, 0.5, 0.2, 0.2)]
TWO = [(0.3, 0.5, 0.2, 0.2), (0.7, 0.5, 0.2, 0.2)]


class TestLayoutSim:
    def test_identical_is_one(self):
        assert layout_sim(block(TWO), block(TWO, x0=500)) == pytest.approx(1.0)

    def test_both_empty_is_one(self):
        assert layout_sim(block([]), block([])) == 1.0

    def test_one_empty_is_zero(self):
        assert layout_sim(block([]), block(ONE)) == 0.0

    def test_single_pair_penalty_formula(self):
        # [DERIVED by hand] one building each, center offset 0.1 in u:
        # weight = area * 2^(-Cp*0.1); sim = weight / area
        a = block(ONE)
        b = block([(0.6, 0.5, 0.2, 0.2)], x0=500)
        expect = 2.0 ** (-CP * 0.1)
        assert layout_sim(a, b) == pytest.approx(expect, abs=1e-9)

    def test_size_penalty_formula(self):
        # same center, extents differ by |dw|+|dh| = 0.1; min area in front
        a = block(ONE)
        b = block([(0.5, 0.5, 0.25, 0.25)], x0=500)
        expect = (0.2 * 0.2) * 2.0 ** (-CS * 0.1) / (0.25 * 0.25)
        assert layout_sim(a, b) == pytest.approx(expect, abs=1e-9)

    def test_unmatched_buildings_penalize(self):
        assert layout_sim(block(ONE), block(TWO, x0=500)) < 0.75

    def test_symmetric(self):
        a = block(TWO)
        b = block([(0.4, 0.4, 0.3, 0.2)], x0=500)
        assert layout_sim(a, b) == pytest.approx(layout_sim(b, a))

    def test_range(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            sa = [(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
                   rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3))
                  for _ in range(rng.integers(1, 5))]
            sb = [(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8),
                   rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3))
                  for _ in range(rng.integers(1, 5))]
            s = layout_sim(block(sa), block(sb, x0=500))
            assert 0.0 <= s <= 1.0


def star_graph(layout_specs):
    """Node 0 linked to nodes 1..n-1."""
    nodes = [block(spec, x0=200.0 * i, bid=f"b{i}")
             for i, spec in enumerate(layout_specs)]
    edges = [Edge(0, i, 200.0 * i) for i in range(1, len(nodes))]
    return CityGraph("m", nodes, edges, (0.0, 0.0))


class TestContextScore:
    def test_five_node_hand_case(self):
        # [DERIVED by hand] center + 4 leaves; leaves identical to center
        # except leaf 4 shifted by 0.1 in u.
        shifted = [(0.6, 0.5, 0.2, 0.2)]
        g = star_graph([ONE, ONE, ONE, ONE, shifted])
        s = 2.0 ** (-CP * 0.1)
        ct, per_node = community_ct(g)
        # center: mean(1,1,1,s); each identical leaf: 1; shifted leaf: s
        expect = ((3 + s) / 4 + 1 + 1 + 1 + s) / 5
        assert ct == pytest.approx(expect, abs=1e-9)
        assert len(per_node) == 5

    def test_isolated_nodes_excluded(self):
        g = star_graph([ONE, ONE])
        g.nodes.append(block(TWO, x0=900, bid="iso"))
        ct, per_node = community_ct(g)
        assert len(per_node) == 2
        assert ct == pytest.approx(1.0)

    def test_no_edges_raises(self):
        g = CityGraph("m", [block(ONE)], [], (0, 0))
        with pytest.raises(NoContext):
            community_ct(g)

    def test_cts_self_is_zero(self):
        g = star_graph([ONE, TWO, ONE, TWO])
        out = context_score(g, g)
        assert out["CTS"] == 0.0

    def test_structure_mismatch_rejected(self):
        a = star_graph([ONE, ONE])
        b = star_graph([ONE, ONE, ONE])
        with pytest.raises(ContractViolation):
            context_score(a, b)


def lp_wasserstein(x, y):
    """LP transport oracle for W1 between empirical distributions."""
    from scipy.optimize import linprog
    n, m = len(x), len(y)
    c = np.abs(np.subtract.outer(x, y)).reshape(-1)
    A_eq = []
    b_eq = []
    for i in range(n):
        row = np.zeros((n, m))
        row[i, :] = 1
        A_eq.append(row.reshape(-1))
        b_eq.append(1.0 / n)
    for j in range(m):
        row = np.zeros((n, m))
        row[:, j] = 1
        A_eq.append(row.reshape(-1))
        b_eq.append(1.0 / m)
    res = linprog(c, A_eq=np.array(A_eq), b_eq=np.array(b_eq),
                  bounds=(0, None), method="highs")
    assert res.success
    return res.fun


class TestWasserstein:
    def test_identical(self):
        x = np.array([1.0, 2.0, 3.0])
        assert wasserstein_1d(x, x) == 0.0

    def test_shift(self):
        x = np.array([0.0, 1.0, 2.0])
        assert wasserstein_1d(x, x + 5) == pytest.approx(5.0)

    def test_hand_case_unequal_sizes(self):
        # [DERIVED by hand] {0,1} vs {0.5,1.5,2.5}: quantile coupling
        x = [0.0, 1.0]
        y = [0.5, 1.5, 2.5]
        assert wasserstein_1d(x, y) == pytest.approx(scipy_w1(x, y), abs=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(ContractViolation):
            wasserstein_1d([], [1.0])

    def test_matches_scipy_and_lp(self):
        rng = np.random.default_rng(1)
        for _ in range(40):
            x = rng.standard_normal(rng.integers(2, 12))
            y = rng.standard_normal(rng.integers(2, 12)) + rng.uniform(-1, 1)
            ours = wasserstein_1d(x, y)
            assert ours == pytest.approx(scipy_w1(x, y), abs=1e-9)
            assert ours == pytest.approx(lp_wasserstein(x, y), abs=1e-7)


class TestDistributionMetrics:
    def test_wd5d_self_zero(self):
        g = star_graph([ONE, TWO, ONE])
        assert wd_5d(g, g) == pytest.approx(0.0, abs=1e-12)

    def test_wd5d_height_shift(self):
        a = star_graph([ONE, ONE])
        b = star_graph([ONE, ONE])
        for n in b.nodes:
            for bl in n.buildings:
                bl.height = bl.height + 5.0
        # only the height feature moves; z-scored by real std (0 -> 1.0)
        assert wd_5d(a, b) == pytest.approx(5.0 / 5, abs=1e-9)

    def test_wd_count(self):
        a = star_graph([ONE, ONE])      # counts 1,1
        b = star_graph([TWO, TWO])      # counts 2,2
        assert wd_count(a, b) == pytest.approx(1.0)

    def test_building_features_rows(self):
        g = star_graph([ONE, TWO])
        f = building_features(g)
        assert f.shape == (3, 5)
        assert np.all(f[:, 2] >= f[:, 3])  # length >= width


class TestAreaMetrics:
    def test_overlap_pct_zero_when_disjoint(self):
        assert overlap_pct([block(TWO)]) == 0.0

    def test_overlap_pct_hand_case(self):
        # two 20x20 squares overlapping in a 10x20 strip:
        # overlap 200, total area 800 -> 25%
        b = block([(0.5, 0.5, 0.2, 0.2), (0.6, 0.5, 0.2, 0.2)])
        assert overlap_pct([b]) == pytest.approx(25.0)

    def test_out_block_pct_zero_inside(self):
        assert out_block_pct([block(TWO)]) == 0.0

    def test_out_block_pct_hand_case(self):
        # building half outside the block: 50%
        b = BlockNode("b", rect(0, 0, 100, 100),
                      [Building(rect(90, 40, 20, 20), 10.0)])
        assert out_block_pct([b]) == pytest.approx(50.0)

    def test_empty_corpus_zero(self):
        assert overlap_pct([]) == 0.0
        assert out_block_pct([block([])]) == 0.0


class TestReconstructionErrors:
    def test_perfect(self):
        t = [block(TWO), block(ONE, x0=300)]
        p = [block(TWO), block(ONE, x0=300)]
        out = reconstruction_errors(p, t)
        for k in ("Pos-E", "Geom-E", "Ct-E", "Cov-E"):
            assert out[k] == pytest.approx(0.0, abs=1e-9)

    def test_position_error_hand_case(self):
        # [DERIVED by hand] 0.1 u-shift in a 100x100 block: world 10 m,
        # diagonal 141.42 m -> 7.071%
        t = [block(ONE)]
        p = [block([(0.6, 0.5, 0.2, 0.2)])]
        out = reconstruction_errors(p, t)
        assert out["Pos-E"] == pytest.approx(100 * 10 / math.hypot(100, 100),
                                             abs=1e-6)
        assert out["Geom-E"] == pytest.approx(0.0, abs=1e-9)

    def test_geometry_error_hand_case(self):
        # extents differ by 5 m in each axis, heights by 2 -> (5+5+2)/100
        t = [block([(0.5, 0.5, 0.2, 0.2)], height=10)]
        p = [block([(0.5, 0.5, 0.25, 0.25)], height=12)]
        out = reconstruction_errors(p, t)
        assert out["Geom-E"] == pytest.approx(12.0, abs=1e-6)

    def test_count_error(self):
        t = [block(TWO)]
        p = [block(ONE)]
        out = reconstruction_errors(p, t)
        assert out["Ct-E"] == pytest.approx(50.0)

    def test_coverage_error(self):
        # predicted empty vs one 20x20 building in a 100x100 block -> 4%
        t = [block(ONE)]
        p = [block([])]
        out = reconstruction_errors(p, t)
        assert out["Cov-E"] == pytest.approx(4.0)


class TestReport:
    def test_self_report(self):
        g = star_graph([ONE, TWO, ONE, TWO])
        rep = community_report(g, g)
        assert rep.cts == 0.0
        assert rep.wd_5d == pytest.approx(0.0, abs=1e-12)
        assert rep.wd_count == 0.0
        assert rep.overlap_gen == rep.overlap_real
        d = rep.to_dict()
        assert set(d) == {"CT_gen", "CT_real", "CTS", "WD_5D", "WD_CO",
                          "Overlap_gen", "Overlap_real", "O_Blk_gen",
                          "O_Blk_real"}

    def test_skip_filter(self):
        g = star_graph([ONE, ONE, TWO])
        rep = community_report(g, g, skip=lambda n: n.block_id == "b2")
        assert rep.ct_gen == pytest.approx(1.0)

import math

import numpy as np
import pytest

from foldstring.geometry import polygon_area
from foldstring.kinematics import (
    AnchoredPoint,
    KinematicInfeasibilityError,
    embed_fold,
    locate_points,
    lower_panel_id,
    upper_panel_id,
)
from foldstring.pattern import (
    Crease,
    CreaseKind,
    CreasePattern,
    synthesize_strip,
    tessellate,
)
from foldstring.transition import (
    EntryFlag,
    TransitionGraphDesign,
    fold_state,
)

V, M = EntryFlag.VALLEY, EntryFlag.MOUNTAIN


def make_design(rng, n=None):
    n = n or int(rng.integers(1, 6))
    lengths = rng.uniform(25, 60, n + 1)
    betas = []
    for _ in range(n):
        b = rng.uniform(0.6, 0.47 * math.pi)
        betas.append(b if rng.integers(0, 2) == 0 else math.pi - b)
    flag = V if rng.integers(0, 2) == 0 else M
    return TransitionGraphDesign(tuple(lengths), tuple(betas), flag)


class TestEmbedFold:
    def test_flat_is_identity(self):
        d = TransitionGraphDesign((30, 40), (1.0,), V)
        pat = synthesize_strip(d, 20.0)
        g = embed_fold(pat, 0.0)
        for pid in range(len(pat.panels)):
            R, t = g.panel_transform(pid)
            assert np.allclose(R, np.eye(3), atol=1e-12)
            assert np.allclose(t, 0.0, atol=1e-9)
        # flat chain start stays at its flat-pattern position
        assert np.allclose(g.apex_chain_world()[0], [0, 10.0, 0], atol=1e-9)

    def test_uniform_strip_symmetric_dihedrals(self):
        d = TransitionGraphDesign((40,) * 4, (1.0,) * 3, V)
        pat = synthesize_strip(d, 24.0)
        g = embed_fold(pat, math.pi / 2)
        zz = [abs(v) for k, v in g.crease_folds.items()]
        arms = sorted(set(round(abs(v), 9) for k, v in g.crease_folds.items()))
        # uniform beta: all arm magnitudes equal, all main magnitudes equal,
        # plus the cap diagonals: exactly 3 distinct magnitudes
        assert len(arms) == 3

    def test_rigidity_edge_lengths(self):
        rng = np.random.default_rng(3)
        d = make_design(rng, 3)
        pat = tessellate(synthesize_strip(d, 20.0), 2)
        g = embed_fold(pat, 1.3)
        for pid in range(len(pat.panels)):
            flat = pat.panel_polygon(pid)
            world = g.panel_vertices_world(pid)
            m = len(flat)
            for i in range(m):
                lf = np.linalg.norm(flat[(i + 1) % m] - flat[i])
                lw = np.linalg.norm(world[(i + 1) % m] - world[i])
                assert lw == pytest.approx(lf, abs=1e-9)

    def test_main_crease_dihedral_is_theta(self):
        d = TransitionGraphDesign((40, 40), (1.1,), V)
        pat = synthesize_strip(d, 20.0)
        theta = 0.9
        g = embed_fold(pat, theta)
        n = 1
        pu = upper_panel_id(pat, 0, 0)
        pl = lower_panel_id(pat, 0, 0)
        nu = g.rotations[pu] @ np.array([0, 0, 1.0])
        nl = g.rotations[pl] @ np.array([0, 0, 1.0])
        # dihedral deviation from flat equals theta
        assert math.acos(np.clip(nu @ nl, -1, 1)) == pytest.approx(theta, abs=1e-9)

    def test_valley_folds_up(self):
        d = TransitionGraphDesign((40, 40), (1.1,), V)
        pat = synthesize_strip(d, 20.0)
        g = embed_fold(pat, 1.0)
        # unit 0 is a valley: the strip edge lifts above the main crease plane
        chain = g.apex_chain_world()
        edge_pt = g.point_world(upper_panel_id(pat, 0, 0), (20.0, 20.0))
        assert edge_pt[2] > 1.0

    def test_projection_consistency_random(self):
        rng = np.random.default_rng(11)
        checked = 0
        while checked < 20:
            d = make_design(rng)
            try:
                pat = synthesize_strip(d, float(rng.uniform(8, 22)))
            except ValueError:
                continue
            for theta in rng.uniform(0.05, 3.1, 5):
                g = embed_fold(pat, float(theta))
                expect = np.array(fold_state(d, float(theta)).endpoint)
                got = g.projected_endpoint()
                assert np.allclose(got, expect, atol=1e-6), (d, theta)
                assert g.max_residual < 1e-9
            checked += 1

    def test_projection_consistency_tessellated(self):
        rng = np.random.default_rng(4)
        d = make_design(rng, 3)
        pat = tessellate(synthesize_strip(d, 16.0), 3)
        g = embed_fold(pat, 2.0)
        expect = np.array(fold_state(d, 2.0).endpoint)
        assert np.allclose(g.projected_endpoint(), expect, atol=1e-6)

    def test_surface_area_preserved(self):
        rng = np.random.default_rng(5)
        d = make_design(rng, 2)
        pat = tessellate(synthesize_strip(d, 18.0), 2)
        g = embed_fold(pat, 1.7)
        flat_area = sum(abs(polygon_area(pat.panel_polygon(i)))
                        for i in range(len(pat.panels)))
        world_area = 0.0
        for pid in range(len(pat.panels)):
            pts = g.panel_vertices_world(pid)
            for k in range(1, len(pts) - 1):
                world_area += 0.5 * np.linalg.norm(
                    np.cross(pts[k] - pts[0], pts[k + 1] - pts[0]))
        assert world_area == pytest.approx(flat_area, rel=1e-6)

    def test_continuity_in_theta(self):
        rng = np.random.default_rng(6)
        d = make_design(rng, 2)
        pat = synthesize_strip(d, 18.0)
        g1 = embed_fold(pat, 1.0)
        g2 = embed_fold(pat, 1.0 + 1e-6)
        worst = 0.0
        for pid in range(len(pat.panels)):
            worst = max(worst, float(np.max(np.linalg.norm(
                g1.panel_vertices_world(pid) - g2.panel_vertices_world(pid), axis=1))))
        assert worst < 1e-3

    def test_theta_domain(self):
        d = TransitionGraphDesign((30, 30), (1.0,), V)
        pat = synthesize_strip(d, 15.0)
        with pytest.raises(ValueError):
            embed_fold(pat, math.pi)
        with pytest.raises(ValueError):
            embed_fold(pat, -0.1)

    def test_infeasible_pattern_rejected(self):
        d = TransitionGraphDesign((40, 40), (1.0,), V)
        pat = synthesize_strip(d, 20.0)
        # corrupt one arm kind so the vertex cannot close
        bad = []
        done = False
        for c in pat.creases:
            if not done and c.fold_group.name == "ZIGZAG" and c.kind != CreaseKind.BORDER \
                    and min(pat.vertices[c.v1][0], pat.vertices[c.v2][0]) > 1:
                k = CreaseKind.MOUNTAIN if c.kind == CreaseKind.VALLEY else CreaseKind.VALLEY
                bad.append(Crease(c.v1, c.v2, k, c.fold_group))
                done = True
            else:
                bad.append(c)
        mod = CreasePattern(vertices=pat.vertices, creases=bad, panels=pat.panels,
                            unit_width=20.0, copy_count=1, meta=pat.meta)
        with pytest.raises(KinematicInfeasibilityError) as ei:
            embed_fold(mod, 1.0)
        assert ei.value.worst_residual > 1e-9 or "closure" in str(ei.value)


class TestLocatePoints:
    def test_flat_identity(self):
        d = TransitionGraphDesign((30, 40), (1.0,), V)
        pat = synthesize_strip(d, 20.0)
        g = embed_fold(pat, 0.0)
        pid = upper_panel_id(pat, 0, 0)
        centroid = pat.panel_polygon(pid).mean(axis=0)
        out = locate_points(g, [AnchoredPoint(pid, tuple(centroid))])
        assert np.allclose(out[0][:2], centroid, atol=1e-9)
        assert out[0][2] == pytest.approx(0.0, abs=1e-12)

    def test_same_panel_distance_preserved(self):
        d = TransitionGraphDesign((50, 50), (0.9,), V)
        pat = synthesize_strip(d, 24.0)
        g = embed_fold(pat, 2.2)
        pid = upper_panel_id(pat, 0, 1)
        a = AnchoredPoint(pid, (60.0, 14.0))
        b = AnchoredPoint(pid, (75.0, 19.0))
        pa, pb = locate_points(g, [a, b])
        d_flat = math.hypot(75 - 60, 19 - 14)
        assert np.linalg.norm(pa - pb) == pytest.approx(d_flat, abs=1e-9)

    def test_fold_contracts_centers(self):
        # centers of panels along the strip move closer as the fold deepens
        d = TransitionGraphDesign((30,) * 7, (1.0,) * 6, V)
        pat = tessellate(synthesize_strip(d, 30.0), 4)
        anchors = []
        for unit in (0, 3, 6):
            pid = upper_panel_id(pat, 1, unit)
            anchors.append(AnchoredPoint(pid, tuple(pat.panel_polygon(pid).mean(axis=0))))
        g0 = embed_fold(pat, 0.0)
        g1 = embed_fold(pat, 2.0)
        p0 = locate_points(g0, anchors)
        p1 = locate_points(g1, anchors)
        assert np.linalg.norm(p1[2] - p1[0]) < np.linalg.norm(p0[2] - p0[0])

    def test_unknown_panel(self):
        d = TransitionGraphDesign((30, 30), (1.0,), V)
        pat = synthesize_strip(d, 15.0)
        g = embed_fold(pat, 0.5)
        with pytest.raises(KeyError):
            locate_points(g, [AnchoredPoint(999, (0.0, 0.0))])

    def test_anchor_outside_panel(self):
        d = TransitionGraphDesign((30, 30), (1.0,), V)
        pat = synthesize_strip(d, 15.0)
        g = embed_fold(pat, 0.5)
        with pytest.raises(ValueError):
            locate_points(g, [AnchoredPoint(2, (-500.0, -500.0))])

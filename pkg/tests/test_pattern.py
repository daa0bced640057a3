import math

import numpy as np
import pytest

from foldstring.geometry import polygon_area
from foldstring.pattern import (
    Crease,
    CreaseKind,
    CreasePattern,
    FoldGroup,
    StripGeometryError,
    pattern_area,
    synthesize_strip,
    tessellate,
    validate_pattern,
)
from foldstring.transition import EntryFlag, TransitionGraphDesign

M, V = EntryFlag.MOUNTAIN, EntryFlag.VALLEY


def simple_design(n=3, beta=math.pi / 4, length=36.0, flag=V):
    return TransitionGraphDesign(
        lengths=(length,) * (n + 1),
        shape_angles=(beta,) * n,
        first_flag=flag,
    )


def fig2_like_design():
    # five transition vectors, varied angles on both sides of pi/2
    return TransitionGraphDesign(
        lengths=(40, 36, 30, 42, 38),
        shape_angles=(0.9, math.pi - 0.9, 1.1, math.pi - 1.2),
        first_flag=V,
    )


class TestSynthesize:
    def test_quarter_beta_zigzag_feet(self):
        # beta=pi/4, l=36, w=36: chevron feet sit (w/2)*cot(beta) = 18 right of the apex
        d = simple_design(n=1, beta=math.pi / 4, length=36.0)
        pat = synthesize_strip(d, 36.0)
        assert pat.meta.feet_x[0] == pytest.approx(36.0 + 18.0)

    def test_arm_direction_is_beta(self):
        d = simple_design(n=1, beta=math.pi / 3, length=40.0)
        pat = synthesize_strip(d, 20.0)
        cmap = pat.crease_map()
        # find a zigzag crease that is not a cap diagonal: x > 0
        arms = [c for c in pat.creases
                if c.fold_group == FoldGroup.ZIGZAG and c.kind != CreaseKind.BORDER
                and min(pat.vertices[c.v1][0], pat.vertices[c.v2][0]) > 0]
        assert arms
        for c in arms:
            d_vec = pat.vertices[c.v2] - pat.vertices[c.v1]
            ang = math.atan2(d_vec[1], d_vec[0]) % math.pi
            # upper arm rises at beta, the lower arm is its mirror
            assert min(ang, math.pi - ang) == pytest.approx(
                min(math.pi / 3, 2 * math.pi / 3), abs=1e-9)

    def test_strip_bounding_width(self):
        pat = synthesize_strip(fig2_like_design(), 36.0)
        lo, hi = pat.bounding_box()
        assert hi[1] - lo[1] == pytest.approx(36.0)

    def test_interior_vertex_sector_angles(self):
        beta = 1.1
        d = simple_design(n=2, beta=beta, length=50.0)
        pat = synthesize_strip(d, 20.0)
        boundary = pat.boundary_vertex_ids()
        interior = [v for v in range(len(pat.vertices)) if v not in boundary]
        assert interior
        incident = {}
        for c in pat.creases:
            incident.setdefault(c.v1, []).append(c.v2)
            incident.setdefault(c.v2, []).append(c.v1)
        checked = 0
        for v in interior:
            others = incident[v]
            if len(others) != 4 or pat.vertices[v][0] <= 0:
                continue  # skip the half-unit cap vertex
            dirs = sorted(math.atan2(*(pat.vertices[o] - pat.vertices[v])[::-1])
                          for o in others)
            sectors = sorted((dirs[(i + 1) % 4] - dirs[i]) % (2 * math.pi) for i in range(4))
            # multiset {beta, beta, pi-beta, pi-beta}
            lo_pair = beta if beta < math.pi / 2 else math.pi - beta
            assert sectors[0] == pytest.approx(lo_pair, abs=1e-9)
            assert sectors[1] == pytest.approx(lo_pair, abs=1e-9)
            assert sectors[2] == pytest.approx(math.pi - lo_pair, abs=1e-9)
            assert sectors[3] == pytest.approx(math.pi - lo_pair, abs=1e-9)
            checked += 1
        assert checked >= 2

    def test_main_creases_alternate_kinds(self):
        d = fig2_like_design()
        pat = synthesize_strip(d, 36.0)
        # main creases at mid-height, ordered by x
        mains = []
        for c in pat.creases:
            p1, p2 = pat.vertices[c.v1], pat.vertices[c.v2]
            if c.fold_group == FoldGroup.MAIN and c.kind != CreaseKind.BORDER \
                    and abs(p1[1] - 18.0) < 1e-9 and abs(p2[1] - 18.0) < 1e-9 \
                    and min(p1[0], p2[0]) >= -1e-9:
                mains.append((min(p1[0], p2[0]), c.kind))
        mains.sort()
        kinds = [k for _, k in mains]
        assert len(kinds) == 5
        assert kinds[0] == CreaseKind.VALLEY
        for a, b in zip(kinds, kinds[1:]):
            assert a != b

    def test_self_overlap_rejected(self):
        # chevron offset (w/2)/tan(beta) far exceeds the 5 mm units
        d = TransitionGraphDesign(lengths=(5, 5), shape_angles=(0.05,), first_flag=V)
        with pytest.raises(StripGeometryError):
            synthesize_strip(d, 40.0)

    def test_synthesized_patterns_validate(self):
        for d in (simple_design(), fig2_like_design(), simple_design(flag=M, beta=2.2)):
            pat = synthesize_strip(d, 18.0)
            rep = validate_pattern(pat)
            assert rep.ok, rep.messages


class TestTessellate:
    def test_single_copy_identity(self):
        pat = synthesize_strip(simple_design(), 20.0)
        assert tessellate(pat, 1) is pat

    def test_three_copies_height(self):
        pat = synthesize_strip(fig2_like_design(), 36.0)
        t = tessellate(pat, 3)
        lo, hi = t.bounding_box()
        assert hi[1] - lo[1] == pytest.approx(108.0)
        assert t.copy_count == 3

    def test_seam_vertices_flat_foldable(self):
        pat = synthesize_strip(fig2_like_design(), 24.0)
        t = tessellate(pat, 2)
        rep = validate_pattern(t)
        assert rep.ok, rep.messages

    def test_vertex_budget(self):
        pat = synthesize_strip(simple_design(), 20.0)
        t = tessellate(pat, 4)
        assert len(t.vertices) <= 4 * len(pat.vertices)

    def test_rows_congruent_up_to_reflection(self):
        pat = synthesize_strip(fig2_like_design(), 24.0)
        t = tessellate(pat, 3)
        w = 24.0
        vset = {(round(x, 6), round(y, 6)) for x, y in t.vertices}
        for x, y in t.vertices:
            if y <= w + 1e-9:
                mirrored = (round(x, 6), round(2 * w - y, 6))
                assert mirrored in vset

    def test_area_additivity(self):
        pat = synthesize_strip(fig2_like_design(), 24.0)
        t = tessellate(pat, 3)
        lo, hi = t.bounding_box()
        rect = (hi[0] - lo[0]) * (hi[1] - lo[1])
        assert pattern_area(t) == pytest.approx(rect, rel=1e-9)

    def test_requires_metadata(self):
        pat = synthesize_strip(simple_design(), 20.0)
        bare = CreasePattern(vertices=pat.vertices, creases=pat.creases,
                             panels=pat.panels, unit_width=20.0, copy_count=1)
        with pytest.raises(ValueError):
            tessellate(bare, 2)


class TestValidate:
    def test_flipped_kind_breaks_maekawa(self):
        pat = synthesize_strip(simple_design(n=2, length=50.0, beta=1.1), 20.0)
        # flip one interior main crease kind
        bad = []
        flipped = False
        for c in pat.creases:
            if not flipped and c.fold_group == FoldGroup.MAIN and c.kind != CreaseKind.BORDER \
                    and min(pat.vertices[c.v1][0], pat.vertices[c.v2][0]) > 1.0:
                k = CreaseKind.MOUNTAIN if c.kind == CreaseKind.VALLEY else CreaseKind.VALLEY
                bad.append(Crease(c.v1, c.v2, k, c.fold_group))
                flipped = True
            else:
                bad.append(c)
        assert flipped
        mod = CreasePattern(vertices=pat.vertices, creases=bad, panels=pat.panels,
                            unit_width=20.0, copy_count=1)
        rep = validate_pattern(mod)
        assert not rep.ok
        failures = [r for r in rep.vertex_reports if r.maekawa_delta != 2]
        assert len(failures) == 2

    def test_crossing_creases_reported(self):
        verts = np.array([[0, 0], [10, 0], [0, 10], [10, 10],
                          [0, 5], [10, 5], [5, 0], [5, 10]])
        creases = [
            Crease(4, 5, CreaseKind.MOUNTAIN, FoldGroup.MAIN),
            Crease(6, 7, CreaseKind.VALLEY, FoldGroup.ZIGZAG),
        ]
        pat = CreasePattern(vertices=verts, creases=creases, panels=[],
                            unit_width=10.0, copy_count=1)
        rep = validate_pattern(pat)
        assert not rep.ok
        assert rep.planarity_violations

import math

import numpy as np
import pytest

from foldstring.fabrication import (
    FabricationParams,
    HolePlacementError,
    generate_meshes,
    infill_volume_analytic,
    inset_panel,
    max_fold_angle,
    operation_region,
    place_holes,
)
from foldstring.geometry import InsetError, polygon_area
from foldstring.mesh import mesh_diagnostics, read_stl, write_stl
from foldstring.pattern import synthesize_strip, tessellate
from foldstring.transition import EntryFlag, TransitionGraphDesign

V = EntryFlag.VALLEY


def fig4_params(**kw):
    defaults = dict(inner_bias=3.0, panel_height=2.2, membrane_thickness=0.4)
    defaults.update(kw)
    return FabricationParams(**defaults)


def miura_pattern(units=3, copies=2, length=50.0, beta=1.1, w=30.0):
    d = TransitionGraphDesign((length,) * (units + 1), (beta,) * units, V)
    return tessellate(synthesize_strip(d, w), copies)


class TestParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            FabricationParams(inner_bias=0, panel_height=2, membrane_thickness=0.4)
        with pytest.raises(ValueError):
            FabricationParams(inner_bias=3, panel_height=0.3, membrane_thickness=0.4)
        with pytest.raises(ValueError):
            FabricationParams(inner_bias=3, panel_height=2, membrane_thickness=0.4,
                              midlayer_extra_bias=0.0)


class TestMaxFoldAngle:
    def test_reference_values(self):
        # b=3, h=2.2, t=0.4: limit ~146.6 deg, ratio ~81.4%
        th = max_fold_angle(fig4_params())
        assert math.degrees(th) == pytest.approx(146.6, abs=0.05)
        assert th / math.pi * 100 == pytest.approx(81.4, abs=0.1)

    def test_zero_bias_limit(self):
        th = max_fold_angle(fig4_params(inner_bias=1e-12))
        assert th == pytest.approx(0.0, abs=1e-9)

    def test_thin_shell_limit(self):
        th = max_fold_angle(fig4_params(panel_height=0.4000001,
                                        membrane_thickness=0.4))
        assert th == pytest.approx(math.pi, abs=1e-4)


class TestInset:
    def test_square(self):
        sq = [(0, 0), (10, 0), (10, 10), (0, 10)]
        out = inset_panel(np.array(sq, float), 3.0)
        assert polygon_area(out) == pytest.approx(16.0)
        assert np.allclose(np.mean(out, axis=0), (5.0, 5.0))

    def test_parallelogram_half_plane_oracle(self):
        # inset of a convex polygon == intersection of inward half planes;
        # check the area against a dense half-plane rasterization oracle
        para = np.array([(0, 0), (36, 0), (54, 18), (18, 18)], float)
        bias = 3.0
        out = inset_panel(para, bias)
        # oracle: rasterize
        xs = np.linspace(-5, 60, 700)
        ys = np.linspace(-5, 25, 350)
        X, Y = np.meshgrid(xs, ys)
        inside = np.ones_like(X, bool)
        m = len(para)
        for i in range(m):
            a, b = para[i], para[(i + 1) % m]
            d = b - a
            ln = np.hypot(*d)
            nx, ny = -d[1] / ln, d[0] / ln
            inside &= ((X - a[0]) * nx + (Y - a[1]) * ny) >= bias
        cell = (xs[1] - xs[0]) * (ys[1] - ys[0])
        oracle_area = inside.sum() * cell
        assert polygon_area(out) == pytest.approx(oracle_area, rel=0.01)

    def test_bias_exceeds_inradius(self):
        sq = np.array([(0, 0), (10, 0), (10, 10), (0, 10)], float)
        with pytest.raises(InsetError):
            inset_panel(sq, 5.0, panel_id=7)

    def test_near_limit_valid(self):
        sq = np.array([(0, 0), (10, 0), (10, 10), (0, 10)], float)
        out = inset_panel(sq, 4.999)
        assert polygon_area(out) > 0

    def test_monotone_nesting(self):
        sq = np.array([(0, 0), (20, 0), (20, 12), (0, 12)], float)
        a = inset_panel(sq, 2.0)
        b = inset_panel(sq, 4.0)
        from foldstring.geometry import point_in_polygon
        assert all(point_in_polygon(p, a) for p in b)


class TestOperationRegion:
    def test_offset_arithmetic(self):
        sq = np.array([(0, 0), (20, 0), (20, 20), (0, 20)], float)
        params = fig4_params(hole_radius=1.5, hole_margin=0.5)
        region = operation_region(sq, params)
        # inset by 3 + 1.5 + 0.5 = 5: square of side 10
        assert polygon_area(region) == pytest.approx(100.0)

    def test_zero_radius(self):
        sq = np.array([(0, 0), (20, 0), (20, 20), (0, 20)], float)
        params = fig4_params(hole_radius=0.0)
        region = operation_region(sq, params)
        assert polygon_area(region) == pytest.approx((20 - 7) ** 2)

    def test_empty_region_none(self):
        sq = np.array([(0, 0), (8, 0), (8, 8), (0, 8)], float)
        assert operation_region(sq, fig4_params()) is None


class TestPlaceHoles:
    def test_auto_center_one_per_panel(self):
        pat = miura_pattern()
        holes = place_holes(pat, fig4_params())
        with_region = 0
        for pid in range(len(pat.panels)):
            if operation_region(pat.panel_polygon(pid), fig4_params(), pid) is not None:
                with_region += 1
        assert len(holes) == with_region
        assert len({h.anchor.panel for h in holes}) == len(holes)

    def test_manual_inside_ok(self):
        pat = miura_pattern()
        c = pat.panel_polygon(4).mean(axis=0)
        holes = place_holes(pat, fig4_params(), manual=[(4, tuple(c))])
        assert len(holes) == 1

    def test_manual_outside_rejected(self):
        pat = miura_pattern()
        with pytest.raises(HolePlacementError) as e:
            place_holes(pat, fig4_params(), manual=[(4, (0.0, -50.0))])
        assert "panel 4" in str(e.value)

    def test_boundary_epsilon(self):
        sqd = TransitionGraphDesign((40, 40), (1.0,), V)
        pat = synthesize_strip(sqd, 30.0)
        params = fig4_params()
        pid = 3
        region = operation_region(pat.panel_polygon(pid), params, pid)
        # a point just inside the region edge midpoint
        mid = (region[0] + region[1]) / 2
        centroid = region.mean(axis=0)
        inward = mid + 1e-5 * (centroid - mid)
        outward = mid - 1e-3 * (centroid - mid)
        assert place_holes(pat, params, manual=[(pid, tuple(inward))])
        with pytest.raises(HolePlacementError):
            place_holes(pat, params, manual=[(pid, tuple(outward))])


class TestGenerateMeshes:
    def test_four_watertight_meshes(self):
        pat = miura_pattern(units=2, copies=2)
        params = fig4_params()
        holes = place_holes(pat, params)
        model = generate_meshes(pat, params, holes)
        assert set(model.meshes) == {"infills", "mid_layers", "shells", "creases"}
        for name, mesh in model.meshes.items():
            rep = mesh_diagnostics(mesh)
            assert rep.watertight, (name, rep.messages)
            assert rep.signed_volume > 0, name

    def test_infill_volume_analytic(self):
        pat = miura_pattern(units=2, copies=2)
        params = fig4_params()
        holes = place_holes(pat, params)
        model = generate_meshes(pat, params, holes)
        vol = mesh_diagnostics(model.meshes["infills"]).signed_volume
        assert vol == pytest.approx(infill_volume_analytic(pat, params, holes),
                                    rel=1e-3)

    def test_crease_strip_width_spans_gap(self):
        pat = miura_pattern(units=1, copies=1, length=60, beta=1.0, w=40)
        params = fig4_params()
        model = generate_meshes(pat, params, [])
        creases = model.meshes["creases"]
        assert creases.triangle_count > 0
        # strips are t thick at the mid-plane
        lo, hi = creases.bounding_box()
        assert hi[2] - lo[2] == pytest.approx(params.membrane_thickness)

    def test_bounding_box_is_pattern_extents_times_height(self):
        pat = miura_pattern(units=2, copies=2)
        params = fig4_params()
        model = generate_meshes(pat, params, [])
        lo = np.full(3, np.inf)
        hi = np.full(3, -np.inf)
        for m in model.meshes.values():
            if m.triangle_count == 0:
                continue
            l, h = m.bounding_box()
            lo = np.minimum(lo, l)
            hi = np.maximum(hi, h)
        plo, phi = pat.bounding_box()
        assert np.allclose(lo[:2], plo, atol=1e-9)
        assert np.allclose(hi[:2], phi, atol=1e-9)
        assert hi[2] - lo[2] == pytest.approx(params.panel_height)

    def test_meshes_pairwise_disjoint_sampled(self):
        pat = miura_pattern(units=1, copies=1, length=60, beta=1.0, w=40)
        params = fig4_params()
        holes = place_holes(pat, params)
        model = generate_meshes(pat, params, holes)
        rng = np.random.default_rng(0)
        # membership test by z-band and xy-region logic is implicit; sample
        # points inside each mesh's AABB interior and verify no point is
        # claimed by two meshes (crude but effective for prisms)
        from foldstring.geometry import point_in_polygon

        def inside(model_name, p):
            x, y, z = p
            t = params.membrane_thickness
            h = params.panel_height
            b = params.inner_bias
            e = params.midlayer_extra_bias
            if model_name == "infills":
                if not (t / 2 < abs(z) < h / 2):
                    return False
                for pid in range(len(pat.panels)):
                    inner = inset_panel(pat.panel_polygon(pid), b, pid)
                    if point_in_polygon((x, y), inner, -1e-9):
                        for hole in holes:
                            if hole.anchor.panel == pid:
                                hx, hy = hole.anchor.position
                                if (x - hx) ** 2 + (y - hy) ** 2 < hole.radius ** 2:
                                    return False
                        return True
                return False
            if model_name == "mid_layers":
                if not (-t / 2 < z < t / 2):
                    return False
                for pid in range(len(pat.panels)):
                    mid = inset_panel(pat.panel_polygon(pid), b + e, pid)
                    if point_in_polygon((x, y), mid, -1e-9):
                        for hole in holes:
                            if hole.anchor.panel == pid:
                                hx, hy = hole.anchor.position
                                if (x - hx) ** 2 + (y - hy) ** 2 < hole.radius ** 2:
                                    return False
                        return True
                return False
            return False

        lo, hi = pat.bounding_box()
        pts = np.column_stack([
            rng.uniform(lo[0], hi[0], 400),
            rng.uniform(lo[1], hi[1], 400),
            rng.uniform(-params.panel_height / 2, params.panel_height / 2, 400),
        ])
        for p in pts:
            assert not (inside("infills", p) and inside("mid_layers", p))

    def test_stl_files_written(self, tmp_path):
        pat = miura_pattern(units=1, copies=1, length=60, beta=1.0, w=40)
        params = fig4_params()
        model = generate_meshes(pat, params, place_holes(pat, params))
        paths = model.write_stl_files(tmp_path)
        assert len(paths) == 4
        names = sorted(p.split("/")[-1] for p in paths)
        assert names == ["creases.stl", "infills.stl", "mid_layers.stl", "shells.stl"]
        for p in paths:
            back = read_stl(open(p, "rb").read())
            rep = mesh_diagnostics(back)
            if back.triangle_count:
                assert rep.watertight

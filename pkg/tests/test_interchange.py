import json
import math

import numpy as np
import pytest

from foldstring.fabrication import FabricationParams, Hole, place_holes
from foldstring.geometry import Rect
from foldstring.interchange import (
    DxfImportError,
    Project,
    ProjectError,
    export_dxf,
    export_svg,
    parse_dxf,
    project_from_dict,
    project_load,
    project_save,
    project_to_dict,
)
from foldstring.kinematics import AnchoredPoint
from foldstring.optimize import fig3_task
from foldstring.pattern import CreaseKind, synthesize_strip, tessellate, validate_pattern
from foldstring.stringsim import reference_scenario
from foldstring.transition import EntryFlag, TransitionGraphDesign

V = EntryFlag.VALLEY


def dxf_line(x1, y1, x2, y2, layer):
    return "\n".join(["0", "LINE", "8", layer,
                      "10", str(x1), "20", str(y1), "30", "0.0",
                      "11", str(x2), "21", str(y2), "31", "0.0", ""])


def dxf_doc(body):
    return "0\nSECTION\n2\nENTITIES\n" + body + "0\nENDSEC\n0\nEOF\n"


class TestParseDxf:
    def test_single_line(self):
        doc = dxf_doc(dxf_line(0, 0, 36, 0, "MOUNTAIN")
                      + dxf_line(36, 0, 36, 10, "BORDER")
                      + dxf_line(36, 10, 0, 10, "BORDER")
                      + dxf_line(0, 10, 0, 0, "BORDER")
                      + dxf_line(0, 0, 36, 0, "MOUNTAIN"))
        # a mountain line duplicated and a border rectangle above it
        pat = parse_dxf(doc)
        kinds = [c.kind for c in pat.creases]
        assert kinds.count(CreaseKind.MOUNTAIN) == 1
        assert len(pat.vertices) == 4

    def test_square_with_interior_valley(self):
        doc = dxf_doc(
            dxf_line(0, 0, 20, 0, "BORDER") + dxf_line(20, 0, 20, 20, "BORDER")
            + dxf_line(20, 20, 0, 20, "BORDER") + dxf_line(0, 20, 0, 0, "BORDER")
            + dxf_line(0, 10, 20, 10, "VALLEY")
            + dxf_line(0, 0, 0, 10, "BORDER") + dxf_line(0, 10, 0, 20, "BORDER")
            + dxf_line(20, 0, 20, 10, "BORDER") + dxf_line(20, 10, 20, 20, "BORDER"))
        pat = parse_dxf(doc)
        # the full-height side borders coexist with split ones after welding
        assert len(pat.panels) >= 2

    def test_case_insensitive_layers(self):
        doc = dxf_doc(
            dxf_line(0, 0, 10, 0, "border") + dxf_line(10, 0, 10, 10, "Border")
            + dxf_line(10, 10, 0, 10, "BORDER") + dxf_line(0, 10, 0, 0, "bOrDeR"))
        pat = parse_dxf(doc)
        assert all(c.kind == CreaseKind.BORDER for c in pat.creases)

    def test_crossing_creases_rejected(self):
        doc = dxf_doc(
            dxf_line(0, 0, 10, 0, "BORDER") + dxf_line(10, 0, 10, 10, "BORDER")
            + dxf_line(10, 10, 0, 10, "BORDER") + dxf_line(0, 10, 0, 0, "BORDER")
            + dxf_line(0, 0, 10, 10, "VALLEY") + dxf_line(0, 10, 10, 0, "MOUNTAIN"))
        with pytest.raises(DxfImportError) as e:
            parse_dxf(doc)
        assert "cross" in str(e.value)

    def test_dangling_crease_rejected(self):
        doc = dxf_doc(
            dxf_line(0, 0, 10, 0, "BORDER") + dxf_line(10, 0, 10, 10, "BORDER")
            + dxf_line(10, 10, 0, 10, "BORDER") + dxf_line(0, 10, 0, 0, "BORDER")
            + dxf_line(5, 5, 8, 5, "VALLEY"))
        with pytest.raises(DxfImportError) as e:
            parse_dxf(doc)
        assert "dangling" in str(e.value) or "unclosed" in str(e.value)

    def test_unsupported_entities_warn(self):
        doc = dxf_doc(
            "0\nCIRCLE\n8\n0\n10\n5\n20\n5\n40\n2\n"
            + dxf_line(0, 0, 10, 0, "BORDER") + dxf_line(10, 0, 10, 10, "BORDER")
            + dxf_line(10, 10, 0, 10, "BORDER") + dxf_line(0, 10, 0, 0, "BORDER"))
        pat = parse_dxf(doc)
        assert any("CIRCLE" in w for w in pat.import_warnings)

    def test_lwpolyline_exploded(self):
        body = ("0\nLWPOLYLINE\n8\nBORDER\n90\n4\n70\n1\n"
                "10\n0\n20\n0\n10\n10\n20\n0\n10\n10\n20\n10\n10\n0\n20\n10\n")
        pat = parse_dxf(dxf_doc(body))
        assert len(pat.creases) == 4
        assert len(pat.panels) == 1


class TestDxfRoundTrip:
    def test_export_import_preserves(self):
        d = TransitionGraphDesign((40, 36, 30), (0.9, 2.2), V)
        pat = tessellate(synthesize_strip(d, 24.0), 2)
        back = parse_dxf(export_dxf(pat))
        assert len(back.creases) == len(pat.creases)
        kinds = sorted(c.kind for c in pat.creases)
        kinds_back = sorted(c.kind for c in back.creases)
        assert kinds == kinds_back
        # endpoints preserved within the weld tolerance
        orig = sorted((tuple(np.round(sorted([tuple(pat.vertices[c.v1]),
                                              tuple(pat.vertices[c.v2])]), 3).ravel()))
                      for c in pat.creases)
        got = sorted((tuple(np.round(sorted([tuple(back.vertices[c.v1]),
                                             tuple(back.vertices[c.v2])]), 3).ravel()))
                     for c in back.creases)
        for a, b in zip(orig, got):
            assert np.allclose(a, b, atol=1e-3)

    def test_reimport_identical(self):
        d = TransitionGraphDesign((40, 36), (1.1,), V)
        pat = synthesize_strip(d, 20.0)
        once = parse_dxf(export_dxf(pat))
        twice = parse_dxf(export_dxf(once))
        assert len(once.creases) == len(twice.creases)
        assert np.allclose(np.sort(once.vertices, axis=0),
                           np.sort(twice.vertices, axis=0), atol=1e-3)

    def test_imported_pattern_validates(self):
        d = TransitionGraphDesign((40, 36, 30), (0.9, 2.2), V)
        pat = tessellate(synthesize_strip(d, 24.0), 2)
        back = parse_dxf(export_dxf(pat))
        rep = validate_pattern(back)
        assert rep.ok, rep.messages


class TestSvg:
    def test_empty_pattern(self):
        from foldstring.pattern import CreasePattern
        pat = CreasePattern(vertices=np.zeros((0, 2)), creases=[], panels=[],
                            unit_width=1.0, copy_count=1)
        data = export_svg(pat)
        assert data.startswith(b"<?xml")
        assert b"<svg" in data

    def test_styles_present(self):
        d = TransitionGraphDesign((40, 36), (1.1,), V)
        pat = synthesize_strip(d, 20.0)
        svg = export_svg(pat).decode()
        assert "stroke-dasharray" in svg     # valleys dashed
        assert 'stroke-width="1.2"' in svg   # border heavy
        assert svg.count("<line") == len(pat.creases)

    def test_deterministic(self):
        d = TransitionGraphDesign((40, 36), (1.1,), V)
        pat = synthesize_strip(d, 20.0)
        assert export_svg(pat) == export_svg(pat)


class TestProject:
    def full_project(self):
        d = TransitionGraphDesign((40, 36, 30), (0.9, 2.2), V)
        p = Project(design=d, unit_width=24.0, copies=2, task=fig3_task())
        pat = p.pattern()
        p.fab = FabricationParams(inner_bias=3.0, panel_height=2.2,
                                  membrane_thickness=0.4)
        p.holes = place_holes(pat, p.fab)
        _, plan, tsa, _ = reference_scenario()
        return p

    def test_empty_round_trip(self):
        p = Project()
        q = project_load(project_save(p))
        assert project_to_dict(p) == project_to_dict(q)

    def test_full_round_trip(self):
        p = self.full_project()
        q = project_load(project_save(p))
        assert project_to_dict(p) == project_to_dict(q)

    def test_decimal_values_preserved(self):
        p = Project(task=fig3_task())
        data = project_save(p).decode()
        assert "133.3" in data
        assert "250.0" in data or "250" in data
        q = project_load(data)
        assert q.task.waypoints[1] == (50.0, 133.3)

    def test_unknown_fields_survive(self):
        p = Project()
        doc = project_to_dict(p)
        doc["future_feature"] = {"nested": [1, 2, 3]}
        q = project_from_dict(doc)
        assert project_to_dict(q)["future_feature"] == {"nested": [1, 2, 3]}

    def test_truncated_reports_offset(self):
        p = self.full_project()
        data = project_save(p)
        with pytest.raises(ProjectError) as e:
            project_load(data[: len(data) // 2])
        assert "byte offset" in str(e.value)

    def test_dangling_hole_panel_rejected(self):
        p = self.full_project()
        p.holes.append(Hole(AnchoredPoint(9999, (1.0, 1.0)), 1.5))
        doc = project_to_dict(p)
        with pytest.raises(ProjectError) as e:
            project_from_dict(doc)
        assert "panel id" in str(e.value)

    def test_version_checks(self):
        with pytest.raises(ProjectError):
            project_from_dict({"version": 99})
        with pytest.raises(ProjectError):
            project_from_dict({})

    def test_imported_pattern_round_trip(self):
        d = TransitionGraphDesign((40, 36), (1.1,), V)
        pat = synthesize_strip(d, 20.0)
        back = parse_dxf(export_dxf(pat))
        p = Project(imported=back)
        q = project_load(project_save(p))
        assert project_to_dict(p) == project_to_dict(q)
        assert len(q.pattern().panels) == len(pat.panels)

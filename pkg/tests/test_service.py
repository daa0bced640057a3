import json
import math
import threading
import time
import urllib.request

import pytest

from foldstring.interchange import Project, project_to_dict
from foldstring.optimize import fig3_task
from foldstring.service import StudioService
from foldstring.stringsim import measure_initial_lengths, reference_scenario
from foldstring.kinematics import embed_fold
from foldstring.transition import EntryFlag, TransitionGraphDesign


@pytest.fixture
def service():
    d = TransitionGraphDesign((40, 36, 30), (0.9, 2.2), EntryFlag.VALLEY)
    svc = StudioService(project=Project(design=d, unit_width=24.0, copies=2,
                                        task=fig3_task(unit_count=3)))
    port = svc.start_background()
    yield svc, f"http://127.0.0.1:{port}"
    svc.stop()


def call(base, path, payload=None, method=None):
    data = None if payload is None else json.dumps(payload).encode()
    req = urllib.request.Request(base + path, data=data,
                                 method=method or ("POST" if data else "GET"),
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        body = resp.read()
        ctype = resp.headers.get("Content-Type", "")
        if "json" in ctype:
            return json.loads(body)
        return body


class TestProjectApi:
    def test_get_and_put(self, service):
        svc, base = service
        doc = call(base, "/api/project")
        assert doc["version"] == 1
        doc["future"] = {"x": 1}
        assert call(base, "/api/project", doc, method="PUT")["ok"]
        doc2 = call(base, "/api/project")
        assert doc2["future"] == {"x": 1}

    def test_concurrent_reads(self, service):
        svc, base = service
        results = []

        def read():
            results.append(call(base, "/api/project"))

        threads = [threading.Thread(target=read) for _ in range(8)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(results) == 8
        assert all(r == results[0] for r in results)


class TestGeometryApi:
    def test_fold_flat_identity(self, service):
        svc, base = service
        out = call(base, "/api/fold", {"theta": 0.0})
        assert out["max_residual"] == 0.0
        pat = svc.project.pattern()
        flat = pat.panel_polygon(0)
        got = out["panels"][0]
        for (x, y), (gx, gy, gz) in zip(flat, got):
            assert abs(gx - x) < 1e-9 and abs(gy - y) < 1e-9 and abs(gz) < 1e-12

    def test_fitness_perfect_design_scores_60(self, service):
        svc, base = service
        # endpoint distances zero by construction: task waypoints set to the
        # design's own flat/folded endpoints
        from foldstring.transition import fold_state
        d = svc.project.design
        e0 = fold_state(d, 0.0).endpoint
        e1 = fold_state(d, math.pi).endpoint
        task = {
            "start_anchor": [0, 0],
            "waypoints": [list(e0), list(e1)],
            "reward_weight": 120.0,
            "unit_count": d.unit_count,
        }
        out = call(base, "/api/fitness", {"task": task})
        assert out["fitness"] == pytest.approx(60.0, abs=1e-9)

    def test_trajectory_46_points(self, service):
        svc, base = service
        out = call(base, "/api/trajectory", {})
        assert len(out["endpoints"]) == 46

    def test_design_roundtrip_updates_project(self, service):
        svc, base = service
        out = call(base, "/api/design", {
            "design": {"lengths": [30, 30], "shape_angles": [1.0],
                       "first_flag": "mountain"},
            "unit_width": 18.0, "copies": 1,
        })
        assert out["validation_ok"]
        assert svc.project.design.first_flag == EntryFlag.MOUNTAIN
        assert "svg" in out and out["svg"].startswith("<?xml")

    def test_error_status(self, service):
        svc, base = service
        with pytest.raises(urllib.error.HTTPError) as e:
            call(base, "/api/fold", {"theta": 9.0})
        assert e.value.code == 400


class TestJobs:
    def test_optimize_job_lifecycle(self, service):
        svc, base = service
        out = call(base, "/api/jobs/optimize", {"runs": 2, "seed": 5, "budget": 10})
        job_id = out["job_id"]
        deadline = time.time() + 60
        status = None
        while time.time() < deadline:
            status = call(base, f"/api/jobs/{job_id}")
            if status["status"] in ("done", "failed"):
                break
            time.sleep(0.1)
        assert status["status"] == "done", status
        assert len(status["result"]["ranking"]) == 2
        curves = status["result"]["ranking"][0]["best_curve"]
        assert all(b >= a - 1e-12 for a, b in zip(curves, curves[1:]))

    def test_simulate_job(self):
        pattern, plan, config, fab = reference_scenario()
        plan = measure_initial_lengths(plan, embed_fold(pattern, 0.0, frame="seed"),
                                       config)
        svc = StudioService(project=Project(
            design=pattern.meta.design, unit_width=30.0, copies=4,
            routing=plan, tsa=config, fab=fab))
        port = svc.start_background()
        base = f"http://127.0.0.1:{port}"
        try:
            out = call(base, "/api/jobs/simulate", {"twist_stop": 2 * math.pi})
            job_id = out["job_id"]
            deadline = time.time() + 120
            status = None
            while time.time() < deadline:
                status = call(base, f"/api/jobs/{job_id}")
                if status["status"] in ("done", "failed"):
                    break
                time.sleep(0.2)
            assert status["status"] == "done", status
            states = status["result"]["states"]
            assert len(states) > 10
            folds = [s["fold_theta"] for s in states]
            assert all(b >= a for a, b in zip(folds, folds[1:]))
        finally:
            svc.stop()

    def test_unknown_job_404(self, service):
        svc, base = service
        with pytest.raises(urllib.error.HTTPError) as e:
            call(base, "/api/jobs/doesnotexist")
        assert e.value.code == 404


class TestParity:
    def test_service_fitness_equals_library(self, service):
        svc, base = service
        from foldstring.optimize import evaluate_fitness
        expected = evaluate_fitness(svc.project.design, svc.project.task)
        out = call(base, "/api/fitness", {})
        assert out["fitness"] == expected.fitness
        assert out["end_distance"] == expected.end_distance

    def test_service_svg_equals_library(self, service):
        svc, base = service
        from foldstring.interchange import export_svg
        body = call(base, "/api/export/svg")
        assert body == export_svg(svc.project.pattern())

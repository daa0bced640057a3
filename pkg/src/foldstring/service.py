"""Local HTTP service backing the studio frontend.

JSON over HTTP on localhost, mirroring the CLI verbs on a single project
document.  Reads run concurrently; project mutations serialize through a
lock.  Long work (optimization, simulation) runs as background jobs that
clients poll by id; each job publishes an immutable progress snapshot.
"""

from __future__ import annotations

import json
import math
import threading
import traceback
import uuid
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from . import interchange
from .fabrication import FabricationParams, generate_meshes, max_fold_angle, place_holes
from .kinematics import embed_fold
from .mesh import write_stl
from .optimize import design_arm, evaluate_fitness
from .pattern import validate_pattern
from .stringsim import measure_initial_lengths, solve_quasi_static, validate_routing
from .transition import (
    EntryFlag,
    TransitionGraphDesign,
    fold_state_batch,
    trajectory_thetas,
)


class ApiError(Exception):
    def __init__(self, message, status=400):
        super().__init__(message)
        self.status = status


class Job:
    def __init__(self, kind):
        self.id = uuid.uuid4().hex[:12]
        self.kind = kind
        self.lock = threading.Lock()
        self.state = {"id": self.id, "kind": kind, "status": "running",
                      "progress": 0.0, "result": None, "error": None}

    def update(self, **kw):
        with self.lock:
            self.state = {**self.state, **kw}

    def snapshot(self):
        with self.lock:
            return dict(self.state)


class StudioService:
    def __init__(self, project=None, frontend_dir=None):
        self.project = project or interchange.Project()
        self.write_lock = threading.RLock()
        self.jobs = {}
        self.jobs_lock = threading.Lock()
        self.frontend_dir = frontend_dir
        self.httpd = None

    # ------------------------------------------------------------ plumbing

    def serve_forever(self, port, host="127.0.0.1"):
        self.httpd = self._make_server(port, host)
        try:
            self.httpd.serve_forever()
        finally:
            self.httpd.server_close()

    def start_background(self, port=0, host="127.0.0.1"):
        """Start on a thread; returns the bound port (0 picks a free one)."""
        self.httpd = self._make_server(port, host)
        t = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        t.start()
        return self.httpd.server_address[1]

    def stop(self):
        if self.httpd:
            self.httpd.shutdown()
            self.httpd.server_close()
            self.httpd = None

    def _make_server(self, port, host):
        service = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, fmt, *args):
                pass

            def _send(self, status, payload, content_type="application/json"):
                body = payload if isinstance(payload, bytes) else \
                    (json.dumps(payload, sort_keys=True) + "\n").encode()
                self.send_response(status)
                self.send_header("Content-Type", content_type)
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def _body(self):
                n = int(self.headers.get("Content-Length") or 0)
                if n == 0:
                    return {}
                try:
                    return json.loads(self.rfile.read(n))
                except json.JSONDecodeError as e:
                    raise ApiError(f"bad JSON body: {e.msg} at {e.pos}")

            def _dispatch(self, method):
                try:
                    out = service.handle(method, self.path, self._body() if
                                         method in ("POST", "PUT") else {})
                    if isinstance(out, tuple):
                        self._send(200, out[0], content_type=out[1])
                    else:
                        self._send(200, out)
                except ApiError as e:
                    self._send(e.status, {"error": str(e)})
                except Exception as e:
                    self._send(500, {"error": f"{type(e).__name__}: {e}",
                                     "trace": traceback.format_exc()})

            def do_GET(self):
                self._dispatch("GET")

            def do_POST(self):
                self._dispatch("POST")

            def do_PUT(self):
                self._dispatch("PUT")

        return ThreadingHTTPServer((host, port), Handler)

    # ------------------------------------------------------------ routing

    def handle(self, method, path, body):
        path = path.split("?")[0].rstrip("/") or "/"
        if path == "/api/project" and method == "GET":
            return interchange.project_to_dict(self.project)
        if path == "/api/project" and method == "PUT":
            with self.write_lock:
                self.project = interchange.project_from_dict(body)
            return {"ok": True}
        if path == "/api/design" and method == "POST":
            return self.api_design(body)
        if path == "/api/trajectory" and method == "POST":
            return self.api_trajectory(body)
        if path == "/api/fitness" and method == "POST":
            return self.api_fitness(body)
        if path == "/api/fold" and method == "POST":
            return self.api_fold(body)
        if path == "/api/validate-routing" and method == "POST":
            return self.api_validate_routing(body)
        if path == "/api/fabricate" and method == "POST":
            return self.api_fabricate(body)
        if path == "/api/jobs/optimize" and method == "POST":
            return self.api_job(self._run_optimize, "optimize", body)
        if path == "/api/jobs/simulate" and method == "POST":
            return self.api_job(self._run_simulate, "simulate", body)
        if path.startswith("/api/jobs/") and method == "GET":
            job_id = path.rsplit("/", 1)[1]
            with self.jobs_lock:
                job = self.jobs.get(job_id)
            if job is None:
                raise ApiError(f"unknown job {job_id}", status=404)
            return job.snapshot()
        if path == "/api/export/svg" and method == "GET":
            return interchange.export_svg(self._pattern()), "image/svg+xml"
        if path == "/api/export/dxf" and method == "GET":
            return interchange.export_dxf(self._pattern()), "application/dxf"
        if method == "GET":
            return self._static(path)
        raise ApiError(f"no route {method} {path}", status=404)

    def _static(self, path):
        import os
        if self.frontend_dir is None:
            raise ApiError(f"no route GET {path}", status=404)
        rel = "index.html" if path == "/" else path.lstrip("/")
        full = os.path.normpath(os.path.join(self.frontend_dir, rel))
        if not full.startswith(os.path.normpath(self.frontend_dir)) \
                or not os.path.isfile(full):
            raise ApiError(f"not found: {path}", status=404)
        ctype = {"html": "text/html", "js": "text/javascript",
                 "css": "text/css", "map": "application/json",
                 "svg": "image/svg+xml"}.get(full.rsplit(".", 1)[-1],
                                             "application/octet-stream")
        with open(full, "rb") as fh:
            return fh.read(), ctype

    # ----------------------------------------------------------- handlers

    def _pattern(self):
        try:
            return self.project.pattern()
        except interchange.ProjectError as e:
            raise ApiError(str(e))

    def _design_from(self, body):
        if "design" in body:
            return interchange._design_from_dict(body["design"])
        if self.project.design is not None:
            return self.project.design
        raise ApiError("no design in request or project")

    def api_design(self, body):
        design = interchange._design_from_dict(body["design"])
        unit_width = float(body.get("unit_width") or self.project.unit_width or 30.0)
        copies = int(body.get("copies") or self.project.copies or 1)
        try:
            from .pattern import StripGeometryError, synthesize_strip, tessellate
            pattern = tessellate(synthesize_strip(design, unit_width), copies)
        except ValueError as e:
            raise ApiError(str(e))
        rep = validate_pattern(pattern)
        with self.write_lock:
            self.project.design = design
            self.project.unit_width = unit_width
            self.project.copies = copies
            self.project.imported = None
        return {
            "panels": len(pattern.panels),
            "creases": len(pattern.creases),
            "validation_ok": rep.ok,
            "bbox": [list(map(float, v)) for v in pattern.bounding_box()],
            "svg": interchange.export_svg(pattern).decode(),
        }

    def api_trajectory(self, body):
        design = self._design_from(body)
        thetas = trajectory_thetas()
        pts = fold_state_batch(design, thetas)
        return {"thetas": thetas.tolist(), "endpoints": pts.tolist()}

    def api_fitness(self, body):
        design = self._design_from(body)
        task = interchange._task_from_dict(body["task"]) if "task" in body \
            else self.project.task
        if task is None:
            raise ApiError("no task in request or project")
        b = evaluate_fitness(design, task)
        return {
            "fitness": b.fitness,
            "start_distance": b.start_distance,
            "end_distance": b.end_distance,
            "improper_count": b.improper_count,
            "prohibited_hit": b.prohibited_hit,
        }

    def api_fold(self, body):
        theta = float(body.get("theta", 0.0))
        frame = body.get("frame", "tg")
        pattern = self._pattern()
        try:
            geom = embed_fold(pattern, theta, frame=frame)
        except ValueError as e:
            raise ApiError(str(e))
        out = {
            "theta": theta,
            "max_residual": geom.max_residual,
            "panels": [geom.panel_vertices_world(p).tolist()
                       for p in range(len(pattern.panels))],
        }
        if self.project.fab is not None:
            out["theta_max"] = max_fold_angle(self.project.fab)
        return out

    def api_validate_routing(self, body):
        if self.project.routing is None:
            raise ApiError("project has no routing section")
        rep = validate_routing(self.project.routing, self._pattern())
        return {
            "ok": rep.ok,
            "violations": [
                {"string": v.string, "segment": v.segment, "message": v.message}
                for v in rep.violations
            ],
        }

    def api_fabricate(self, body):
        pattern = self._pattern()
        params = self.project.fab
        if params is None:
            p = body.get("params") or {}
            params = FabricationParams(
                inner_bias=float(p.get("inner_bias", 3.0)),
                panel_height=float(p.get("panel_height", 2.2)),
                membrane_thickness=float(p.get("membrane_thickness", 0.4)),
            )
        holes = self.project.holes or place_holes(pattern, params)
        model = generate_meshes(pattern, params, holes)
        diag = model.diagnostics()
        return {
            "theta_max": max_fold_angle(params),
            "holes": len(holes),
            "meshes": {name: {"triangles": d.triangle_count,
                              "watertight": d.watertight,
                              "volume": d.signed_volume}
                       for name, d in diag.items()},
            "warnings": model.warnings,
        }

    # --------------------------------------------------------------- jobs

    def api_job(self, runner, kind, body):
        job = Job(kind)
        with self.jobs_lock:
            self.jobs[job.id] = job
        t = threading.Thread(target=self._job_wrapper, args=(runner, job, body),
                             daemon=True)
        t.start()
        return {"job_id": job.id}

    def _job_wrapper(self, runner, job, body):
        try:
            result = runner(job, body)
            job.update(status="done", progress=1.0, result=result)
        except Exception as e:
            job.update(status="failed", error=f"{type(e).__name__}: {e}")

    def _run_optimize(self, job, body):
        task = interchange._task_from_dict(body["task"]) if "task" in body \
            else self.project.task
        if task is None:
            raise ValueError("no task in request or project")
        runs = int(body.get("runs", 10))
        seed = int(body.get("seed", 0))
        budget = int(body.get("budget", 300))
        results = []
        for k in range(runs):
            chunk = design_arm(task, runs=1, seed=seed + k, budget=budget)
            results.extend(chunk)
            job.update(progress=(k + 1) / runs)
        results.sort(key=lambda r: -r.breakdown.fitness)
        best = results[0]
        with self.write_lock:
            self.project.design = best.design
        return {
            "ranking": [
                {
                    "fitness": r.breakdown.fitness,
                    "end_distance": r.breakdown.end_distance,
                    "improper_count": r.breakdown.improper_count,
                    "prohibited_hit": r.breakdown.prohibited_hit,
                    "lengths": list(r.design.lengths),
                    "shape_angles": list(r.design.shape_angles),
                    "first_flag": r.design.first_flag.name.lower(),
                    "best_curve": [-v for v in r.run.best_curve],
                }
                for r in results
            ],
        }

    def _run_simulate(self, job, body):
        if self.project.routing is None or self.project.tsa is None:
            raise ValueError("project has no routing section")
        pattern = self._pattern()
        stop = float(body.get("twist_stop", 20 * math.pi))
        step = float(body.get("twist_step", math.pi / 36))
        schedule = np.arange(0.0, stop + step / 2, step)
        states = solve_quasi_static(pattern, self.project.routing, self.project.tsa,
                                    twist_schedule=schedule,
                                    fab_limits=self.project.fab)
        job.update(progress=1.0)
        return {
            "states": [
                {
                    "index": s.index,
                    "twist": s.twist_angle,
                    "fold_theta": s.fold_theta,
                    "slacks": list(s.slacks),
                }
                for s in states
            ],
        }

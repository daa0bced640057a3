"""Command-line interface.

Subcommands cover the full workflow: synthesize a pattern from a design,
optimize an arm against a task, compute fold snapshots, run the string
simulation, emit printable meshes, exchange DXF/SVG, and serve the HTTP
API for the studio frontend.

Exit codes: 0 success, 1 validation failure, 2 I/O failure.  A fixed
--seed makes optimize runs (and their report files) byte-reproducible.
"""

from __future__ import annotations

import csv
import functools
import json
import math
import sys

import click
import numpy as np

from . import interchange
from .fabrication import FabricationParams, generate_meshes, max_fold_angle, place_holes
from .geometry import Rect
from .kinematics import embed_fold
from .mesh import mesh_diagnostics, write_stl
from .optimize import DesignTask, design_arm, evaluate_fitness
from .pattern import synthesize_strip, tessellate, validate_pattern
from .stringsim import measure_initial_lengths, solve_quasi_static, validate_routing
from .transition import EntryFlag, TransitionGraphDesign

EXIT_VALIDATION = 1
EXIT_IO = 2


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (OSError, FileNotFoundError) as e:
            click.echo(f"i/o error: {e}", err=True)
            sys.exit(EXIT_IO)
        except (ValueError, KeyError) as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(EXIT_VALIDATION)
    return wrapper


def _load_project(path) -> interchange.Project:
    return interchange.project_load(str(path))


def _write_report(report_path, payload):
    if report_path:
        data = json.dumps(payload, indent=2, sort_keys=True) + "\n"
        with open(report_path, "w") as fh:
            fh.write(data)


@click.group()
def main():
    """Design, optimize, fabricate and simulate string-driven origami."""


@main.command()
@click.option("--lengths", required=True, help="comma-separated segment lengths, mm")
@click.option("--angles", required=True, help="comma-separated shape angles, radians")
@click.option("--flag", type=click.Choice(["mountain", "valley"]), default="valley")
@click.option("--width", type=float, required=True, help="unit width, mm")
@click.option("--copies", type=int, default=1)
@click.option("-o", "--output", required=True, help="project file to write")
@click.option("--svg", "svg_path", default=None, help="also export the pattern SVG")
@click.option("--report", default=None, help="machine-readable report path")
@handle_errors
def design(lengths, angles, flag, width, copies, output, svg_path, report):
    """Synthesize a crease pattern from a transition-graph design."""
    d = TransitionGraphDesign(
        lengths=tuple(float(v) for v in lengths.split(",")),
        shape_angles=tuple(float(v) for v in angles.split(",")),
        first_flag=EntryFlag.VALLEY if flag == "valley" else EntryFlag.MOUNTAIN,
    )
    pattern = tessellate(synthesize_strip(d, width), copies)
    rep = validate_pattern(pattern)
    if not rep.ok:
        raise ValueError(f"synthesized pattern failed validation: {rep.messages[:3]}")
    project = interchange.Project(design=d, unit_width=width, copies=copies,
                                  provenance={"tool": "foldstring"})
    interchange.project_save(project, output)
    if svg_path:
        with open(svg_path, "wb") as fh:
            fh.write(interchange.export_svg(pattern))
    _write_report(report, {
        "vertices": len(pattern.vertices),
        "creases": len(pattern.creases),
        "panels": len(pattern.panels),
        "validation_ok": rep.ok,
    })
    click.echo(f"pattern: {len(pattern.panels)} panels, "
               f"{len(pattern.creases)} creases -> {output}")


def _parse_rect(spec: str) -> Rect:
    vals = []
    for tok in spec.split(","):
        tok = tok.strip().lower()
        vals.append(math.inf if tok in ("inf", "+inf", "") else
                    (-math.inf if tok == "-inf" else float(tok)))
    if len(vals) != 4:
        raise ValueError(f"region needs xmin,ymin,xmax,ymax, got {spec!r}")
    return Rect(vals[0], vals[1], vals[2], vals[3])


@main.command()
@click.option("--project", "project_path", required=True)
@click.option("--runs", type=int, default=10)
@click.option("--seed", type=int, default=0)
@click.option("--budget", type=int, default=300, help="generations per run")
@click.option("--report", default=None, help="ranking report path (JSON)")
@click.option("--log-dir", default=None, help="per-run generation CSV logs")
@handle_errors
def optimize(project_path, runs, seed, budget, report, log_dir):
    """Run evolution searches against the project's design task."""
    project = _load_project(project_path)
    if project.task is None:
        raise ValueError("project has no 'task' section; add one before optimizing")
    results = design_arm(project.task, runs=runs, seed=seed, budget=budget)
    best = results[0]
    project.design = best.design
    interchange.project_save(project, project_path)
    if log_dir:
        import os
        os.makedirs(log_dir, exist_ok=True)
        for idx, r in enumerate(results):
            with open(os.path.join(log_dir, f"run_{idx:02d}.csv"), "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["generation", "best_f", "sigma", "mean"])
                for g in r.run.generations:
                    w.writerow([g.index, f"{-g.best_so_far!r}", f"{g.sigma!r}",
                                " ".join(repr(v) for v in g.mean)])
    _write_report(report, {
        "seed": seed,
        "runs": runs,
        "ranking": [
            {
                "fitness": r.breakdown.fitness,
                "start_distance": r.breakdown.start_distance,
                "end_distance": r.breakdown.end_distance,
                "improper_count": r.breakdown.improper_count,
                "prohibited_hit": r.breakdown.prohibited_hit,
                "lengths": list(r.design.lengths),
                "shape_angles": list(r.design.shape_angles),
                "first_flag": r.design.first_flag.name.lower(),
                "run_seed": r.run.seed,
            }
            for r in results
        ],
    })
    click.echo(f"best fitness {best.breakdown.fitness:.4f} "
               f"(end distance {best.breakdown.end_distance:.2f} mm, "
               f"N={best.breakdown.improper_count}); design stored in {project_path}")


@main.command()
@click.option("--project", "project_path", required=True)
@click.option("--theta", type=float, required=True, help="fold angle, radians")
@click.option("-o", "--output", default=None, help="snapshot JSON path")
@click.option("--stl", "stl_path", default=None, help="snapshot mesh STL path")
@click.option("--report", default=None)
@handle_errors
def fold(project_path, theta, output, stl_path, report):
    """Compute the rigid fold snapshot at a given angle."""
    project = _load_project(project_path)
    pattern = project.pattern()
    geom = embed_fold(pattern, theta)
    payload = {
        "theta": theta,
        "max_residual": geom.max_residual,
        "panels": [geom.panel_vertices_world(p).tolist()
                   for p in range(len(pattern.panels))],
    }
    if output:
        with open(output, "w") as fh:
            json.dump(payload, fh, indent=2)
    if stl_path:
        from .kinematics import snapshot_mesh
        write_stl(snapshot_mesh(geom), stl_path)
    _write_report(report, {"theta": theta, "max_residual": geom.max_residual})
    click.echo(f"fold at {theta:.4f} rad: closure residual {geom.max_residual:.2e}")


@main.command()
@click.option("--project", "project_path", required=True)
@click.option("-o", "--output", default=None, help="trace CSV path")
@click.option("--twist-stop", type=float, default=20 * math.pi)
@click.option("--twist-step", type=float, default=math.pi / 36)
@click.option("--report", default=None)
@handle_errors
def simulate(project_path, output, twist_stop, twist_step, report):
    """Run the quasi-static string-driven folding simulation."""
    project = _load_project(project_path)
    if project.routing is None or project.tsa is None:
        raise ValueError("project has no 'routing' section (strings and tsa); "
                         "add one before simulating")
    pattern = project.pattern()
    rep = validate_routing(project.routing, pattern)
    if not rep.ok:
        raise ValueError("routing violates the side rule: "
                         + "; ".join(v.message for v in rep.violations[:3]))
    schedule = np.arange(0.0, twist_stop + twist_step / 2, twist_step)
    states = solve_quasi_static(pattern, project.routing, project.tsa,
                                twist_schedule=schedule, fab_limits=project.fab)
    if output:
        with open(output, "w", newline="") as fh:
            w = csv.writer(fh)
            n = len(project.routing.strings)
            w.writerow(["state", "twist", "fold_theta"]
                       + [f"slack_{k}" for k in range(n)])
            for s in states:
                w.writerow([s.index, f"{s.twist_angle!r}", f"{s.fold_theta!r}"]
                           + [f"{v!r}" for v in s.slacks])
    _write_report(report, {
        "states": len(states),
        "final_twist": states[-1].twist_angle,
        "final_fold": states[-1].fold_theta,
    })
    click.echo(f"{len(states)} quasi-static states; final fold "
               f"{states[-1].fold_theta:.4f} rad at twist {states[-1].twist_angle:.2f}")


@main.command()
@click.option("--project", "project_path", required=True)
@click.option("-o", "--outdir", required=True, help="directory for the STL files")
@click.option("--bias", type=float, default=3.0, help="panel inner bias b, mm")
@click.option("--height", type=float, default=2.2, help="shell height h, mm")
@click.option("--thickness", type=float, default=0.4, help="membrane thickness t, mm")
@click.option("--hole-radius", type=float, default=1.5)
@click.option("--no-top-cover", is_flag=True, default=False)
@click.option("--report", default=None)
@handle_errors
def fabricate(project_path, outdir, bias, height, thickness, hole_radius,
              no_top_cover, report):
    """Generate the four printable part meshes."""
    import os
    project = _load_project(project_path)
    pattern = project.pattern()
    params = project.fab or FabricationParams(
        inner_bias=bias, panel_height=height, membrane_thickness=thickness,
        hole_radius=hole_radius, include_top_cover=not no_top_cover)
    holes = project.holes or place_holes(pattern, params)
    model = generate_meshes(pattern, params, holes)
    os.makedirs(outdir, exist_ok=True)
    paths = model.write_stl_files(outdir)
    diag = model.diagnostics()
    _write_report(report, {
        "theta_max_deg": math.degrees(max_fold_angle(params)),
        "holes": len(holes),
        "meshes": {name: {"triangles": d.triangle_count,
                          "watertight": d.watertight,
                          "volume": d.signed_volume}
                   for name, d in diag.items()},
        "warnings": model.warnings,
    })
    for p in paths:
        click.echo(p)
    bad = [n for n, d in diag.items() if not d.watertight and d.triangle_count]
    if bad:
        raise ValueError(f"meshes not watertight: {bad}")
    click.echo(f"fold limit {math.degrees(max_fold_angle(params)):.1f} deg; "
               f"{len(holes)} holes")


@main.command(name="import-dxf")
@click.argument("dxf_path")
@click.option("-o", "--output", required=True, help="project file to write")
@click.option("--report", default=None)
@handle_errors
def import_dxf(dxf_path, output, report):
    """Import a crease pattern from a DXF file into a new project."""
    with open(dxf_path, "rb") as fh:
        pattern = interchange.parse_dxf(fh.read())
    rep = validate_pattern(pattern)
    project = interchange.Project(imported=pattern,
                                  provenance={"tool": "foldstring",
                                              "source": str(dxf_path)})
    interchange.project_save(project, output)
    _write_report(report, {
        "creases": len(pattern.creases),
        "panels": len(pattern.panels),
        "validation_ok": rep.ok,
        "import_warnings": getattr(pattern, "import_warnings", []),
        "validation_messages": rep.messages,
    })
    click.echo(f"imported {len(pattern.creases)} creases, "
               f"{len(pattern.panels)} panels -> {output}")
    if not rep.ok:
        click.echo("warning: pattern fails flat-foldability validation", err=True)


@main.command(name="export-svg")
@click.option("--project", "project_path", required=True)
@click.option("-o", "--output", required=True)
@handle_errors
def export_svg_cmd(project_path, output):
    """Render the project's crease pattern as SVG."""
    project = _load_project(project_path)
    pattern = project.pattern()
    with open(output, "wb") as fh:
        fh.write(interchange.export_svg(pattern))
    click.echo(output)


@main.command()
@click.option("--port", type=int, default=8754)
@click.option("--project", "project_path", default=None)
@click.option("--frontend", "frontend_dir", default=None,
              help="directory of built studio files to serve at /")
@handle_errors
def serve(port, project_path, frontend_dir):
    """Run the local HTTP service for the studio frontend."""
    from .service import StudioService
    project = _load_project(project_path) if project_path else interchange.Project()
    service = StudioService(project=project, frontend_dir=frontend_dir)
    click.echo(f"serving on http://127.0.0.1:{port}")
    service.serve_forever(port)


if __name__ == "__main__":
    main()

/**
 * Studio application shell: wires the canvas, side panels and service API.
 * All numbers on screen are service responses passed through verbatim.
 */

import {
  ApiError,
  StudioApi,
  pollJob,
  type DesignDoc,
  type FoldResponse,
  type ProjectDoc,
  type TrajectoryResponse,
} from "./api.js";
import { fitnessCurves, foldProfile, frameAt } from "./charts.js";
import { displayBool, displayNumber, sliderLabel } from "./format.js";
import { Store, toggleFirstFlag, withDesign, type Tool } from "./state.js";
import { cycleSide, violationIndex } from "./tools.js";
import { fitBounds, mmToPx, panBy, pxToMm, zoomAt } from "./transform.js";

const api = new StudioApi("");

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

async function boot() {
  const project = await api.getProject();
  const store = new Store(project);
  const app = new StudioApp(store);
  await app.refreshPreview();
  app.renderAll();
}

class StudioApp {
  private canvas = el<HTMLCanvasElement>("canvas");
  private ctx = this.canvas.getContext("2d")!;
  private svgHolder = el<HTMLDivElement>("pattern-svg");
  private trajectory: TrajectoryResponse | null = null;
  private foldSnapshot: FoldResponse | null = null;
  private dragging: { x: number; y: number } | null = null;

  constructor(private store: Store) {
    store.subscribe(() => this.renderAll());
    this.bindToolbar();
    this.bindCanvas();
    this.bindDesignPanel();
    this.bindTaskPanel();
    this.bindOptimizePanel();
    this.bindFoldPanel();
    this.bindRoutingPanel();
    this.bindSimulatePanel();
  }

  // ------------------------------------------------------------- wiring

  private bindToolbar() {
    for (const tool of ["tg-edit", "task-mark", "routing-edit", "inspect"] as Tool[]) {
      el<HTMLButtonElement>(`tool-${tool}`).onclick = () =>
        this.store.dispatch({ type: "select-tool", tool });
    }
    el<HTMLButtonElement>("undo").onclick = () => void this.undoRedo("undo");
    el<HTMLButtonElement>("redo").onclick = () => void this.undoRedo("redo");
  }

  private async undoRedo(kind: "undo" | "redo") {
    const before = this.store.get().project;
    const after = this.store.dispatch({ type: kind }).project;
    if (after !== before) {
      await api.putProject(after);
      await this.refreshPreview();
    }
  }

  private bindCanvas() {
    this.canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      const v = this.store.get().viewport;
      const factor = e.deltaY < 0 ? 1.15 : 1 / 1.15;
      this.store.dispatch({
        type: "set-viewport",
        viewport: zoomAt(v, e.offsetX, e.offsetY, factor),
      });
    });
    this.canvas.addEventListener("pointerdown", (e) => {
      this.dragging = { x: e.offsetX, y: e.offsetY };
      const state = this.store.get();
      if (state.tool === "task-mark") {
        const [mx, my] = pxToMm(state.viewport, e.offsetX, e.offsetY);
        void this.addWaypoint([mx, my]);
      }
    });
    this.canvas.addEventListener("pointermove", (e) => {
      if (!this.dragging) return;
      if (this.store.get().tool !== "inspect" && this.store.get().tool !== "tg-edit") return;
      const v = this.store.get().viewport;
      this.store.dispatch({
        type: "set-viewport",
        viewport: panBy(v, e.offsetX - this.dragging.x, e.offsetY - this.dragging.y),
      });
      this.dragging = { x: e.offsetX, y: e.offsetY };
    });
    this.canvas.addEventListener("pointerup", () => (this.dragging = null));
  }

  private bindDesignPanel() {
    el<HTMLButtonElement>("design-apply").onclick = () => void this.applyDesignFields();
    el<HTMLButtonElement>("design-flip").onclick = () => {
      const d = this.store.get().project.design;
      if (d) void this.applyDesign(toggleFirstFlag(d));
    };
  }

  private async applyDesignFields() {
    try {
      const lengths = el<HTMLInputElement>("design-lengths")
        .value.split(",").map(Number);
      const angles = el<HTMLInputElement>("design-angles")
        .value.split(",").filter((s) => s.trim()).map(Number);
      const flag = el<HTMLSelectElement>("design-flag").value as "mountain" | "valley";
      await this.applyDesign({ lengths, shape_angles: angles, first_flag: flag });
    } catch (e) {
      this.store.dispatch({ type: "mutation-failed", error: String(e) });
    }
  }

  private async applyDesign(design: DesignDoc) {
    const state = this.store.get();
    this.store.dispatch({ type: "mutation-start" });
    try {
      const width = Number(el<HTMLInputElement>("design-width").value) || 30;
      const copies = Number(el<HTMLInputElement>("design-copies").value) || 1;
      await api.synthesize(design, width, copies);
      const project = withDesign(
        { ...state.project, pattern: { unit_width: width, copies } },
        design,
      );
      await api.putProject(project);
      this.store.dispatch({ type: "mutation-confirmed", project });
      await this.refreshPreview();
    } catch (e) {
      const msg = e instanceof ApiError ? e.message : String(e);
      this.store.dispatch({ type: "mutation-failed", error: msg });
    }
  }

  async refreshPreview() {
    const design = this.store.get().project.design;
    if (!design) return;
    try {
      const resp = await api.synthesize(
        design,
        this.store.get().project.pattern?.unit_width,
        this.store.get().project.pattern?.copies,
      );
      this.svgHolder.innerHTML = resp.svg;
      this.trajectory = await api.trajectory(design);
      const [lo, hi] = resp.bbox;
      this.store.dispatch({
        type: "set-viewport",
        viewport: fitBounds(
          this.store.get().viewport,
          [lo[0], lo[1]],
          [hi[0], hi[1]],
          this.canvas.width,
          this.canvas.height,
        ),
      });
    } catch (e) {
      const msg = e instanceof ApiError ? e.message : String(e);
      this.store.dispatch({ type: "mutation-failed", error: msg });
    }
  }

  private bindTaskPanel() {
    el<HTMLInputElement>("reward-weight").oninput = () => void this.liveFitness();
  }

  private async addWaypoint(p: [number, number]) {
    const state = this.store.get();
    const task = state.project.task ?? {
      start_anchor: [0, 0] as [number, number],
      waypoints: [],
      warning_regions: [],
      prohibited_regions: [],
      reward_weight: 120,
      unit_count: 5,
    };
    const project: ProjectDoc = {
      ...state.project,
      task: { ...task, waypoints: [...task.waypoints, p] },
    };
    this.store.dispatch({ type: "mutation-start" });
    try {
      await api.putProject(project);
      this.store.dispatch({ type: "mutation-confirmed", project });
    } catch (e) {
      this.store.dispatch({ type: "mutation-failed", error: String(e) });
    }
  }

  private async liveFitness() {
    const state = this.store.get();
    const task = state.project.task;
    const design = state.project.design;
    if (!task || !design || task.waypoints.length < 2) return;
    const weight = Number(el<HTMLInputElement>("reward-weight").value);
    try {
      const resp = await api.fitness(design, { ...task, reward_weight: weight });
      el("fitness-value").textContent = displayNumber(resp.fitness);
      el("fitness-end").textContent = displayNumber(resp.end_distance);
      el("fitness-n").textContent = displayNumber(resp.improper_count);
      el("fitness-prohibited").textContent = displayBool(resp.prohibited_hit);
    } catch {
      el("fitness-value").textContent = "-";
    }
  }

  private bindOptimizePanel() {
    el<HTMLButtonElement>("optimize-start").onclick = () => void this.runOptimize();
    el<HTMLDivElement>("ranking").addEventListener("click", (e) => {
      const row = (e.target as HTMLElement).closest("[data-rank]");
      if (!row) return;
      const index = Number((row as HTMLElement).dataset.rank);
      this.store.dispatch({ type: "select-rank", index });
      const entry = this.store.get().ranking[index];
      if (entry) {
        void this.applyDesign({
          lengths: entry.lengths,
          shape_angles: entry.shape_angles,
          first_flag: entry.first_flag,
        });
      }
    });
  }

  private async runOptimize() {
    const runs = Number(el<HTMLInputElement>("optimize-runs").value) || 10;
    const seed = Number(el<HTMLInputElement>("optimize-seed").value) || 0;
    const budget = Number(el<HTMLInputElement>("optimize-budget").value) || 300;
    el("optimize-status").textContent = "starting";
    try {
      const { job_id } = await api.startOptimize(runs, seed, budget);
      const status = await pollJob(api, job_id, (s) => {
        el("optimize-status").textContent = `${s.status} ${(s.progress * 100).toFixed(0)}%`;
      });
      const ranking = status.result?.ranking ?? [];
      this.store.dispatch({ type: "ranking-loaded", ranking });
      el("optimize-status").textContent = `done (${ranking.length} results)`;
    } catch (e) {
      el("optimize-status").textContent =
        e instanceof ApiError ? e.message : String(e);
    }
  }

  private bindFoldPanel() {
    const slider = el<HTMLInputElement>("fold-theta");
    slider.oninput = () => {
      const theta = Number(slider.value);
      this.store.dispatch({ type: "set-fold-theta", theta });
      void this.loadFold();
    };
  }

  private async loadFold() {
    const theta = this.store.get().foldTheta;
    try {
      const snap = await api.fold(theta);
      this.foldSnapshot = snap;
      this.store.dispatch({
        type: "set-theta-max",
        thetaMax: snap.theta_max ?? null,
      });
      el("fold-residual").textContent = displayNumber(snap.max_residual);
      el("fold-theta-label").textContent = sliderLabel(theta);
      this.renderAll();
    } catch (e) {
      el("fold-residual").textContent =
        e instanceof ApiError ? e.message : String(e);
    }
  }

  private bindRoutingPanel() {
    el<HTMLButtonElement>("routing-validate").onclick = () => void this.validateRouting();
    el<HTMLDivElement>("routing-strings").addEventListener("click", (e) => {
      const node = (e.target as HTMLElement).closest("[data-string][data-wp]");
      if (!node) return;
      const si = Number((node as HTMLElement).dataset.string);
      const wi = Number((node as HTMLElement).dataset.wp);
      void this.cycleRoutingSide(si, wi);
    });
  }

  private async cycleRoutingSide(si: number, wi: number) {
    const state = this.store.get();
    const routing = state.project.routing;
    if (!routing?.strings) return;
    const strings = routing.strings.map((s, i) =>
      i !== si
        ? s
        : {
            ...s,
            waypoints: s.waypoints.map((w, j) =>
              j !== wi ? w : { ...w, side: cycleSide(w.side) },
            ),
          },
    );
    const project: ProjectDoc = { ...state.project, routing: { ...routing, strings } };
    this.store.dispatch({ type: "mutation-start" });
    try {
      await api.putProject(project);
      this.store.dispatch({ type: "mutation-confirmed", project });
      await this.validateRouting();
    } catch (e) {
      this.store.dispatch({ type: "mutation-failed", error: String(e) });
    }
  }

  private async validateRouting() {
    try {
      const report = await api.validateRouting();
      const index = violationIndex(report.violations);
      el("routing-report").textContent = report.ok
        ? "routing ok"
        : report.violations.map((v) => v.message).join("\n");
      this.renderRoutingList(index);
    } catch (e) {
      el("routing-report").textContent =
        e instanceof ApiError ? e.message : String(e);
    }
  }

  private renderRoutingList(violations: Map<string, string>) {
    const routing = this.store.get().project.routing;
    const holder = el<HTMLDivElement>("routing-strings");
    if (!routing?.strings) {
      holder.textContent = "no routing in project";
      return;
    }
    holder.innerHTML = routing.strings
      .map(
        (s, si) =>
          `<div class="string">s${si}: ` +
          s.waypoints
            .map((w, wi) => {
              const bad = violations.has(`${si}:${wi}`) ? " violation" : "";
              return `<span class="wp${bad}" data-string="${si}" data-wp="${wi}">` +
                `p${w.panel}${w.side ? ":" + w.side : ""}</span>`;
            })
            .join(" → ") +
          `</div>`,
      )
      .join("");
  }

  private bindSimulatePanel() {
    el<HTMLButtonElement>("simulate-start").onclick = () => void this.runSimulate();
    const scrub = el<HTMLInputElement>("playback");
    scrub.oninput = () => {
      this.store.dispatch({ type: "playback-seek", cursor: Number(scrub.value) });
      this.renderPlayback();
    };
  }

  private async runSimulate() {
    el("simulate-status").textContent = "starting";
    try {
      const { job_id } = await api.startSimulate();
      const status = await pollJob(api, job_id, (s) => {
        el("simulate-status").textContent = `${s.status}`;
      });
      const states = status.result?.states ?? [];
      this.store.dispatch({ type: "sim-loaded", states });
      const scrub = el<HTMLInputElement>("playback");
      scrub.max = String(Math.max(states.length - 1, 0));
      scrub.value = "0";
      el("simulate-status").textContent = `done (${states.length} states)`;
      this.renderPlayback();
    } catch (e) {
      el("simulate-status").textContent =
        e instanceof ApiError ? e.message : String(e);
    }
  }

  private renderPlayback() {
    const state = this.store.get();
    const frame = frameAt(state.simStates, state.playbackCursor);
    if (!frame) return;
    el("playback-index").textContent = displayNumber(frame.index);
    el("playback-twist").textContent = displayNumber(frame.twist);
    el("playback-fold").textContent = displayNumber(frame.foldTheta);
    el("playback-slacks").textContent = frame.slacks
      .map((v) => displayNumber(v))
      .join(", ");
    void api.fold(frame.foldTheta, "seed").then((snap) => {
      this.foldSnapshot = snap;
      this.renderAll();
    });
  }

  // ----------------------------------------------------------- rendering

  renderAll() {
    const state = this.store.get();
    el("error-bar").textContent = state.lastError ?? "";
    document
      .querySelectorAll(".tool")
      .forEach((b) => b.classList.toggle("active", b.id === `tool-${state.tool}`));
    this.drawCanvas();
    this.drawChart();
  }

  private drawCanvas() {
    const { viewport, project } = this.store.get();
    const ctx = this.ctx;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);

    if (this.foldSnapshot) {
      // orthographic top view of the folded panels, shaded by height
      const zs = this.foldSnapshot.panels.flat().map((p) => p[2]);
      const zlo = Math.min(...zs, 0);
      const zhi = Math.max(...zs, 1e-9);
      for (const poly of this.foldSnapshot.panels) {
        ctx.beginPath();
        poly.forEach(([x, y], i) => {
          const [px, py] = mmToPx(viewport, x, y);
          if (i === 0) ctx.moveTo(px, py);
          else ctx.lineTo(px, py);
        });
        ctx.closePath();
        const zc = poly.reduce((a, p) => a + p[2], 0) / poly.length;
        const shade = Math.round(200 - (140 * (zc - zlo)) / (zhi - zlo || 1));
        ctx.fillStyle = `rgba(${shade},${shade},235,0.75)`;
        ctx.fill();
        ctx.strokeStyle = "#446";
        ctx.stroke();
      }
    }

    if (this.trajectory) {
      ctx.beginPath();
      this.trajectory.endpoints.forEach(([x, y], i) => {
        const [px, py] = mmToPx(viewport, x, y);
        if (i === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
      });
      ctx.strokeStyle = "#2a7";
      ctx.lineWidth = 2;
      ctx.stroke();
      ctx.lineWidth = 1;
    }

    const task = project.task;
    if (task) {
      for (const [regions, color] of [
        [task.warning_regions, "rgba(240,180,40,0.25)"],
        [task.prohibited_regions, "rgba(220,60,60,0.3)"],
      ] as const) {
        for (const r of regions) {
          const x0 = r.xmin ?? -1e4;
          const y0 = r.ymin ?? -1e4;
          const x1 = r.xmax ?? 1e4;
          const y1 = r.ymax ?? 1e4;
          const [px0, py0] = mmToPx(viewport, x0, y1);
          const [px1, py1] = mmToPx(viewport, x1, y0);
          ctx.fillStyle = color;
          ctx.fillRect(px0, py0, px1 - px0, py1 - py0);
        }
      }
      ctx.fillStyle = "#c33";
      for (const [x, y] of task.waypoints) {
        const [px, py] = mmToPx(viewport, x, y);
        ctx.beginPath();
        ctx.arc(px, py, 4, 0, 2 * Math.PI);
        ctx.fill();
      }
    }
  }

  private drawChart() {
    const chart = el<HTMLCanvasElement>("chart");
    const ctx = chart.getContext("2d")!;
    ctx.clearRect(0, 0, chart.width, chart.height);
    const curves = fitnessCurves(this.store.get().ranking);
    curves.forEach((c, i) => {
      ctx.beginPath();
      c.points.forEach(([x, y], k) => {
        const px = 8 + x * (chart.width - 16);
        const py = chart.height - 8 - y * (chart.height - 16);
        if (k === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
      });
      ctx.strokeStyle = `hsl(${(i * 47) % 360},60%,45%)`;
      ctx.stroke();
    });
    const profile = foldProfile(this.store.get().simStates);
    if (profile.length) {
      ctx.beginPath();
      profile.forEach(([x, y], k) => {
        const px = 8 + x * (chart.width - 16);
        const py = chart.height - 8 - y * (chart.height - 16);
        if (k === 0) ctx.moveTo(px, py);
        else ctx.lineTo(px, py);
      });
      ctx.strokeStyle = "#333";
      ctx.setLineDash([4, 3]);
      ctx.stroke();
      ctx.setLineDash([]);
    }
  }
}

boot().catch((e) => {
  document.body.textContent = `failed to load project: ${e}`;
});

/**
 * Typed client for the foldstring service.
 *
 * Every number the studio displays comes from these responses; the UI never
 * recomputes geometry, fitness, limits or slack values client-side.
 */

export interface DesignDoc {
  start?: [number, number];
  lengths: number[];
  shape_angles: number[];
  first_flag: "mountain" | "valley";
}

export interface RectDoc {
  xmin: number | null;
  ymin: number | null;
  xmax: number | null;
  ymax: number | null;
}

export interface TaskDoc {
  start_anchor: [number, number];
  waypoints: [number, number][];
  warning_regions: RectDoc[];
  prohibited_regions: RectDoc[];
  reward_weight: number;
  unit_count: number;
}

export interface ProjectDoc {
  version: number;
  design?: DesignDoc;
  pattern?: { unit_width?: number; copies?: number; imported?: unknown };
  task?: TaskDoc;
  fab?: unknown;
  routing?: RoutingDoc;
  [key: string]: unknown;
}

export interface RoutingWaypointDoc {
  panel: number;
  position: [number, number];
  side: "above" | "below" | null;
}

export interface RoutingDoc {
  tsa?: {
    rotation_center: [number, number];
    rotation_diameter: number;
    first_hole_gap: number;
    string_width: number;
    strings_per_unit: number;
  };
  strings?: { waypoints: RoutingWaypointDoc[]; initial_length: number | null }[];
}

export interface DesignResponse {
  panels: number;
  creases: number;
  validation_ok: boolean;
  bbox: [number[], number[]];
  svg: string;
}

export interface FitnessResponse {
  fitness: number;
  start_distance: number;
  end_distance: number;
  improper_count: number;
  prohibited_hit: boolean;
}

export interface TrajectoryResponse {
  thetas: number[];
  endpoints: [number, number][];
}

export interface FoldResponse {
  theta: number;
  max_residual: number;
  theta_max?: number;
  panels: [number, number, number][][];
}

export interface RoutingViolationDoc {
  string: number;
  segment: number;
  message: string;
}

export interface RoutingReportDoc {
  ok: boolean;
  violations: RoutingViolationDoc[];
}

export interface RankingEntry {
  fitness: number;
  end_distance: number;
  improper_count: number;
  prohibited_hit: boolean;
  lengths: number[];
  shape_angles: number[];
  first_flag: "mountain" | "valley";
  best_curve: number[];
}

export interface SimStateDoc {
  index: number;
  twist: number;
  fold_theta: number;
  slacks: number[];
}

export interface JobStatus {
  id: string;
  kind: string;
  status: "running" | "done" | "failed";
  progress: number;
  result: { ranking?: RankingEntry[]; states?: SimStateDoc[] } | null;
  error: string | null;
}

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class StudioApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(this.base + path, init);
    const text = await resp.text();
    let body: unknown;
    try {
      body = JSON.parse(text);
    } catch {
      body = { error: text };
    }
    if (!resp.ok) {
      const msg = (body as { error?: string }).error ?? `HTTP ${resp.status}`;
      throw new ApiError(msg, resp.status);
    }
    return body as T;
  }

  private post<T>(path: string, payload: unknown): Promise<T> {
    return this.request<T>(path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  getProject(): Promise<ProjectDoc> {
    return this.request<ProjectDoc>("/api/project");
  }

  putProject(doc: ProjectDoc): Promise<{ ok: boolean }> {
    return this.request<{ ok: boolean }>("/api/project", {
      method: "PUT",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(doc),
    });
  }

  synthesize(design: DesignDoc, unitWidth?: number, copies?: number): Promise<DesignResponse> {
    return this.post<DesignResponse>("/api/design", {
      design,
      unit_width: unitWidth,
      copies,
    });
  }

  trajectory(design?: DesignDoc): Promise<TrajectoryResponse> {
    return this.post<TrajectoryResponse>("/api/trajectory", design ? { design } : {});
  }

  fitness(design?: DesignDoc, task?: TaskDoc): Promise<FitnessResponse> {
    const payload: Record<string, unknown> = {};
    if (design) payload.design = design;
    if (task) payload.task = task;
    return this.post<FitnessResponse>("/api/fitness", payload);
  }

  fold(theta: number, frame: "tg" | "seed" = "tg"): Promise<FoldResponse> {
    return this.post<FoldResponse>("/api/fold", { theta, frame });
  }

  validateRouting(): Promise<RoutingReportDoc> {
    return this.post<RoutingReportDoc>("/api/validate-routing", {});
  }

  startOptimize(runs: number, seed: number, budget?: number): Promise<{ job_id: string }> {
    return this.post<{ job_id: string }>("/api/jobs/optimize", { runs, seed, budget });
  }

  startSimulate(twistStop?: number, twistStep?: number): Promise<{ job_id: string }> {
    return this.post<{ job_id: string }>("/api/jobs/simulate", {
      twist_stop: twistStop,
      twist_step: twistStep,
    });
  }

  jobStatus(id: string): Promise<JobStatus> {
    return this.request<JobStatus>(`/api/jobs/${id}`);
  }
}

/**
 * Poll a job until it reaches a terminal state; reports progress along the
 * way. Resolves with the final status, rejects on failure.
 */
export function pollJob(
  api: StudioApi,
  jobId: string,
  onProgress?: (status: JobStatus) => void,
  intervalMs = 500,
  sleep: (ms: number) => Promise<void> = (ms) => new Promise((r) => setTimeout(r, ms)),
): Promise<JobStatus> {
  return (async () => {
    for (;;) {
      const status = await api.jobStatus(jobId);
      onProgress?.(status);
      if (status.status === "done") return status;
      if (status.status === "failed") {
        throw new ApiError(status.error ?? "job failed", 500);
      }
      await sleep(intervalMs);
    }
  })();
}

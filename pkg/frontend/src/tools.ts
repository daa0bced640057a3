/**
 * Tool interaction logic: transition-graph editing, task marking, routing
 * flag edits. Pure state machines over model-space coordinates; the canvas
 * layer feeds them pointer events already converted to millimetres.
 *
 * The editors never derive angles/lengths themselves beyond assembling the
 * *requested* design; validation and all derived numbers come back from the
 * service.
 */

import type { DesignDoc, RectDoc, TaskDoc } from "./api.js";

export interface TgDraft {
  /** polyline the user has clicked so far, model mm */
  points: [number, number][];
  firstFlag: "mountain" | "valley";
}

export function startTgDraft(firstFlag: "mountain" | "valley" = "valley"): TgDraft {
  return { points: [], firstFlag };
}

export function addTgPoint(draft: TgDraft, p: [number, number], minSegment = 1.0): TgDraft {
  const last = draft.points[draft.points.length - 1];
  if (last && Math.hypot(p[0] - last[0], p[1] - last[1]) < minSegment) {
    return draft;
  }
  return { ...draft, points: [...draft.points, p] };
}

export function moveTgPoint(draft: TgDraft, index: number, p: [number, number]): TgDraft {
  const points = draft.points.slice();
  points[index] = p;
  return { ...draft, points };
}

/**
 * Assemble the design request from a drawn chain: segment lengths and the
 * turn-derived shape angles are *not* computed here; the service owns that.
 * The draft simply reports the clicked chain; the caller sends lengths and
 * target angles derived by the service round trip. For direct length/angle
 * entry the numeric fields drive `fromFields` instead.
 */
export function draftSegmentCount(draft: TgDraft): number {
  return Math.max(draft.points.length - 1, 0);
}

export function fromFields(
  lengths: number[],
  shapeAngles: number[],
  firstFlag: "mountain" | "valley",
): DesignDoc {
  return { lengths, shape_angles: shapeAngles, first_flag: firstFlag };
}

/** nearest draft vertex within a pick radius, or null */
export function pickTgPoint(
  draft: TgDraft,
  p: [number, number],
  radiusMm: number,
): number | null {
  let best: number | null = null;
  let bestD = radiusMm;
  draft.points.forEach((q, i) => {
    const d = Math.hypot(q[0] - p[0], q[1] - p[1]);
    if (d <= bestD) {
      best = i;
      bestD = d;
    }
  });
  return best;
}

// ----------------------------------------------------------- task marking

export type RegionKind = "warning" | "prohibited";

export interface RectDraft {
  kind: RegionKind;
  anchor: [number, number];
  corner: [number, number];
}

export function rectFromDraft(d: RectDraft): RectDoc {
  return {
    xmin: Math.min(d.anchor[0], d.corner[0]),
    ymin: Math.min(d.anchor[1], d.corner[1]),
    xmax: Math.max(d.anchor[0], d.corner[0]),
    ymax: Math.max(d.anchor[1], d.corner[1]),
  };
}

export function addWaypoint(task: TaskDoc, p: [number, number]): TaskDoc {
  return { ...task, waypoints: [...task.waypoints, p] };
}

export function addRegion(task: TaskDoc, draft: RectDraft): TaskDoc {
  const rect = rectFromDraft(draft);
  if (draft.kind === "warning") {
    return { ...task, warning_regions: [...task.warning_regions, rect] };
  }
  return { ...task, prohibited_regions: [...task.prohibited_regions, rect] };
}

export function emptyTask(unitCount = 5): TaskDoc {
  return {
    start_anchor: [0, 0],
    waypoints: [],
    warning_regions: [],
    prohibited_regions: [],
    reward_weight: 120,
    unit_count: unitCount,
  };
}

// --------------------------------------------------------- routing editing

export type SideFlag = "above" | "below" | null;

export function cycleSide(side: SideFlag): SideFlag {
  if (side === null) return "below";
  if (side === "below") return "above";
  return null;
}

/**
 * Map a server routing report to per-(string, segment) badges the canvas
 * highlights; the message text comes through untouched.
 */
export function violationIndex(
  violations: { string: number; segment: number; message: string }[],
): Map<string, string> {
  const out = new Map<string, string>();
  for (const v of violations) {
    out.set(`${v.string}:${v.segment}`, v.message);
  }
  return out;
}

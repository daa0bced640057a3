/**
 * Fitness-chart and playback data preparation. Pure transforms from server
 * responses to drawable polylines; no DOM, no geometry math beyond axis
 * scaling.
 */

import type { RankingEntry, SimStateDoc } from "./api.js";

export interface Polyline {
  points: [number, number][];
  label: string;
}

/**
 * Best-so-far fitness curves, one per run, mapped into a unit box
 * ([0,1]x[0,1], y up). The curves come from the service already
 * cumulative; this only scales axes.
 */
export function fitnessCurves(ranking: RankingEntry[]): Polyline[] {
  const all = ranking.flatMap((r) => r.best_curve);
  if (!all.length) return [];
  const lo = Math.min(...all);
  const hi = Math.max(...all);
  const span = hi - lo || 1;
  const maxLen = Math.max(...ranking.map((r) => r.best_curve.length), 2);
  return ranking.map((r, i) => ({
    label: `run ${i}`,
    points: r.best_curve.map((v, k) => [
      k / (maxLen - 1),
      (v - lo) / span,
    ] as [number, number]),
  }));
}

export interface PlaybackFrame {
  index: number;
  twist: number;
  foldTheta: number;
  slacks: number[];
}

export function frameAt(states: SimStateDoc[], cursor: number): PlaybackFrame | null {
  if (!states.length) return null;
  const i = Math.min(Math.max(cursor, 0), states.length - 1);
  const s = states[i];
  return { index: s.index, twist: s.twist, foldTheta: s.fold_theta, slacks: s.slacks };
}

/** fold-angle profile over the run for the scrub bar */
export function foldProfile(states: SimStateDoc[]): [number, number][] {
  if (!states.length) return [];
  const tmax = states[states.length - 1].twist || 1;
  const fmax = Math.max(...states.map((s) => s.fold_theta), 1e-9);
  return states.map((s) => [s.twist / tmax, s.fold_theta / fmax] as [number, number]);
}

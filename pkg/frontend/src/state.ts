/**
 * Studio view state and its reducers.
 *
 * The store keeps the last server-confirmed project document plus pure view
 * concerns (tool, viewport, fold slider, playback cursor). Design edits go
 * through an undo stack of server-confirmed snapshots: a mutation is pushed
 * only after the service accepted it, so undo always restores a state the
 * server has seen.
 */

import type { DesignDoc, ProjectDoc, RankingEntry, SimStateDoc } from "./api.js";
import type { Viewport } from "./transform.js";
import { defaultViewport } from "./transform.js";

export type Tool = "tg-edit" | "task-mark" | "routing-edit" | "inspect";

export interface ViewState {
  project: ProjectDoc;
  tool: Tool;
  viewport: Viewport;
  foldTheta: number;
  /** server-provided fold ceiling when fabrication parameters exist */
  thetaMax: number | null;
  playbackCursor: number;
  simStates: SimStateDoc[];
  ranking: RankingEntry[];
  selectedRank: number | null;
  undoStack: ProjectDoc[];
  redoStack: ProjectDoc[];
  pendingMutation: boolean;
  lastError: string | null;
}

export function initialState(project: ProjectDoc): ViewState {
  return {
    project,
    tool: "tg-edit",
    viewport: defaultViewport(),
    foldTheta: 0,
    thetaMax: null,
    playbackCursor: 0,
    simStates: [],
    ranking: [],
    selectedRank: null,
    undoStack: [],
    redoStack: [],
    pendingMutation: false,
    lastError: null,
  };
}

export type Action =
  | { type: "select-tool"; tool: Tool }
  | { type: "set-viewport"; viewport: Viewport }
  | { type: "set-fold-theta"; theta: number }
  | { type: "set-theta-max"; thetaMax: number | null }
  | { type: "mutation-start" }
  | { type: "mutation-confirmed"; project: ProjectDoc }
  | { type: "mutation-failed"; error: string }
  | { type: "undo" }
  | { type: "redo" }
  | { type: "sim-loaded"; states: SimStateDoc[] }
  | { type: "playback-seek"; cursor: number }
  | { type: "ranking-loaded"; ranking: RankingEntry[] }
  | { type: "select-rank"; index: number | null }
  | { type: "clear-error" };

export function reduce(s: ViewState, a: Action): ViewState {
  switch (a.type) {
    case "select-tool":
      return { ...s, tool: a.tool };
    case "set-viewport":
      return { ...s, viewport: a.viewport };
    case "set-fold-theta": {
      const cap = s.thetaMax ?? Math.PI - 1e-6;
      const theta = Math.min(Math.max(a.theta, 0), cap);
      return { ...s, foldTheta: theta };
    }
    case "set-theta-max": {
      const thetaMax = a.thetaMax;
      const foldTheta = thetaMax === null ? s.foldTheta : Math.min(s.foldTheta, thetaMax);
      return { ...s, thetaMax, foldTheta };
    }
    case "mutation-start":
      return { ...s, pendingMutation: true, lastError: null };
    case "mutation-confirmed":
      return {
        ...s,
        pendingMutation: false,
        undoStack: [...s.undoStack, s.project],
        redoStack: [],
        project: a.project,
      };
    case "mutation-failed":
      return { ...s, pendingMutation: false, lastError: a.error };
    case "undo": {
      if (!s.undoStack.length) return s;
      const prev = s.undoStack[s.undoStack.length - 1];
      return {
        ...s,
        undoStack: s.undoStack.slice(0, -1),
        redoStack: [...s.redoStack, s.project],
        project: prev,
      };
    }
    case "redo": {
      if (!s.redoStack.length) return s;
      const next = s.redoStack[s.redoStack.length - 1];
      return {
        ...s,
        redoStack: s.redoStack.slice(0, -1),
        undoStack: [...s.undoStack, s.project],
        project: next,
      };
    }
    case "sim-loaded":
      return { ...s, simStates: a.states, playbackCursor: 0 };
    case "playback-seek": {
      const cursor = Math.min(Math.max(a.cursor, 0), Math.max(s.simStates.length - 1, 0));
      return { ...s, playbackCursor: cursor };
    }
    case "ranking-loaded":
      return { ...s, ranking: a.ranking, selectedRank: a.ranking.length ? 0 : null };
    case "select-rank":
      return { ...s, selectedRank: a.index };
    case "clear-error":
      return { ...s, lastError: null };
  }
}

export class Store {
  private state: ViewState;
  private listeners = new Set<(s: ViewState) => void>();

  constructor(project: ProjectDoc) {
    this.state = initialState(project);
  }

  get(): ViewState {
    return this.state;
  }

  dispatch(action: Action): ViewState {
    this.state = reduce(this.state, action);
    for (const l of this.listeners) l(this.state);
    return this.state;
  }

  subscribe(fn: (s: ViewState) => void): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }
}

/** Design edits produce a new project document; geometry stays server-side. */
export function withDesign(project: ProjectDoc, design: DesignDoc): ProjectDoc {
  return { ...project, design };
}

export function toggleFirstFlag(design: DesignDoc): DesignDoc {
  return {
    ...design,
    first_flag: design.first_flag === "valley" ? "mountain" : "valley",
  };
}

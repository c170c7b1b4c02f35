// Client-side session state and its pure transitions. The server remains
// the authority for every statistic; this store only tracks what the UI has
// learned from it and which warnings are active.

import type {
  Classification,
  GridParams,
  GridResponse,
  ModelInfo,
  SectorId,
  SectorStats,
} from "./types.js";

export type Warning =
  | { kind: "empty-sector"; sector: SectorId }
  | { kind: "invalid-grid"; message: string }
  | { kind: "error"; message: string };

export interface AppState {
  sessionId: string | null;
  imageWidth: number;
  imageHeight: number;
  grid: GridParams | null;
  stats: Record<SectorId, SectorStats> | null;
  features: number[] | null;
  warning: Warning | null;
  classification: Classification | null;
  models: ModelInfo[];
  selectedModel: string | null;
  pendingGrid: boolean;
}

export function initialState(): AppState {
  return {
    sessionId: null,
    imageWidth: 0,
    imageHeight: 0,
    grid: null,
    stats: null,
    features: null,
    warning: null,
    classification: null,
    models: [],
    selectedModel: null,
    pendingGrid: false,
  };
}

export function withSession(
  state: AppState,
  sessionId: string,
  width: number,
  height: number,
): AppState {
  return {
    ...initialState(),
    models: state.models,
    selectedModel: state.selectedModel,
    sessionId,
    imageWidth: width,
    imageHeight: height,
  };
}

export function withGridEdit(state: AppState, grid: GridParams): AppState {
  // any local edit invalidates the displayed statistics until the server
  // confirms the new placement
  return { ...state, grid, pendingGrid: true, classification: null };
}

export function withGridResult(state: AppState, response: GridResponse): AppState {
  return {
    ...state,
    stats: response.sector_stats,
    features: response.features,
    warning: null,
    pendingGrid: false,
    classification: null,
  };
}

export function withGridError(state: AppState, status: number, body: unknown): AppState {
  const doc = (body ?? {}) as { error?: string; sector?: string };
  let warning: Warning;
  if (status === 422 && doc.error === "EmptySector" && doc.sector) {
    warning = { kind: "empty-sector", sector: doc.sector as SectorId };
  } else if (status === 400) {
    warning = { kind: "invalid-grid", message: doc.error ?? "invalid grid" };
  } else {
    warning = { kind: "error", message: doc.error ?? `request failed (${status})` };
  }
  return {
    ...state,
    stats: null,
    features: null,
    warning,
    pendingGrid: false,
    classification: null,
  };
}

export function withModels(state: AppState, models: ModelInfo[]): AppState {
  const selected =
    state.selectedModel && models.some((m) => m.model_id === state.selectedModel)
      ? state.selectedModel
      : models.length
        ? models[0]!.model_id
        : null;
  return { ...state, models, selectedModel: selected };
}

export function withClassification(state: AppState, result: Classification): AppState {
  return { ...state, classification: result };
}

/** Classification is allowed only once a valid grid produced statistics. */
export function canClassify(state: AppState): boolean {
  return (
    state.sessionId !== null &&
    state.features !== null &&
    state.warning === null &&
    !state.pendingGrid &&
    state.selectedModel !== null
  );
}

/** The sector to highlight in the overlay and table, if any. */
export function highlightedSector(state: AppState): SectorId | null {
  return state.warning?.kind === "empty-sector" ? state.warning.sector : null;
}

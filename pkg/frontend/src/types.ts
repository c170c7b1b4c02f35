// Payload shapes of the screening service API.

export type LateralityCode = "OD" | "OS";

export interface GridParams {
  cx: number;
  cy: number;
  r1: number;
  r2: number;
  r3: number;
  laterality: LateralityCode;
}

export interface SectorStats {
  mean: number;
  std: number;
  pixel_count: number;
}

export const SECTOR_IDS = [
  "CSF", "TIM", "SIM", "NIM", "IIM", "TOM", "SOM", "NOM", "IOM",
] as const;

export type SectorId = (typeof SECTOR_IDS)[number];

export interface OverlayPayload {
  cx: number;
  cy: number;
  radii: [number, number, number];
  diagonal_angles_deg: number[];
  laterality: LateralityCode;
  nasal_side: "left" | "right";
}

export interface GridResponse {
  features: number[];
  sector_stats: Record<SectorId, SectorStats>;
  overlay: OverlayPayload;
}

export interface SessionCreated {
  session_id: string;
  width: number;
  height: number;
}

export interface SessionSummary {
  session_id: string;
  width: number;
  height: number;
  has_grid: boolean;
  has_classification: boolean;
  created_at: number;
  updated_at: number;
}

export interface SessionState {
  session_id: string;
  width: number;
  height: number;
  max_value: number;
  grid: GridParams | null;
  features: number[] | null;
  sector_stats: Record<SectorId, SectorStats> | null;
  classification: Classification | null;
}

export interface Classification {
  label: 1 | -1;
  decision_value: number;
  signed_distance: number;
  model_id: string;
}

export interface ModelInfo {
  model_id: string;
  kernel: "linear" | "rbf";
  scale_factor: number | null;
  C: number;
  standardized: boolean;
  n_support_vectors: number;
  dimension: number;
  class_counts: [number, number];
}

export interface ApiError {
  error: string;
  sector?: string;
}

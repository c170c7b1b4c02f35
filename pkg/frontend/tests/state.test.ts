import { describe, expect, it } from "vitest";

import {
  canClassify,
  highlightedSector,
  initialState,
  withClassification,
  withGridEdit,
  withGridError,
  withGridResult,
  withModels,
  withSession,
} from "../src/state.js";
import type { GridResponse, ModelInfo } from "../src/types.js";

const grid = { cx: 32, cy: 32, r1: 5, r2: 15, r3: 30, laterality: "OD" as const };

const gridResponse: GridResponse = {
  features: Array(18).fill(1),
  sector_stats: Object.fromEntries(
    ["CSF", "TIM", "SIM", "NIM", "IIM", "TOM", "SOM", "NOM", "IOM"].map((s) => [
      s,
      { mean: 1, std: 0, pixel_count: 10 },
    ]),
  ) as GridResponse["sector_stats"],
  overlay: {
    cx: 32, cy: 32, radii: [5, 15, 30],
    diagonal_angles_deg: [45, 135, 225, 315],
    laterality: "OD", nasal_side: "right",
  },
};

const model: ModelInfo = {
  model_id: "demo", kernel: "rbf", scale_factor: 2.75, C: 1,
  standardized: true, n_support_vectors: 12, dimension: 18, class_counts: [8, 6],
};

function readyState() {
  let s = withSession(initialState(), "abc", 64, 64);
  s = withModels(s, [model]);
  s = withGridEdit(s, grid);
  s = withGridResult(s, gridResponse);
  return s;
}

describe("classification gating", () => {
  it("is disabled until a valid grid produced statistics", () => {
    let s = withSession(initialState(), "abc", 64, 64);
    s = withModels(s, [model]);
    expect(canClassify(s)).toBe(false);
    s = withGridEdit(s, grid);
    expect(canClassify(s)).toBe(false); // pending server confirmation
    s = withGridResult(s, gridResponse);
    expect(canClassify(s)).toBe(true);
  });

  it("is disabled while a warning is active", () => {
    let s = readyState();
    s = withGridError(s, 422, { error: "EmptySector", sector: "NOM" });
    expect(canClassify(s)).toBe(false);
  });

  it("requires a model", () => {
    let s = readyState();
    s = withModels(s, []);
    expect(canClassify(s)).toBe(false);
  });
});

describe("empty-sector handling", () => {
  it("surfaces the offending sector for highlighting", () => {
    const s = withGridError(readyState(), 422, { error: "EmptySector", sector: "NOM" });
    expect(s.warning).toEqual({ kind: "empty-sector", sector: "NOM" });
    expect(highlightedSector(s)).toBe("NOM");
    expect(s.stats).toBeNull();
  });

  it("maps 400 to an invalid-grid warning", () => {
    const s = withGridError(readyState(), 400, { error: "grid radii must satisfy 0 < r1 < r2 < r3" });
    expect(s.warning?.kind).toBe("invalid-grid");
    expect(highlightedSector(s)).toBeNull();
  });

  it("a successful grid update clears the warning", () => {
    let s = withGridError(readyState(), 422, { error: "EmptySector", sector: "CSF" });
    s = withGridResult(s, gridResponse);
    expect(s.warning).toBeNull();
  });
});

describe("staleness rules", () => {
  it("moving the grid drops the previous classification", () => {
    let s = readyState();
    s = withClassification(s, {
      label: -1, decision_value: -0.5, signed_distance: 0.7, model_id: "demo",
    });
    expect(s.classification).not.toBeNull();
    s = withGridEdit(s, { ...grid, r3: 31 });
    expect(s.classification).toBeNull();
  });

  it("a new session resets everything but the model list", () => {
    let s = readyState();
    s = withSession(s, "next", 32, 32);
    expect(s.sessionId).toBe("next");
    expect(s.stats).toBeNull();
    expect(s.models).toHaveLength(1);
  });

  it("model list reconciliation keeps a still-valid selection", () => {
    let s = readyState();
    expect(s.selectedModel).toBe("demo");
    s = withModels(s, [model, { ...model, model_id: "other" }]);
    expect(s.selectedModel).toBe("demo");
    s = withModels(s, [{ ...model, model_id: "other" }]);
    expect(s.selectedModel).toBe("other");
  });
});

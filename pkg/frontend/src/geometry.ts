// Pure geometry used by the placement canvas: radius clamping, handle hit
// testing, sector label anchors, and the signed-distance gauge mapping.
// The server's sector rule is the single source of truth; everything here
// only renders the overlay parameters it returns.

import type { GridParams, LateralityCode, SectorId } from "./types.js";

export const MIN_RING_GAP = 2; // px between consecutive ring radii

export type RingName = "r1" | "r2" | "r3";

/** Adjust one radius, clamping so 0 < r1 < r2 < r3 always holds. */
export function clampRadius(grid: GridParams, ring: RingName, value: number): GridParams {
  const next = { ...grid };
  if (ring === "r1") {
    next.r1 = Math.min(Math.max(value, MIN_RING_GAP), grid.r2 - MIN_RING_GAP);
  } else if (ring === "r2") {
    next.r2 = Math.min(Math.max(value, grid.r1 + MIN_RING_GAP), grid.r3 - MIN_RING_GAP);
  } else {
    next.r3 = Math.max(value, grid.r2 + MIN_RING_GAP);
  }
  return next;
}

/** Scale all three radii together, preserving their ratios. */
export function scaleRadii(grid: GridParams, factor: number): GridParams {
  const f = Math.max(factor, MIN_RING_GAP / grid.r1);
  return { ...grid, r1: grid.r1 * f, r2: grid.r2 * f, r3: grid.r3 * f };
}

export interface HandleHit {
  ring: RingName;
}

/**
 * Which ring handle (if any) is under the pointer. A ring is grabbable
 * anywhere along its circle within `tolerance` pixels; the innermost
 * matching ring wins so overlapping tolerances stay predictable.
 */
export function hitTestRing(
  px: number,
  py: number,
  grid: GridParams,
  tolerance = 6,
): HandleHit | null {
  const r = Math.hypot(px - grid.cx, py - grid.cy);
  const rings: [RingName, number][] = [
    ["r1", grid.r1],
    ["r2", grid.r2],
    ["r3", grid.r3],
  ];
  let best: HandleHit | null = null;
  let bestGap = tolerance;
  for (const [ring, radius] of rings) {
    const gap = Math.abs(r - radius);
    if (gap <= bestGap) {
      best = { ring };
      bestGap = gap;
    }
  }
  return best;
}

/** Temporal/nasal orientation: which side of the image is nasal. */
export function nasalSide(laterality: LateralityCode, odNasalRight = true): "left" | "right" {
  const right = (laterality === "OD") === odNasalRight;
  return right ? "right" : "left";
}

export interface LabelAnchor {
  sector: SectorId;
  x: number;
  y: number;
}

/**
 * Label anchor per sector: CSF at the center, ring labels at the quadrant
 * midlines (up, down, and the two horizontal sides assigned by laterality).
 */
export function sectorLabelAnchors(grid: GridParams, side: "left" | "right"): LabelAnchor[] {
  const innerR = (grid.r1 + grid.r2) / 2;
  const outerR = (grid.r2 + grid.r3) / 2;
  const horizontal: [SectorId, SectorId, number][] =
    side === "right"
      ? [
          ["NIM", "NOM", 1],
          ["TIM", "TOM", -1],
        ]
      : [
          ["NIM", "NOM", -1],
          ["TIM", "TOM", 1],
        ];
  const anchors: LabelAnchor[] = [{ sector: "CSF", x: grid.cx, y: grid.cy }];
  anchors.push({ sector: "SIM", x: grid.cx, y: grid.cy - innerR });
  anchors.push({ sector: "IIM", x: grid.cx, y: grid.cy + innerR });
  anchors.push({ sector: "SOM", x: grid.cx, y: grid.cy - outerR });
  anchors.push({ sector: "IOM", x: grid.cx, y: grid.cy + outerR });
  for (const [inner, outer, sign] of horizontal) {
    anchors.push({ sector: inner, x: grid.cx + sign * innerR, y: grid.cy });
    anchors.push({ sector: outer, x: grid.cx + sign * outerR, y: grid.cy });
  }
  return anchors;
}

export interface GaugeReading {
  /** Position in [-1, 1]: negative = diseased side, positive = healthy. */
  fraction: number;
  side: "healthy" | "diseased" | "boundary";
}

/** Map a signed distance onto the gauge; positive is the healthy side. */
export function gaugeReading(signedDistance: number, fullScale = 3): GaugeReading {
  const fraction = Math.max(-1, Math.min(1, signedDistance / fullScale));
  const side =
    signedDistance > 0 ? "healthy" : signedDistance < 0 ? "diseased" : "boundary";
  return { fraction, side };
}

// The formatter must reproduce the backend's serialized digits exactly:
// every value the API sends is re-rendered client-side, and the acceptance
// contract is equality with CLI output to the last digit.

import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { formatG17 } from "../src/format.js";

interface ParityFixture {
  formatter_probes: { value: number; text: string }[];
  cases: {
    name: string;
    sectors: Record<
      string,
      { mean: number; mean_text: string; std: number; std_text: string; pixel_count: number }
    >;
    features: number[];
    features_text: string[];
    classification: {
      decision_value: number;
      decision_text: string;
      signed_distance: number;
      distance_text: string;
    };
  }[];
}

const fixturePath = fileURLToPath(new URL("./fixtures/parity.json", import.meta.url));
const fixture: ParityFixture = JSON.parse(readFileSync(fixturePath, "utf-8"));

describe("formatG17", () => {
  it("matches the backend encoding on the probe values", () => {
    for (const probe of fixture.formatter_probes) {
      expect(formatG17(probe.value), `value ${probe.value}`).toBe(probe.text);
    }
  });

  it("matches CLI serialization for all scripted image/grid pairs", () => {
    for (const c of fixture.cases) {
      c.features.forEach((value, i) => {
        expect(formatG17(value), `${c.name} feature ${i}`).toBe(c.features_text[i]);
      });
      for (const [sector, stats] of Object.entries(c.sectors)) {
        expect(formatG17(stats.mean), `${c.name} ${sector} mean`).toBe(stats.mean_text);
        expect(formatG17(stats.std), `${c.name} ${sector} std`).toBe(stats.std_text);
      }
      expect(formatG17(c.classification.decision_value)).toBe(c.classification.decision_text);
      expect(formatG17(c.classification.signed_distance)).toBe(c.classification.distance_text);
    }
  });

  it("covers five scripted cases", () => {
    expect(fixture.cases).toHaveLength(5);
  });

  it("normalizes zeros and rejects non-finite input", () => {
    expect(formatG17(0)).toBe("0");
    expect(formatG17(-0)).toBe("0");
    expect(() => formatG17(Number.NaN)).toThrow();
    expect(() => formatG17(Number.POSITIVE_INFINITY)).toThrow();
  });

  it("round-trips through Number()", () => {
    for (const probe of fixture.formatter_probes) {
      if (probe.value === 0) continue;
      expect(Number(formatG17(probe.value))).toBe(probe.value);
    }
  });
});

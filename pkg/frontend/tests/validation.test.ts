import { describe, expect, it } from "vitest";

import { isValid, validateForm, type FormValues } from "../src/validation.js";

function values(overrides: Partial<FormValues> = {}): FormValues {
  return {
    experiment_id: "exp-1",
    concentration: 12.5,
    plate_count: 2,
    end_pressure: 10,
    cloth_cycles: 5,
    ...overrides,
  };
}

describe("validateForm", () => {
  it("accepts every experiment-table configuration", () => {
    const tableRows: [number, number, number, number][] = [
      [6.25, 2, 2.0, 34],
      [6.25, 2, 8.0, 29],
      [12.5, 1, 10.0, 4],
      [12.5, 2, 0.2, 1],
      [12.5, 2, 10.0, 36],
      [12.5, 3, 10.0, 2],
      [15.0, 2, 10.0, 7],
      [25.0, 2, 5.0, 18],
      [25.0, 4, 10.0, 26],
    ];
    for (const [concentration, plate_count, end_pressure, cloth_cycles] of tableRows) {
      expect(
        validateForm(values({ concentration, plate_count, end_pressure, cloth_cycles })),
      ).toEqual([]);
    }
  });

  it.each([
    ["concentration", { concentration: 0 }],
    ["concentration", { concentration: -4 }],
    ["concentration", { concentration: Number.NaN }],
    ["plate_count", { plate_count: 0 }],
    ["plate_count", { plate_count: -1 }],
    ["plate_count", { plate_count: 2.5 }],
    ["end_pressure", { end_pressure: 0 }],
    ["end_pressure", { end_pressure: -0.5 }],
    ["end_pressure", { end_pressure: 10.1 }],
    ["end_pressure", { end_pressure: 12 }],
    ["cloth_cycles", { cloth_cycles: 0 }],
    ["cloth_cycles", { cloth_cycles: -2 }],
    ["cloth_cycles", { cloth_cycles: 1.5 }],
    ["experiment_id", { experiment_id: "" }],
    ["experiment_id", { experiment_id: "   " }],
  ] as const)("blocks invalid %s (%o)", (field, override) => {
    const violations = validateForm(values(override));
    expect(violations.length).toBeGreaterThan(0);
    expect(violations.map((v) => v.field)).toContain(field);
    expect(isValid(values(override))).toBe(false);
  });

  it("boundary values stay valid", () => {
    expect(validateForm(values({ end_pressure: 10 }))).toEqual([]);
    expect(validateForm(values({ plate_count: 1, cloth_cycles: 1 }))).toEqual([]);
  });
});

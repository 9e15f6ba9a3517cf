import { describe, expect, it } from "vitest";

import { parseGenotype } from "../src/genotype.js";

const VALID = {
  filter_base: 32,
  kernel_size: 3,
  num_stages: 2,
  dropout_rate: 0.1,
  attention: "squeeze_excitation",
  fusion: "add",
  activation: "relu",
  residual_scale: 0.2,
};

describe("parseGenotype", () => {
  it("accepts an in-range genotype", () => {
    const genotype = parseGenotype(VALID);
    expect(genotype.filter_base).toBe(32);
    expect(genotype.attention).toBe("squeeze_excitation");
  });

  it.each([
    ["filter_base below range", { ...VALID, filter_base: 31 }],
    ["filter_base above range", { ...VALID, filter_base: 128 }],
    ["filter_base non-integer", { ...VALID, filter_base: 32.5 }],
    ["kernel_size zero", { ...VALID, kernel_size: 0 }],
    ["num_stages too deep", { ...VALID, num_stages: 5 }],
    ["dropout_rate too low", { ...VALID, dropout_rate: 0.05 }],
    ["dropout_rate too high", { ...VALID, dropout_rate: 0.6 }],
    ["unknown attention", { ...VALID, attention: "cbam" }],
    ["unknown fusion", { ...VALID, fusion: "max" }],
    ["unknown activation", { ...VALID, activation: "gelu" }],
    ["residual_scale out of range", { ...VALID, residual_scale: 1.5 }],
    ["missing field", (({ fusion: _, ...rest }) => rest)(VALID)],
    ["extra field", { ...VALID, extra: 1 }],
    ["string where number expected", { ...VALID, filter_base: "32" }],
    ["not an object", 42],
    ["null", null],
  ])("rejects %s", (_label, value) => {
    expect(() => parseGenotype(value)).toThrow(/invalid genotype/);
  });

  it("names the offending gene in the error", () => {
    expect(() => parseGenotype({ ...VALID, attention: "cbam" })).toThrow(
      /attention/
    );
    expect(() => parseGenotype({ ...VALID, filter_base: 5000 })).toThrow(
      /filter_base/
    );
  });
});

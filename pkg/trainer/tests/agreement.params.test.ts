/** Cross-implementation agreement on model complexity.
 *
 * Samples random genotypes across the whole search space, asks the engine's
 * CLI (`evoseg plan`) for its parameter/FLOP totals, and checks that
 *  - the local analytic plan agrees exactly, and
 *  - the actually-built model's trainable parameter count agrees within 1%
 *    (it is exact by construction; the 1% bound is the contract).
 */

import { execFileSync } from "node:child_process";

import * as tf from "@tensorflow/tfjs";
import { beforeAll, describe, expect, it } from "vitest";

import { Genotype } from "../src/genotype.js";
import { buildModel } from "../src/model.js";
import { planTotals } from "../src/plan.js";
import { mulberry32 } from "../src/prng.js";

beforeAll(async () => {
  await tf.setBackend("cpu");
  await tf.ready();
});

const ATTENTION = ["squeeze_excitation", "self_attention"] as const;
const FUSION = ["add", "concat", "weighted_sum"] as const;
const ACTIVATION = ["relu", "elu", "tanh", "sigmoid"] as const;

function randomGenotype(rng: ReturnType<typeof mulberry32>): Genotype {
  return {
    filter_base: 32 + rng.int(96), // [32, 127]
    kernel_size: 1 + rng.int(7), // [1, 7]
    num_stages: 2 + rng.int(3), // [2, 4]
    dropout_rate: 0.1 + rng.next() * 0.4,
    attention: ATTENTION[rng.int(ATTENTION.length)],
    fusion: FUSION[rng.int(FUSION.length)],
    activation: ACTIVATION[rng.int(ACTIVATION.length)],
    residual_scale: 0.1 + rng.next() * 0.9,
  };
}

function engineTotals(genotype: Genotype): { params: number; flops: number } {
  const stdout = execFileSync("evoseg", ["plan", "-"], {
    input: JSON.stringify(genotype),
    encoding: "utf-8",
  });
  const match = stdout.match(/totals: params=([\d,]+) flops=([\d,]+)/);
  if (!match) throw new Error(`cannot parse plan output:\n${stdout}`);
  return {
    params: Number(match[1].replace(/,/g, "")),
    flops: Number(match[2].replace(/,/g, "")),
  };
}

describe("parameter agreement with the engine planner", () => {
  it("20 random genotypes stay within 1% (exact in practice)", () => {
    const rng = mulberry32(20250823);
    for (let i = 0; i < 20; i++) {
      const genotype = randomGenotype(rng);
      const engine = engineTotals(genotype);
      const local = planTotals(genotype);
      expect(local.params).toBe(engine.params);
      expect(local.flops).toBe(engine.flops);

      const model = buildModel(genotype, 1000 + i);
      const relativeError =
        Math.abs(model.paramCount - engine.params) / engine.params;
      expect(relativeError).toBeLessThanOrEqual(0.01);
      expect(model.paramCount).toBe(engine.params);
      model.dispose();
    }
  });
});

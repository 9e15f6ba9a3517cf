/** Analytic parameter/FLOP counts for the network a genotype describes.
 *
 * This transcribes the engine's counting conventions so the worker can report
 * totals without executing tensors (1 MAC = 2 FLOPs, bias parameters counted,
 * bias FLOPs excluded); the real model in model.ts follows the same block
 * recipe, so its variable count must agree with countPlanParams exactly.
 */

import { Activation, Genotype } from "./genotype.js";

export const INPUT_SIZE = 128;
export const NUM_CLASSES = 4;
export const CONVS_PER_BLOCK = 2;
export const DILATION_RATES = [1, 2, 4] as const;
export const SE_REDUCTION = 4;

export const ACTIVATION_FLOP_COSTS: Record<Activation | "softmax", number> = {
  relu: 1,
  elu: 3,
  tanh: 4,
  sigmoid: 3,
  softmax: 5,
};

export interface PlanTotals {
  params: number;
  flops: number;
}

const convParams = (k: number, cIn: number, cOut: number): number =>
  k * k * cIn * cOut + cOut;
const convFlops = (
  k: number,
  cIn: number,
  cOut: number,
  h: number,
  w: number
): number => 2 * k * k * cIn * cOut * h * w;

function seCounts(h: number, w: number, c: number): PlanTotals {
  const hidden = Math.max(1, Math.floor(c / SE_REDUCTION));
  return {
    params: c * hidden + hidden + hidden * c + c,
    flops: h * w * c + 2 * c * hidden + hidden + 2 * hidden * c + 3 * c + h * w * c,
  };
}

function saCounts(h: number, w: number, c: number): PlanTotals {
  const n = h * w;
  const dQk = Math.max(1, Math.floor(c / 8));
  const dV = Math.max(1, Math.floor(c / 4));
  return {
    params: 2 * (c * dQk + dQk) + (c * dV + dV) + (dV * c + c),
    flops:
      2 * c * dQk * n * 2 +
      2 * c * dV * n +
      2 * n * n * dQk +
      3 * n * n +
      2 * n * n * dV +
      2 * dV * c * n,
  };
}

/** Walk the block recipe and accumulate totals. */
export function planTotals(g: Genotype): PlanTotals {
  const actCost = ACTIVATION_FLOP_COSTS[g.activation];
  let params = 0;
  let flops = 0;
  let h = INPUT_SIZE;
  let w = INPUT_SIZE;
  let c = 1;

  if (INPUT_SIZE % 2 ** g.num_stages !== 0) {
    throw new Error(`input not divisible by 2^${g.num_stages}`);
  }

  const stageChannels: number[] = [];
  for (let i = 0; i < g.num_stages; i++) {
    stageChannels.push(g.filter_base * 2 ** i);
  }
  const skipChannels: number[] = [];

  // encoder
  for (let i = 1; i <= g.num_stages; i++) {
    const cOut = stageChannels[i - 1];
    for (let b = 0; b < CONVS_PER_BLOCK; b++) {
      params += convParams(g.kernel_size, c, cOut);
      flops += convFlops(g.kernel_size, c, cOut, h, w);
      c = cOut;
      flops += actCost * h * w * c;
    }
    if (g.attention === "squeeze_excitation") {
      const se = seCounts(h, w, c);
      params += se.params;
      flops += se.flops;
    } else if (i === g.num_stages) {
      const sa = saCounts(h, w, c);
      params += sa.params;
      flops += sa.flops;
    }
    skipChannels.push(c);
    h = Math.floor(h / 2);
    w = Math.floor(w / 2);
    flops += 3 * h * w * c; // 2x2 max pool comparisons
  }

  // bottleneck
  const cDeep = stageChannels[stageChannels.length - 1];
  const cBottleneck = Math.max(1, Math.floor(cDeep / 2));
  params += convParams(1, c, cBottleneck);
  flops += convFlops(1, c, cBottleneck, h, w);
  c = cBottleneck;
  for (const _rate of DILATION_RATES) {
    params += convParams(g.kernel_size, c, c);
    flops += convFlops(g.kernel_size, c, c, h, w);
  }
  flops += (DILATION_RATES.length - 1) * h * w * c; // fixed add of branches
  flops += actCost * h * w * c;
  if (g.attention === "self_attention") {
    const sa = saCounts(h, w, c);
    params += sa.params;
    flops += sa.flops;
  }

  // decoder
  for (let j = 1; j <= g.num_stages; j++) {
    const sC = skipChannels[g.num_stages - j];
    h *= 2;
    w *= 2;
    params += convParams(3, c, sC); // post-upsample projection
    flops += convFlops(3, c, sC, h, w);
    c = sC;
    let fusedC = sC;
    if (g.fusion === "concat") {
      fusedC = 2 * sC;
      params += convParams(1, sC, fusedC); // skip projection for residual
      flops += convFlops(1, sC, fusedC, h, w);
      c = fusedC;
    } else if (g.fusion === "weighted_sum") {
      params += 2;
      flops += 3 * h * w * fusedC;
    } else {
      flops += h * w * fusedC;
    }
    flops += 3 * h * w * fusedC; // residual scaling
    const dC = Math.max(1, Math.floor(sC / 2));
    for (let b = 0; b < CONVS_PER_BLOCK; b++) {
      params += convParams(g.kernel_size, c, dC);
      flops += convFlops(g.kernel_size, c, dC, h, w);
      c = dC;
      flops += actCost * h * w * c;
    }
  }

  // output
  params += convParams(1, c, NUM_CLASSES);
  flops += convFlops(1, c, NUM_CLASSES, h, w);
  flops += ACTIVATION_FLOP_COSTS.softmax * h * w * NUM_CLASSES;

  return { params, flops };
}

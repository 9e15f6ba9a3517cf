/** Trainable network built from a genotype.
 *
 * The graph mirrors the engine's architecture plan block for block — same
 * stage counts, channel widths, attention placements, fusion wiring — so the
 * trainable parameter count equals the engine's analytic count exactly:
 *
 *  - encoder stage i (width f·2^(i−1)): two k×k convs with activation,
 *    dropout, squeeze-excitation every stage or self-attention at the deepest
 *    stage only, then 2×2 max pool (skip taken before pooling);
 *  - bottleneck: 1×1 reduction to half the deepest width, parallel dilated
 *    k×k convs (rates 1/2/4) summed, activation, self-attention if selected;
 *  - decoder stage j: 2× nearest-neighbour upsample, 3×3 projection to the
 *    skip width, gene-selected fusion, residual scaling α·x + (1−α)·skip,
 *    then two k×k convs narrowing to half the skip width;
 *  - output: 1×1 conv to 4 class logits (softmax applied by the caller).
 *
 * Initialization and dropout draw from a caller-seeded PRNG, so results do
 * not depend on the tf.js backend's RNG.
 */

import * as tf from "@tensorflow/tfjs";

import { conv2dSame } from "./fastconv.js";
import { Activation, Genotype } from "./genotype.js";
import {
  CONVS_PER_BLOCK,
  DILATION_RATES,
  INPUT_SIZE,
  NUM_CLASSES,
  SE_REDUCTION,
} from "./plan.js";
import { Rng, mulberry32 } from "./prng.js";

export interface BuiltModel {
  genotype: Genotype;
  variables: tf.Variable[];
  paramCount: number;
  /** Forward pass to class logits [batch, 128, 128, 4]. */
  forward(x: tf.Tensor4D, training: boolean, dropoutRng?: Rng): tf.Tensor4D;
  /** Snapshot all weights (for best-epoch restore). */
  snapshot(): Float32Array[];
  restore(weights: Float32Array[]): void;
  dispose(): void;
}

function heTensor(rng: Rng, shape: number[], fanIn: number): tf.Tensor {
  const size = shape.reduce((a, b) => a * b, 1);
  const std = Math.sqrt(2.0 / fanIn);
  const values = new Float32Array(size);
  for (let i = 0; i < size; i++) values[i] = std * rng.normal();
  return tf.tensor(values, shape);
}

function applyActivation(x: tf.Tensor4D, kind: Activation): tf.Tensor4D {
  switch (kind) {
    case "relu":
      return tf.relu(x);
    case "elu":
      return tf.elu(x);
    case "tanh":
      return tf.tanh(x);
    case "sigmoid":
      return tf.sigmoid(x);
  }
}

let modelCounter = 0;

export function buildModel(genotype: Genotype, seed: number): BuiltModel {
  if (INPUT_SIZE % 2 ** genotype.num_stages !== 0) {
    throw new Error(
      `input ${INPUT_SIZE} not divisible by 2^${genotype.num_stages}`
    );
  }
  const rng = mulberry32(seed >>> 0 || 1);
  const variables: tf.Variable[] = [];
  // variable names are global in the engine, so scope them per instance
  const scope = `m${modelCounter++}`;

  const makeVariable = (initial: tf.Tensor, name: string): tf.Variable => {
    const variable = tf.variable(initial, true, `${scope}/${name}`);
    initial.dispose();
    variables.push(variable);
    return variable;
  };

  interface Conv {
    kernel: tf.Variable;
    bias: tf.Variable;
  }
  const makeConv = (
    k: number,
    cIn: number,
    cOut: number,
    name: string
  ): Conv => ({
    kernel: makeVariable(heTensor(rng, [k, k, cIn, cOut], k * k * cIn), `${name}/kernel`),
    bias: makeVariable(tf.zeros([cOut]), `${name}/bias`),
  });
  const conv = (
    x: tf.Tensor4D,
    layer: Conv,
    dilation = 1
  ): tf.Tensor4D =>
    tf.add(
      conv2dSame(x, layer.kernel as tf.Tensor4D, dilation),
      layer.bias
    ) as tf.Tensor4D;

  interface Dense {
    weight: tf.Variable;
    bias: tf.Variable;
  }
  const makeDense = (cIn: number, cOut: number, name: string): Dense => ({
    weight: makeVariable(heTensor(rng, [cIn, cOut], cIn), `${name}/weight`),
    bias: makeVariable(tf.zeros([cOut]), `${name}/bias`),
  });

  interface SeBlock {
    kind: "se";
    reduce: Dense;
    expand: Dense;
  }
  interface SaBlock {
    kind: "sa";
    q: Dense;
    k: Dense;
    v: Dense;
    out: Dense;
    dQk: number;
  }
  const makeSe = (c: number, name: string): SeBlock => {
    const hidden = Math.max(1, Math.floor(c / SE_REDUCTION));
    return {
      kind: "se",
      reduce: makeDense(c, hidden, `${name}/reduce`),
      expand: makeDense(hidden, c, `${name}/expand`),
    };
  };
  const makeSa = (c: number, name: string): SaBlock => {
    const dQk = Math.max(1, Math.floor(c / 8));
    const dV = Math.max(1, Math.floor(c / 4));
    return {
      kind: "sa",
      q: makeDense(c, dQk, `${name}/q`),
      k: makeDense(c, dQk, `${name}/k`),
      v: makeDense(c, dV, `${name}/v`),
      out: makeDense(dV, c, `${name}/out`),
      dQk,
    };
  };

  const applySe = (x: tf.Tensor4D, block: SeBlock): tf.Tensor4D => {
    const pooled = tf.mean(x, [1, 2]) as tf.Tensor2D; // [batch, c]
    const squeezed = tf.relu(
      tf.add(tf.matMul(pooled, block.reduce.weight as tf.Tensor2D), block.reduce.bias)
    ) as tf.Tensor2D;
    const scale = tf.sigmoid(
      tf.add(tf.matMul(squeezed, block.expand.weight as tf.Tensor2D), block.expand.bias)
    );
    const c = x.shape[3];
    return tf.mul(x, tf.reshape(scale, [-1, 1, 1, c])) as tf.Tensor4D;
  };

  const applySa = (x: tf.Tensor4D, block: SaBlock): tf.Tensor4D => {
    const [batch, h, w, c] = x.shape;
    const n = h * w;
    const flat = tf.reshape(x, [batch * n, c]) as tf.Tensor2D;
    const project = (dense: Dense, width: number): tf.Tensor3D =>
      tf.reshape(
        tf.add(tf.matMul(flat, dense.weight as tf.Tensor2D), dense.bias),
        [batch, n, width]
      ) as tf.Tensor3D;
    const q = project(block.q, block.dQk);
    const k = project(block.k, block.dQk);
    const dV = (block.v.bias.shape as number[])[0];
    const v = project(block.v, dV);
    const logits = tf.mul(
      tf.matMul(q, k, false, true),
      1.0 / Math.sqrt(block.dQk)
    );
    const attention = tf.softmax(logits, -1);
    const mixed = tf.reshape(tf.matMul(attention, v), [batch * n, dV]) as tf.Tensor2D;
    const output = tf.add(
      tf.matMul(mixed, block.out.weight as tf.Tensor2D),
      block.out.bias
    );
    return tf.add(x, tf.reshape(output, [batch, h, w, c])) as tf.Tensor4D;
  };

  // ---- construct variables in recipe order ----
  const stageChannels: number[] = [];
  for (let i = 0; i < genotype.num_stages; i++) {
    stageChannels.push(genotype.filter_base * 2 ** i);
  }
  const k = genotype.kernel_size;

  interface EncoderStage {
    convs: Conv[];
    attention: SeBlock | SaBlock | null;
  }
  const encoder: EncoderStage[] = [];
  let c = 1;
  for (let i = 1; i <= genotype.num_stages; i++) {
    const cOut = stageChannels[i - 1];
    const convs: Conv[] = [];
    for (let b = 0; b < CONVS_PER_BLOCK; b++) {
      convs.push(makeConv(k, c, cOut, `enc${i}/conv${b}`));
      c = cOut;
    }
    let attention: SeBlock | SaBlock | null = null;
    if (genotype.attention === "squeeze_excitation") {
      attention = makeSe(c, `enc${i}/se`);
    } else if (i === genotype.num_stages) {
      attention = makeSa(c, `enc${i}/sa`);
    }
    encoder.push({ convs, attention });
  }

  const cDeep = stageChannels[stageChannels.length - 1];
  const cBottleneck = Math.max(1, Math.floor(cDeep / 2));
  const bottleneckReduce = makeConv(1, c, cBottleneck, "bottleneck/reduce");
  c = cBottleneck;
  const bottleneckBranches = DILATION_RATES.map((rate) =>
    makeConv(k, c, c, `bottleneck/dilated_r${rate}`)
  );
  const bottleneckAttention =
    genotype.attention === "self_attention" ? makeSa(c, "bottleneck/sa") : null;

  interface DecoderStage {
    project: Conv;
    skipProject: Conv | null; // concat fusion only
    fusionWeights: tf.Variable | null; // weighted-sum fusion only
    convs: Conv[];
    skipChannels: number;
  }
  const decoder: DecoderStage[] = [];
  for (let j = 1; j <= genotype.num_stages; j++) {
    const sC = stageChannels[genotype.num_stages - j];
    const project = makeConv(3, c, sC, `dec${j}/project`);
    c = sC;
    let skipProject: Conv | null = null;
    let fusionWeights: tf.Variable | null = null;
    if (genotype.fusion === "concat") {
      skipProject = makeConv(1, sC, 2 * sC, `dec${j}/skip_project`);
      c = 2 * sC;
    } else if (genotype.fusion === "weighted_sum") {
      fusionWeights = makeVariable(
        tf.tensor([0.5, 0.5]),
        `dec${j}/fusion_weights`
      );
    }
    const dC = Math.max(1, Math.floor(sC / 2));
    const convs: Conv[] = [];
    for (let b = 0; b < CONVS_PER_BLOCK; b++) {
      convs.push(makeConv(k, c, dC, `dec${j}/conv${b}`));
      c = dC;
    }
    decoder.push({ project, skipProject, fusionWeights, convs, skipChannels: sC });
  }

  const outputConv = makeConv(1, c, NUM_CLASSES, "output");

  const paramCount = variables.reduce(
    (total, variable) => total + variable.size,
    0
  );

  const dropoutMask = (
    shape: number[],
    rate: number,
    maskRng: Rng
  ): tf.Tensor => {
    const size = shape.reduce((a, b) => a * b, 1);
    const values = new Float32Array(size);
    const scale = 1.0 / (1.0 - rate);
    for (let i = 0; i < size; i++) {
      values[i] = maskRng.next() >= rate ? scale : 0.0;
    }
    return tf.tensor(values, shape);
  };

  const forward = (
    x: tf.Tensor4D,
    training: boolean,
    dropoutRng?: Rng
  ): tf.Tensor4D => {
    const act = (t: tf.Tensor4D) => applyActivation(t, genotype.activation);
    const skips: tf.Tensor4D[] = [];
    let h = x;
    for (const stage of encoder) {
      for (const layer of stage.convs) h = act(conv(h, layer));
      if (training && dropoutRng) {
        h = tf.mul(
          h,
          dropoutMask(h.shape as number[], genotype.dropout_rate, dropoutRng)
        ) as tf.Tensor4D;
      }
      if (stage.attention) {
        h =
          stage.attention.kind === "se"
            ? applySe(h, stage.attention)
            : applySa(h, stage.attention);
      }
      skips.push(h);
      h = tf.maxPool(h, 2, 2, "valid");
    }

    h = conv(h, bottleneckReduce);
    const branchInput = h;
    let merged: tf.Tensor4D | null = null;
    for (let b = 0; b < bottleneckBranches.length; b++) {
      const branch = conv(branchInput, bottleneckBranches[b], DILATION_RATES[b]);
      merged = merged === null ? branch : (tf.add(merged, branch) as tf.Tensor4D);
    }
    h = act(merged as tf.Tensor4D);
    if (bottleneckAttention) h = applySa(h, bottleneckAttention);

    for (let j = 0; j < decoder.length; j++) {
      const stage = decoder[j];
      const skip = skips[decoder.length - 1 - j];
      const [, height, width] = h.shape;
      h = tf.image.resizeNearestNeighbor(h, [height * 2, width * 2]);
      h = conv(h, stage.project);
      let residualSkip = skip;
      let fused: tf.Tensor4D;
      if (stage.skipProject) {
        residualSkip = conv(skip, stage.skipProject);
        fused = tf.concat([h, skip], 3) as tf.Tensor4D;
      } else if (stage.fusionWeights) {
        const weights = stage.fusionWeights;
        const wa = tf.slice(weights, 0, 1);
        const wb = tf.slice(weights, 1, 1);
        fused = tf.add(tf.mul(h, wa), tf.mul(skip, wb)) as tf.Tensor4D;
      } else {
        fused = tf.add(h, skip) as tf.Tensor4D;
      }
      const alpha = genotype.residual_scale;
      h = tf.add(
        tf.mul(fused, alpha),
        tf.mul(residualSkip, 1.0 - alpha)
      ) as tf.Tensor4D;
      for (const layer of stage.convs) h = act(conv(h, layer));
    }

    return conv(h, outputConv);
  };

  return {
    genotype,
    variables,
    paramCount,
    forward,
    snapshot: () =>
      variables.map((variable) => new Float32Array(variable.dataSync() as Float32Array)),
    restore: (weights: Float32Array[]) => {
      if (weights.length !== variables.length) {
        throw new Error("weight snapshot does not match model");
      }
      variables.forEach((variable, index) => {
        const tensor = tf.tensor(weights[index], variable.shape as number[]);
        variable.assign(tensor);
        tensor.dispose();
      });
    },
    dispose: () => {
      for (const variable of variables) variable.dispose();
    },
  };
}

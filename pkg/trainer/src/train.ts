/** Short proxy training for candidate scoring.
 *
 * SGD (lr 0.001, momentum 0.9, Nesterov) with weight decay 1e-4 folded into
 * the loss as 0.5·wd·Σ‖w‖². The loss is softmax cross-entropy plus soft Dice
 * over the three foreground classes. After every epoch the model is scored on
 * the validation split; training stops early when the validation mean DSC has
 * not improved for `early_stop_patience` epochs or when the wall-clock budget
 * is nearly spent. Metrics reported come from the best epoch's weights.
 */

import * as tf from "@tensorflow/tfjs";

import { Dataset, Sample } from "./data.js";
import {
  CLASS_NAMES,
  FOREGROUND_CLASSES,
  Mask,
  report,
} from "./metrics.js";
import { BuiltModel } from "./model.js";
import { Rng, deriveSeed, mulberry32 } from "./prng.js";

export const LEARNING_RATE = 0.001;
export const MOMENTUM = 0.9;
export const WEIGHT_DECAY = 1e-4;
/** Fraction of max_train_seconds after which no new epoch starts. */
const TIME_MARGIN = 0.8;
/** Dice smoothing keeps gradients bounded when a class is nearly absent. */
const DICE_SMOOTH = 1.0;
/** Cross-entropy class weights: background is ~85% of pixels, so it is
 * down-weighted to keep the foreground gradient from being swamped. */
const CLASS_WEIGHTS = [0.1, 1.0, 1.0, 1.0];

export interface TrainBudget {
  maxEpochs: number;
  earlyStopPatience: number;
  maxTrainSeconds: number;
}

export interface EpochPoint {
  epoch: number;
  dsc: number;
  hd95: number | null;
}

export interface EvalSummary {
  dscAvg: number;
  hd95Avg: number | null;
  perClassDsc: Record<string, number>;
  perClassHd95: Record<string, number | null>;
}

export interface TrainOutcome extends EvalSummary {
  curve: EpochPoint[];
  epochsRun: number;
  wallSeconds: number;
}

function batchTensors(
  samples: Sample[],
  indices: number[],
  height: number,
  width: number
): { x: tf.Tensor4D; oneHot: tf.Tensor4D } {
  const n = indices.length;
  const pixels = height * width;
  const images = new Float32Array(n * pixels);
  const labels = new Int32Array(n * pixels);
  indices.forEach((sampleIndex, row) => {
    const source = samples[sampleIndex].image;
    // Centre [0, 1] intensities on zero, matching the He initialization.
    for (let i = 0; i < pixels; i++) {
      images[row * pixels + i] = source[i] * 2.0 - 1.0;
    }
    labels.set(samples[sampleIndex].mask.data, row * pixels);
  });
  const x = tf.tensor4d(images, [n, height, width, 1]);
  const labelTensor = tf.tensor3d(labels, [n, height, width], "int32");
  const oneHot = tf.oneHot(labelTensor, 4) as tf.Tensor4D;
  labelTensor.dispose();
  return { x, oneHot };
}

function segmentationLoss(
  logits: tf.Tensor4D,
  oneHot: tf.Tensor4D
): tf.Scalar {
  const logProbs = tf.logSoftmax(logits, -1);
  const weights = tf.tensor1d(CLASS_WEIGHTS);
  const weighted = tf.mul(oneHot, weights);
  const crossEntropy = tf.div(
    tf.neg(tf.sum(tf.mul(weighted, logProbs))),
    tf.sum(weighted)
  );
  const probs = tf.softmax(logits);
  const intersect = tf.sum(tf.mul(probs, oneHot), [0, 1, 2]);
  const sizes = tf.add(tf.sum(probs, [0, 1, 2]), tf.sum(oneHot, [0, 1, 2]));
  const dicePerClass = tf.div(
    tf.add(tf.mul(intersect, 2.0), DICE_SMOOTH),
    tf.add(sizes, DICE_SMOOTH)
  );
  const foreground = tf.slice(dicePerClass, 1, 3);
  const diceLoss = tf.sub(1.0, tf.mean(foreground));
  return tf.add(crossEntropy, diceLoss) as tf.Scalar;
}

function weightDecayTerm(variables: tf.Variable[]): tf.Scalar {
  let total: tf.Scalar = tf.scalar(0.0);
  for (const variable of variables) {
    total = tf.add(total, tf.sum(tf.square(variable))) as tf.Scalar;
  }
  return tf.mul(total, 0.5 * WEIGHT_DECAY) as tf.Scalar;
}

/** Argmax predictions for a batch of samples. */
export async function predictMasks(
  model: BuiltModel,
  samples: Sample[],
  height: number,
  width: number,
  batchSize = 4
): Promise<Mask[]> {
  const masks: Mask[] = [];
  for (let start = 0; start < samples.length; start += batchSize) {
    const indices: number[] = [];
    for (let i = start; i < Math.min(start + batchSize, samples.length); i++) {
      indices.push(i);
    }
    const predicted = tf.tidy(() => {
      const { x, oneHot } = batchTensors(samples, indices, height, width);
      oneHot.dispose();
      const logits = model.forward(x, false);
      return tf.argMax(logits, 3);
    });
    const values = (await predicted.data()) as Int32Array;
    predicted.dispose();
    const pixels = height * width;
    indices.forEach((_, row) => {
      masks.push({
        data: Uint8Array.from(values.subarray(row * pixels, (row + 1) * pixels)),
        height,
        width,
      });
    });
  }
  return masks;
}

/** Mean validation metrics: per-image reports averaged over the split. */
export async function evaluateOnSamples(
  model: BuiltModel,
  samples: Sample[],
  height: number,
  width: number,
  spacing = 1.0
): Promise<EvalSummary> {
  const predictions = await predictMasks(model, samples, height, width);
  const dscSums: Record<number, number> = {};
  const hd95Sums: Record<number, { total: number; count: number }> = {};
  for (const cls of FOREGROUND_CLASSES) {
    dscSums[cls] = 0;
    hd95Sums[cls] = { total: 0, count: 0 };
  }
  samples.forEach((sample, index) => {
    const summary = report(predictions[index], sample.mask, spacing);
    for (const cls of FOREGROUND_CLASSES) {
      dscSums[cls] += summary.perClassDsc[CLASS_NAMES[cls]];
      const hd = summary.perClassHd95[CLASS_NAMES[cls]];
      if (hd !== null) {
        hd95Sums[cls].total += hd;
        hd95Sums[cls].count += 1;
      }
    }
  });
  const perClassDsc: Record<string, number> = {};
  const perClassHd95: Record<string, number | null> = {};
  let dscTotal = 0;
  const definedHd: number[] = [];
  for (const cls of FOREGROUND_CLASSES) {
    const name = CLASS_NAMES[cls];
    const dsc = dscSums[cls] / samples.length;
    perClassDsc[name] = dsc;
    dscTotal += dsc;
    const { total, count } = hd95Sums[cls];
    perClassHd95[name] = count > 0 ? total / count : null;
    if (count > 0) definedHd.push(total / count);
  }
  return {
    dscAvg: dscTotal / FOREGROUND_CLASSES.length,
    hd95Avg:
      definedHd.length > 0
        ? definedHd.reduce((a, b) => a + b, 0) / definedHd.length
        : null,
    perClassDsc,
    perClassHd95,
  };
}

export async function proxyTrainEval(
  model: BuiltModel,
  dataset: Dataset,
  budget: TrainBudget,
  seed: number,
  batchSize = 1
): Promise<TrainOutcome> {
  const start = Date.now();
  const optimizer = tf.train.momentum(LEARNING_RATE, MOMENTUM, true);
  const shuffleRng: Rng = mulberry32(deriveSeed(seed, "shuffle"));
  const dropoutRng: Rng = mulberry32(deriveSeed(seed, "dropout"));
  const { height, width } = dataset;

  const curve: EpochPoint[] = [];
  let best: EvalSummary | null = null;
  let bestEpoch = 0;
  let bestWeights: Float32Array[] | null = null;
  let epochsRun = 0;

  const order = dataset.train.map((_, index) => index);
  for (let epoch = 1; epoch <= budget.maxEpochs; epoch++) {
    shuffleRng.shuffle(order);
    for (let cursor = 0; cursor < order.length; cursor += batchSize) {
      const indices = order.slice(cursor, cursor + batchSize);
      const { x, oneHot } = batchTensors(
        dataset.train,
        indices,
        height,
        width
      );
      optimizer.minimize(
        () =>
          tf.add(
            segmentationLoss(model.forward(x, true, dropoutRng), oneHot),
            weightDecayTerm(model.variables)
          ) as tf.Scalar,
        false,
        model.variables
      );
      x.dispose();
      oneHot.dispose();
    }
    epochsRun = epoch;

    const summary = await evaluateOnSamples(model, dataset.val, height, width);
    curve.push({ epoch, dsc: summary.dscAvg, hd95: summary.hd95Avg });
    if (best === null || summary.dscAvg > best.dscAvg) {
      best = summary;
      bestEpoch = epoch;
      bestWeights = model.snapshot();
    }
    if (epoch - bestEpoch >= budget.earlyStopPatience) break;
    if ((Date.now() - start) / 1000 > TIME_MARGIN * budget.maxTrainSeconds) {
      break;
    }
  }

  if (bestWeights !== null) model.restore(bestWeights);
  const final = best ?? (await evaluateOnSamples(model, dataset.val, height, width));
  optimizer.dispose();
  return {
    ...final,
    curve,
    epochsRun,
    wallSeconds: (Date.now() - start) / 1000,
  };
}

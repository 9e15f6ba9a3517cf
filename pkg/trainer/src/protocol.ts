/** Line-delimited JSON worker endpoint (protocol version 1).
 *
 * Reads evaluate requests from an input stream, one JSON object per line,
 * and writes exactly one reply line per request: a `result` on success or an
 * `error` naming the echoed request id. A single `ready` line is emitted
 * before any reply. Requests are processed strictly one at a time, in
 * arrival order. Malformed lines and invalid payloads produce `error`
 * replies — never a crash — so one bad candidate costs only itself.
 */

import * as readline from "node:readline";

import { Dataset } from "./data.js";
import { Genotype, parseGenotype } from "./genotype.js";
import { buildModel } from "./model.js";
import { planTotals } from "./plan.js";
import { deriveSeed } from "./prng.js";
import { TrainBudget, proxyTrainEval } from "./train.js";

export const PROTOCOL_VERSION = 1;

export interface ResultBody {
  dsc_avg: number;
  hd95_avg: number;
  per_class: Record<string, number>;
  params: number;
  flops: number;
  eval_cost_seconds: number;
  curve: { epoch: number; dsc: number; hd95: number }[];
}

export interface EvaluationContext {
  evaluate(
    genotype: Genotype,
    budget: TrainBudget,
    seed: number
  ): Promise<ResultBody>;
}

class RequestError extends Error {}

function parseBudget(value: unknown): TrainBudget {
  if (typeof value !== "object" || value === null || Array.isArray(value)) {
    throw new RequestError("budget must be an object");
  }
  const budget = value as Record<string, unknown>;
  const intField = (name: string): number => {
    const field = budget[name];
    if (typeof field !== "number" || !Number.isInteger(field) || field < 1) {
      throw new RequestError(`budget.${name} must be a positive integer`);
    }
    return field;
  };
  const seconds = budget["max_train_seconds"];
  if (typeof seconds !== "number" || !(seconds > 0)) {
    throw new RequestError("budget.max_train_seconds must be positive");
  }
  return {
    maxEpochs: intField("max_epochs"),
    earlyStopPatience: intField("early_stop_patience"),
    maxTrainSeconds: seconds,
  };
}

/** Process one raw input line into exactly one reply message. */
export async function handleLine(
  line: string,
  ctx: EvaluationContext
): Promise<Record<string, unknown>> {
  let message: unknown;
  try {
    message = JSON.parse(line);
  } catch {
    return { type: "error", id: null, message: "request is not valid JSON" };
  }
  if (typeof message !== "object" || message === null || Array.isArray(message)) {
    return { type: "error", id: null, message: "request must be a JSON object" };
  }
  const request = message as Record<string, unknown>;
  const id = "id" in request ? request["id"] : null;
  const fail = (reason: string) => ({
    type: "error",
    id: id as number | null,
    message: reason,
  });
  if (request["type"] !== "evaluate") {
    return fail(`unsupported message type: ${JSON.stringify(request["type"])}`);
  }
  try {
    const genotype = parseGenotype(request["genotype"]);
    const budget = parseBudget(request["budget"]);
    const seedValue = request["seed"] ?? 0;
    if (typeof seedValue !== "number" || !Number.isInteger(seedValue)) {
      throw new RequestError("seed must be an integer");
    }
    const body = await ctx.evaluate(genotype, budget, seedValue);
    return { type: "result", id: id as number | null, ...body };
  } catch (err) {
    const reason = err instanceof Error ? err.message : String(err);
    return fail(reason);
  }
}

/** Real evaluation: build the model, run proxy training, shape the reply. */
export function trainingContext(dataset: Dataset): EvaluationContext {
  return {
    async evaluate(genotype, budget, seed) {
      const started = Date.now();
      const totals = planTotals(genotype);
      const model = buildModel(genotype, deriveSeed(seed, "init"));
      try {
        if (model.paramCount !== totals.params) {
          process.stderr.write(
            `parameter count mismatch: model=${model.paramCount} ` +
              `plan=${totals.params}\n`
          );
        }
        const outcome = await proxyTrainEval(model, dataset, budget, seed);
        const diagonal = Math.hypot(dataset.height, dataset.width);
        const finite = (value: number | null): number =>
          value === null || !Number.isFinite(value) ? diagonal : value;
        const dsc = outcome.dscAvg;
        if (!Number.isFinite(dsc)) {
          throw new Error("training diverged: mean DSC is not finite");
        }
        return {
          dsc_avg: Math.min(1.0, Math.max(0.0, dsc)),
          hd95_avg: finite(outcome.hd95Avg),
          per_class: Object.fromEntries(
            Object.entries(outcome.perClassDsc).map(([name, value]) => [
              name,
              Math.min(1.0, Math.max(0.0, value)),
            ])
          ),
          params: totals.params,
          flops: totals.flops,
          eval_cost_seconds: (Date.now() - started) / 1000,
          curve: outcome.curve.map((point) => ({
            epoch: point.epoch,
            dsc: Math.min(1.0, Math.max(0.0, point.dsc)),
            hd95: finite(point.hd95),
          })),
        };
      } finally {
        model.dispose();
      }
    },
  };
}

/** Serve the protocol over a stream pair until the input closes. */
export async function serve(
  ctx: EvaluationContext,
  input: NodeJS.ReadableStream,
  output: NodeJS.WritableStream
): Promise<void> {
  const send = (message: Record<string, unknown>) => {
    output.write(JSON.stringify(message) + "\n");
  };
  send({ type: "ready", protocol_version: PROTOCOL_VERSION });
  const rl = readline.createInterface({ input, terminal: false });
  let pending: Promise<void> = Promise.resolve();
  rl.on("line", (line) => {
    if (line.trim() === "") return;
    pending = pending.then(async () => {
      send(await handleLine(line, ctx));
    });
  });
  await new Promise<void>((resolve) => rl.on("close", resolve));
  await pending;
}

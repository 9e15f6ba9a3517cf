/** Worker process entry point.
 *
 * Usage: node dist/worker.js [--backend auto|wasm|cpu] [--data-dir DIR]
 *                            [--n-train N] [--n-val N] [--data-seed S]
 *
 * Speaks the line-delimited JSON evaluation protocol on stdin/stdout; all
 * diagnostics go to stderr. Without --data-dir a deterministic synthetic
 * dataset is generated in-process.
 */

import * as path from "node:path";
import { fileURLToPath } from "node:url";
import { parseArgs } from "node:util";

import * as tf from "@tensorflow/tfjs";
import { setWasmPaths } from "@tensorflow/tfjs-backend-wasm";

import { directoryDataset, syntheticDataset } from "./data.js";
import { serve, trainingContext } from "./protocol.js";

async function selectBackend(kind: string): Promise<string> {
  if (kind === "wasm" || kind === "auto") {
    try {
      const wasmDir =
        path.join(
          path.dirname(fileURLToPath(import.meta.url)),
          "..",
          "node_modules",
          "@tensorflow",
          "tfjs-backend-wasm",
          "dist"
        ) + path.sep;
      setWasmPaths(wasmDir);
      if (!(await tf.setBackend("wasm"))) {
        throw new Error("setBackend('wasm') returned false");
      }
      await tf.ready();
      return tf.getBackend();
    } catch (err) {
      if (kind === "wasm") throw err;
      process.stderr.write(`wasm backend unavailable (${err}); using cpu\n`);
    }
  }
  if (!(await tf.setBackend(kind === "auto" ? "cpu" : kind))) {
    throw new Error(`backend ${kind} unavailable`);
  }
  await tf.ready();
  return tf.getBackend();
}

async function main(): Promise<void> {
  const { values } = parseArgs({
    options: {
      backend: { type: "string", default: "auto" },
      "data-dir": { type: "string" },
      "n-train": { type: "string", default: "64" },
      "n-val": { type: "string", default: "4" },
      "data-seed": { type: "string", default: "727" },
    },
  });
  const backendKind = values.backend as string;
  if (!["auto", "wasm", "cpu"].includes(backendKind)) {
    throw new Error(`unknown backend ${backendKind}; use auto, wasm, or cpu`);
  }
  const backend = await selectBackend(backendKind);
  process.stderr.write(`backend: ${backend}\n`);

  const dataset = values["data-dir"]
    ? directoryDataset(values["data-dir"] as string)
    : syntheticDataset(
        Number(values["n-train"]),
        Number(values["n-val"]),
        Number(values["data-seed"])
      );
  process.stderr.write(
    `dataset: ${dataset.train.length} train / ${dataset.val.length} val\n`
  );

  await serve(trainingContext(dataset), process.stdin, process.stdout);
}

main().catch((err) => {
  process.stderr.write(`fatal: ${err instanceof Error ? err.stack : err}\n`);
  process.exit(1);
});

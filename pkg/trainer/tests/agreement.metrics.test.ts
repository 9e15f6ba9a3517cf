/** Metric agreement with the engine's scorer.
 *
 * Random mask pairs are written as PGM files and scored by `evoseg
 * score-masks`; every cell of the CSV (per-class DSC/HD95 and the two means,
 * including empty cells for undefined HD95) must agree with the local
 * implementation to within 1e-6.
 */

import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { Mask, report } from "../src/metrics.js";
import { writePgm } from "../src/pgm.js";
import { mulberry32 } from "../src/prng.js";

const SIZE = 48;
const SPACING = 1.25;
const TOLERANCE = 1e-6;

function randomMask(rng: ReturnType<typeof mulberry32>, skipClass = 0): Mask {
  const data = new Uint8Array(SIZE * SIZE);
  for (let cls = 1; cls <= 3; cls++) {
    if (cls === skipClass) continue;
    const blobs = 1 + rng.int(2);
    for (let blob = 0; blob < blobs; blob++) {
      const cy = 4 + rng.int(SIZE - 8);
      const cx = 4 + rng.int(SIZE - 8);
      const radius = 2 + rng.int(6);
      for (let y = 0; y < SIZE; y++) {
        for (let x = 0; x < SIZE; x++) {
          if (Math.hypot(y - cy, x - cx) <= radius) data[y * SIZE + x] = cls;
        }
      }
    }
  }
  return { data, height: SIZE, width: SIZE };
}

let dir: string;
const pairs = new Map<string, { pred: Mask; gt: Mask }>();

beforeAll(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), "metric-agreement-"));
  fs.mkdirSync(path.join(dir, "pred"));
  fs.mkdirSync(path.join(dir, "gt"));
  const rng = mulberry32(8123);
  for (let i = 0; i < 12; i++) {
    // pairs 9/10 are missing a class on one or both sides, so the CSV has
    // empty HD95 cells to compare against null
    const pred = randomMask(rng, i === 9 || i === 10 ? 3 : 0);
    const gt = randomMask(rng, i === 10 ? 3 : 0);
    const name = `case_${String(i).padStart(2, "0")}.pgm`;
    writePgm(path.join(dir, "pred", name), {
      data: pred.data,
      height: SIZE,
      width: SIZE,
    });
    writePgm(path.join(dir, "gt", name), {
      data: gt.data,
      height: SIZE,
      width: SIZE,
    });
    pairs.set(name, { pred, gt });
  }
});

afterAll(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

describe("metric agreement with the engine scorer", () => {
  it("every CSV cell matches within 1e-6, including undefined HD95", () => {
    execFileSync("evoseg", [
      "score-masks",
      "--pred",
      path.join(dir, "pred"),
      "--gt",
      path.join(dir, "gt"),
      "--spacing",
      String(SPACING),
      "--out",
      path.join(dir, "scores.csv"),
    ]);
    const lines = fs
      .readFileSync(path.join(dir, "scores.csv"), "utf-8")
      .trim()
      .split("\n");
    expect(lines[0]).toBe(
      "name,dsc_lv,dsc_myo,dsc_rv,dsc_avg,hd95_lv,hd95_myo,hd95_rv,hd95_avg"
    );

    let rowsChecked = 0;
    let nullCellsChecked = 0;
    const localAvgDsc: number[] = [];
    const localAvgHd: number[] = [];
    for (const line of lines.slice(1)) {
      const cells = line.split(",");
      if (cells[0] === "mean") {
        const meanDsc = localAvgDsc.reduce((a, b) => a + b, 0) / localAvgDsc.length;
        expect(Math.abs(Number(cells[4]) - meanDsc)).toBeLessThan(TOLERANCE);
        const meanHd = localAvgHd.reduce((a, b) => a + b, 0) / localAvgHd.length;
        expect(Math.abs(Number(cells[8]) - meanHd)).toBeLessThan(TOLERANCE);
        continue;
      }
      const pair = pairs.get(cells[0]);
      expect(pair).toBeDefined();
      const local = report(pair!.pred, pair!.gt, SPACING);
      localAvgDsc.push(local.dscAvg);
      if (local.hd95Avg !== null) localAvgHd.push(local.hd95Avg);
      const expected: (number | null)[] = [
        local.perClassDsc.lv,
        local.perClassDsc.myo,
        local.perClassDsc.rv,
        local.dscAvg,
        local.perClassHd95.lv,
        local.perClassHd95.myo,
        local.perClassHd95.rv,
        local.hd95Avg,
      ];
      expected.forEach((value, index) => {
        const cell = cells[index + 1];
        if (value === null) {
          expect(cell).toBe("");
          nullCellsChecked += 1;
        } else {
          expect(cell).not.toBe("");
          expect(Math.abs(Number(cell) - value)).toBeLessThan(TOLERANCE);
        }
      });
      rowsChecked += 1;
    }
    expect(rowsChecked).toBe(12);
    expect(nullCellsChecked).toBeGreaterThan(0);
  });
});

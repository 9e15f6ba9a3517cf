/** Segmentation metrics: Dice similarity and 95th-percentile boundary
 * distance, with the same conventions as the search engine's scorer:
 *
 * - DSC = 2|P∩G| / (|P|+|G|); both sides empty → 1.0, one side empty → 0.0.
 * - Boundary pixels: foreground pixels with a 4-neighbour outside the class
 *   (the image border counts as outside).
 * - HD95: pool both directed nearest-neighbour distance sets between the two
 *   boundaries, take the linearly interpolated 95th percentile, scale by the
 *   isotropic pixel spacing.
 */

export interface Mask {
  data: Uint8Array;
  height: number;
  width: number;
}

export const FOREGROUND_CLASSES = [1, 2, 3] as const;
export const CLASS_NAMES: Record<number, string> = { 1: "lv", 2: "myo", 3: "rv" };

function checkPair(pred: Mask, gt: Mask): void {
  if (pred.height !== gt.height || pred.width !== gt.width) {
    throw new Error(
      `shape mismatch: ${pred.height}x${pred.width} vs ${gt.height}x${gt.width}`
    );
  }
}

export function dsc(pred: Mask, gt: Mask, classId: number): number {
  checkPair(pred, gt);
  let predCount = 0;
  let gtCount = 0;
  let overlap = 0;
  const n = pred.height * pred.width;
  for (let i = 0; i < n; i++) {
    const p = pred.data[i] === classId;
    const g = gt.data[i] === classId;
    if (p) predCount++;
    if (g) gtCount++;
    if (p && g) overlap++;
  }
  if (predCount + gtCount === 0) return 1.0;
  return (2.0 * overlap) / (predCount + gtCount);
}

/** (row, col) pairs of the 4-connectivity class boundary. */
export function boundaryPixels(mask: Mask, classId: number): number[][] {
  const { data, height, width } = mask;
  const points: number[][] = [];
  for (let r = 0; r < height; r++) {
    for (let c = 0; c < width; c++) {
      if (data[r * width + c] !== classId) continue;
      const up = r === 0 || data[(r - 1) * width + c] !== classId;
      const down = r === height - 1 || data[(r + 1) * width + c] !== classId;
      const left = c === 0 || data[r * width + c - 1] !== classId;
      const right = c === width - 1 || data[r * width + c + 1] !== classId;
      if (up || down || left || right) points.push([r, c]);
    }
  }
  return points;
}

/** Linear-interpolation percentile: rank h = q/100·(n−1). */
export function percentileLinear(values: number[], q: number): number {
  if (values.length === 0) throw new Error("percentile of empty set");
  const ordered = [...values].sort((a, b) => a - b);
  const n = ordered.length;
  if (n === 1) return ordered[0];
  const h = (q / 100.0) * (n - 1);
  const low = Math.floor(h);
  const high = Math.min(low + 1, n - 1);
  const frac = h - low;
  return ordered[low] + frac * (ordered[high] - ordered[low]);
}

function directedDistances(from: number[][], to: number[][]): number[] {
  const result: number[] = new Array(from.length);
  for (let i = 0; i < from.length; i++) {
    const [r, c] = from[i];
    let best = Infinity;
    for (let j = 0; j < to.length; j++) {
      const dr = r - to[j][0];
      const dc = c - to[j][1];
      const d2 = dr * dr + dc * dc;
      if (d2 < best) best = d2;
    }
    result[i] = Math.sqrt(best);
  }
  return result;
}

/** Thrown when a class is empty on one side, making HD95 undefined. */
export class EmptyMaskError extends Error {}

export function hd95(
  pred: Mask,
  gt: Mask,
  classId: number,
  spacing = 1.0
): number {
  checkPair(pred, gt);
  if (spacing <= 0) throw new Error(`spacing must be positive, got ${spacing}`);
  const predBoundary = boundaryPixels(pred, classId);
  const gtBoundary = boundaryPixels(gt, classId);
  if (predBoundary.length === 0) {
    throw new EmptyMaskError(`class ${classId} empty in prediction`);
  }
  if (gtBoundary.length === 0) {
    throw new EmptyMaskError(`class ${classId} empty in ground truth`);
  }
  const pooled = directedDistances(predBoundary, gtBoundary).concat(
    directedDistances(gtBoundary, predBoundary)
  );
  return percentileLinear(pooled, 95.0) * spacing;
}

export interface MetricReport {
  perClassDsc: Record<string, number>;
  perClassHd95: Record<string, number | null>;
  dscAvg: number;
  hd95Avg: number | null;
}

/** Score all three foreground classes.
 *
 * The DSC mean always averages all three classes; undefined HD95 entries are
 * excluded from the HD95 mean, which is null when every class is undefined.
 */
export function report(pred: Mask, gt: Mask, spacing = 1.0): MetricReport {
  const perClassDsc: Record<string, number> = {};
  const perClassHd95: Record<string, number | null> = {};
  for (const classId of FOREGROUND_CLASSES) {
    const name = CLASS_NAMES[classId];
    perClassDsc[name] = dsc(pred, gt, classId);
    try {
      perClassHd95[name] = hd95(pred, gt, classId, spacing);
    } catch (error) {
      if (error instanceof EmptyMaskError) {
        perClassHd95[name] = null;
      } else {
        throw error;
      }
    }
  }
  const dscValues = Object.values(perClassDsc);
  const defined = Object.values(perClassHd95).filter(
    (value): value is number => value !== null
  );
  return {
    perClassDsc,
    perClassHd95,
    dscAvg: dscValues.reduce((a, b) => a + b, 0) / dscValues.length,
    hd95Avg:
      defined.length > 0
        ? defined.reduce((a, b) => a + b, 0) / defined.length
        : null,
  };
}

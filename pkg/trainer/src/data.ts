/** Training data: paired grayscale images and class-ID masks.
 *
 * Two sources:
 *  - a directory with `train/` and `val/` splits, each holding `images/` and
 *    `masks/` PGM files paired by name;
 *  - a built-in synthetic generator producing an intensity-separable cardiac
 *    phantom (disk = LV, surrounding ring = MYO, offset ellipse = RV, each in
 *    its own intensity band), so that even the smallest searchable network
 *    can learn it quickly.
 */

import * as fs from "node:fs";
import * as path from "node:path";

import { Mask } from "./metrics.js";
import { Image, readPgm } from "./pgm.js";
import { mulberry32 } from "./prng.js";

export interface Sample {
  /** Row-major intensities in [0, 1]. */
  image: Float32Array;
  mask: Mask;
}

export interface Dataset {
  train: Sample[];
  val: Sample[];
  height: number;
  width: number;
}

export const IMAGE_SIZE = 128;

/** Geometry/intensity constants of the synthetic phantom. */
const BACKGROUND = 0.08;
const INTENSITY: Record<number, number> = { 1: 0.45, 2: 0.7, 3: 0.95 };
const NOISE_SIGMA = 0.02;

function synthesizeSample(seed: number): Sample {
  const rng = mulberry32(seed);
  const size = IMAGE_SIZE;
  const image = new Float32Array(size * size);
  const mask = new Uint8Array(size * size);

  const lvRow = 48 + rng.int(33); // keep shapes inside the frame
  const lvCol = 40 + rng.int(25);
  const lvRadius = 12 + rng.int(7);
  const myoOuter = lvRadius + 5 + rng.int(4);
  const rvRow = lvRow - 10 + rng.int(21);
  const rvCol = lvCol + myoOuter + 18 + rng.int(10);
  const rvA = 10 + rng.int(6); // ellipse semi-axes
  const rvB = 7 + rng.int(5);

  for (let r = 0; r < size; r++) {
    for (let c = 0; c < size; c++) {
      const index = r * size + c;
      const lvDist = Math.hypot(r - lvRow, c - lvCol);
      const rvDist =
        ((r - rvRow) / rvA) ** 2 + ((c - rvCol) / rvB) ** 2;
      let classId = 0;
      if (lvDist <= lvRadius) classId = 1;
      else if (lvDist <= myoOuter) classId = 2;
      else if (rvDist <= 1.0) classId = 3;
      mask[index] = classId;
      const base = classId === 0 ? BACKGROUND : INTENSITY[classId];
      const value = base + NOISE_SIGMA * rng.normal();
      image[index] = Math.min(1.0, Math.max(0.0, value));
    }
  }
  return { image, mask: { data: mask, height: size, width: size } };
}

/** Deterministic synthetic dataset; the same seed always yields the same
 * splits, independent of which candidate is being evaluated. */
export function syntheticDataset(
  nTrain: number,
  nVal: number,
  seed = 727
): Dataset {
  const train: Sample[] = [];
  const val: Sample[] = [];
  for (let i = 0; i < nTrain; i++) train.push(synthesizeSample(seed + i));
  for (let i = 0; i < nVal; i++) val.push(synthesizeSample(seed + 10_000 + i));
  return { train, val, height: IMAGE_SIZE, width: IMAGE_SIZE };
}

function loadSplit(splitDir: string): Sample[] {
  const imagesDir = path.join(splitDir, "images");
  const masksDir = path.join(splitDir, "masks");
  for (const dir of [imagesDir, masksDir]) {
    if (!fs.existsSync(dir)) throw new Error(`missing dataset directory: ${dir}`);
  }
  const names = fs
    .readdirSync(imagesDir)
    .filter((name) => name.endsWith(".pgm"))
    .sort();
  if (names.length === 0) throw new Error(`no .pgm images in ${imagesDir}`);
  return names.map((name) => {
    const image = readPgm(path.join(imagesDir, name));
    const mask = readPgm(path.join(masksDir, name));
    if (mask.height !== image.height || mask.width !== image.width) {
      throw new Error(`${name}: image/mask shape mismatch`);
    }
    for (const value of mask.data) {
      if (value > 3) throw new Error(`${name}: mask value ${value} out of range`);
    }
    const intensities = new Float32Array(image.data.length);
    for (let i = 0; i < image.data.length; i++) {
      intensities[i] = image.data[i] / 255.0;
    }
    return {
      image: intensities,
      mask: { data: mask.data, height: mask.height, width: mask.width },
    };
  });
}

export function directoryDataset(root: string): Dataset {
  const train = loadSplit(path.join(root, "train"));
  const val = loadSplit(path.join(root, "val"));
  const { height, width } = train[0].mask;
  for (const sample of [...train, ...val]) {
    if (sample.mask.height !== height || sample.mask.width !== width) {
      throw new Error("dataset mixes image sizes");
    }
  }
  if (height !== IMAGE_SIZE || width !== IMAGE_SIZE) {
    throw new Error(
      `dataset must be ${IMAGE_SIZE}x${IMAGE_SIZE} (resize beforehand), ` +
        `got ${width}x${height}`
    );
  }
  return { train, val, height, width };
}

/** Render an intensity array back to 8-bit grayscale (for saving fixtures). */
export function toPgmImage(sample: Sample): Image {
  const { height, width } = sample.mask;
  const data = new Uint8Array(height * width);
  for (let i = 0; i < data.length; i++) {
    data[i] = Math.round(sample.image[i] * 255);
  }
  return { data, height, width };
}

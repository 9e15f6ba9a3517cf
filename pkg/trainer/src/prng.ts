/** Small deterministic PRNG so runs are reproducible across tf.js backends. */

export interface Rng {
  /** Uniform float in [0, 1). */
  next(): number;
  /** Uniform integer in [0, n). */
  int(n: number): number;
  /** Standard normal draw (Box–Muller). */
  normal(): number;
  /** In-place Fisher–Yates shuffle. */
  shuffle<T>(items: T[]): T[];
}

/** mulberry32: fast 32-bit generator, good enough for init and shuffling. */
export function mulberry32(seed: number): Rng {
  let state = seed >>> 0;
  let spare: number | null = null;
  const next = (): number => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
  return {
    next,
    int(n: number): number {
      return Math.floor(next() * n);
    },
    normal(): number {
      if (spare !== null) {
        const value = spare;
        spare = null;
        return value;
      }
      let u = 0;
      let v = 0;
      while (u === 0) u = next();
      v = next();
      const radius = Math.sqrt(-2.0 * Math.log(u));
      spare = radius * Math.sin(2.0 * Math.PI * v);
      return radius * Math.cos(2.0 * Math.PI * v);
    },
    shuffle<T>(items: T[]): T[] {
      for (let i = items.length - 1; i > 0; i--) {
        const j = Math.floor(next() * (i + 1));
        [items[i], items[j]] = [items[j], items[i]];
      }
      return items;
    },
  };
}

/** Derive a 32-bit seed from a 64-bit-ish numeric seed plus a label. */
export function deriveSeed(seed: number, label: string): number {
  let h = (seed >>> 0) ^ 0x9e3779b9;
  h = Math.imul(h ^ Math.floor(seed / 4294967296), 0x85ebca6b) >>> 0;
  for (let i = 0; i < label.length; i++) {
    h = Math.imul(h ^ label.charCodeAt(i), 0xc2b2ae35) >>> 0;
    h = ((h << 13) | (h >>> 19)) >>> 0;
  }
  return h >>> 0;
}

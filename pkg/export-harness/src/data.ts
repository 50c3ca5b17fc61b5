/** Seeded synthetic image classes: oriented sinusoid gratings plus pixel noise.
 *
 * Each class is a grating with its own orientation and frequency, randomly
 * phase-shifted per image, so small CNNs separate classes quickly while
 * related classes still produce correlated responses.
 */

import { Rand, deriveSeed, mulberry32 } from "./rng.js";

export const IMAGE_SIZE = 10;
export const NOISE_LEVEL = 0.3;

export interface ImageSet {
  /** row-major pixels, count * IMAGE_SIZE * IMAGE_SIZE */
  pixels: Float32Array;
  /** 0-based index into the class tuple used to build the set */
  labels: Int32Array;
  count: number;
}

export function renderImage(cls: number, rand: Rand): Float32Array {
  const img = new Float32Array(IMAGE_SIZE * IMAGE_SIZE);
  const angle = (cls * Math.PI) / 7;
  const freq = 1.5 + cls * 0.7;
  const phase = rand() * 2 * Math.PI;
  for (let r = 0; r < IMAGE_SIZE; r++) {
    for (let c = 0; c < IMAGE_SIZE; c++) {
      const u = (r / IMAGE_SIZE) * Math.cos(angle) + (c / IMAGE_SIZE) * Math.sin(angle);
      const wave = 0.5 + 0.45 * Math.sin(2 * Math.PI * freq * u + phase);
      img[r * IMAGE_SIZE + c] = wave + (rand() - 0.5) * NOISE_LEVEL;
    }
  }
  return img;
}

/** Balanced image set over a class tuple; labels are tuple positions. */
export function makeImageSet(classes: number[], perClass: number, seed: number): ImageSet {
  const count = classes.length * perClass;
  const pixels = new Float32Array(count * IMAGE_SIZE * IMAGE_SIZE);
  const labels = new Int32Array(count);
  let row = 0;
  classes.forEach((cls, idx) => {
    const rand = mulberry32(deriveSeed(seed, cls));
    for (let i = 0; i < perClass; i++) {
      pixels.set(renderImage(cls, rand), row * IMAGE_SIZE * IMAGE_SIZE);
      labels[row] = idx;
      row++;
    }
  });
  return { pixels, labels, count };
}

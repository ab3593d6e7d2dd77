/**
 * Golden fixture emission: a seeded 0..1 input image plus the five
 * expected stage tensors from the reference forward pass, all in the
 * DWTEN1 format.  File names (input.dwten, stage1..5.dwten) are the
 * contract the verifier looks for.
 */

import { mkdirSync } from 'node:fs';
import { join } from 'node:path';

import { Archive } from './archive.js';
import { mulberry32 } from './rng.js';
import { Tensor, makeTensor, writeTensorFile } from './tensor.js';
import { extractStages } from './vgg.js';

export const FIXTURE_INPUT = 'input.dwten';
export const FIXTURE_STAGES = [1, 2, 3, 4, 5].map((i) => `stage${i}.dwten`);

export function makeFixtureInput(seed: number, size: number): Tensor {
  const rand = mulberry32(seed);
  const input = makeTensor([3, size, size]);
  for (let i = 0; i < input.data.length; i++) {
    // clamp to 0..1 before normalization, per the input-image contract
    input.data[i] = Math.min(1, Math.max(0, Math.fround(rand())));
  }
  return input;
}

export function emitFixtures(archive: Archive, outDir: string, seed: number, size: number): string[] {
  if (size < 32 || size % 16 !== 0) {
    throw new Error(`fixture size must be >= 32 and divisible by 16, got ${size}`);
  }
  mkdirSync(outDir, { recursive: true });
  const input = makeFixtureInput(seed, size);
  const { stages } = extractStages(input, archive);
  const written: string[] = [];
  const inputPath = join(outDir, FIXTURE_INPUT);
  writeTensorFile(inputPath, input);
  written.push(inputPath);
  for (let i = 1; i <= 5; i++) {
    const path = join(outDir, FIXTURE_STAGES[i - 1]);
    writeTensorFile(path, stages[i]);
    written.push(path);
  }
  return written;
}

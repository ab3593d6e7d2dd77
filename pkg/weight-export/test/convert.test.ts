import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

import { describe, expect, it } from 'vitest';

import { convertModel } from '../src/convert.js';
import { VGG16_BLOCKS } from '../src/constants.js';
import { mulberry32 } from '../src/rng.js';

interface WeightSpec {
  name: string;
  shape: number[];
  dtype: string;
}

/** Build a synthetic tfjs layers-format VGG16 (random weights, Keras
 * HWIO kernel layout and block naming) in a temp directory. */
function makeSyntheticModel(seed: number): { dir: string; firstKernelHWIO: Float32Array } {
  const dir = mkdtempSync(join(tmpdir(), 'vgg-tfjs-'));
  const rand = mulberry32(seed);
  const specs: WeightSpec[] = [];
  const chunks: Float32Array[] = [];
  let firstKernel: Float32Array | null = null;
  for (const block of VGG16_BLOCKS) {
    let blockNo = 0;
    for (const conv of block) {
      blockNo += 1;
      const blockIndex = conv.name[4];
      const kerasBase = `block${blockIndex}_conv${blockNo}`;
      const kernel = new Float32Array(9 * conv.inChannels * conv.outChannels);
      for (let i = 0; i < kernel.length; i++) kernel[i] = Math.fround(rand() - 0.5);
      if (firstKernel === null) firstKernel = kernel;
      const bias = new Float32Array(conv.outChannels);
      for (let i = 0; i < bias.length; i++) bias[i] = Math.fround(rand() - 0.5);
      specs.push({ name: `${kerasBase}/kernel`, shape: [3, 3, conv.inChannels, conv.outChannels], dtype: 'float32' });
      chunks.push(kernel);
      specs.push({ name: `${kerasBase}/bias`, shape: [conv.outChannels], dtype: 'float32' });
      chunks.push(bias);
    }
  }
  // classifier tensors must be ignored by the converter
  specs.push({ name: 'predictions/kernel', shape: [4], dtype: 'float32' });
  chunks.push(new Float32Array([1, 2, 3, 4]));

  const total = chunks.reduce((a, c) => a + c.length, 0);
  const shard = Buffer.alloc(4 * total);
  const view = new DataView(shard.buffer, shard.byteOffset);
  let offset = 0;
  for (const chunk of chunks) {
    for (let i = 0; i < chunk.length; i++) {
      view.setFloat32(4 * (offset + i), chunk[i], true);
    }
    offset += chunk.length;
  }
  writeFileSync(join(dir, 'group1-shard1of1.bin'), shard);
  writeFileSync(
    join(dir, 'model.json'),
    JSON.stringify({ weightsManifest: [{ paths: ['group1-shard1of1.bin'], weights: specs }] }),
  );
  return { dir, firstKernelHWIO: firstKernel! };
}

describe('convertModel', () => {
  it('collects all 26 tensors with canonical shapes', async () => {
    const { dir } = makeSyntheticModel(1);
    const archive = await convertModel(dir);
    expect(archive.size).toBe(26);
    expect(archive.get('conv1_1.weight')!.shape).toEqual([64, 3, 3, 3]);
    expect(archive.get('conv5_3.bias')!.shape).toEqual([512]);
  });

  it('transposes kernels from HWIO to OIHW', async () => {
    const { dir, firstKernelHWIO } = makeSyntheticModel(2);
    const archive = await convertModel(dir);
    const oihw = archive.get('conv1_1.weight')!;
    // spot-check a handful of positions: dst[o,i,ky,kx] = src[ky,kx,i,o]
    const inC = 3;
    const outC = 64;
    for (const [o, i, ky, kx] of [
      [0, 0, 0, 0],
      [5, 2, 1, 2],
      [63, 1, 2, 0],
    ]) {
      const dst = oihw.data[((o * inC + i) * 3 + ky) * 3 + kx];
      const src = firstKernelHWIO[((ky * 3 + kx) * inC + i) * outC + o];
      expect(dst).toBe(src);
    }
  });

  it('fails with a diagnostic when backbone tensors are missing', async () => {
    const { dir } = makeSyntheticModel(3);
    const fs = await import('node:fs');
    const model = JSON.parse(fs.readFileSync(join(dir, 'model.json'), 'utf-8'));
    model.weightsManifest[0].weights = model.weightsManifest[0].weights.filter(
      (w: WeightSpec) => w.name !== 'block3_conv2/kernel',
    );
    fs.writeFileSync(join(dir, 'model.json'), JSON.stringify(model));
    await expect(convertModel(dir)).rejects.toThrow(/conv3_2\.weight/);
  });

  it('fails with a diagnostic when the source is unreachable', async () => {
    await expect(convertModel('http://127.0.0.1:1/vgg16/model.json')).rejects.toThrow();
  });
});

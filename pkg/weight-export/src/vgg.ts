/**
 * Reference five-stage forward pass used to compute golden fixtures.
 *
 * Deliberately plain loop code over flat (channel, y, x) float32 arrays:
 * an independent implementation for the inference core to be checked
 * against, not a fast one.
 */

import { Archive } from './archive.js';
import { CHANNEL_MEANS, CHANNEL_STDS, VGG16_BLOCKS } from './constants.js';
import { Tensor, makeTensor } from './tensor.js';

export function relu(x: Tensor): Tensor {
  const out = makeTensor(x.shape);
  for (let i = 0; i < x.data.length; i++) {
    out.data[i] = x.data[i] > 0 ? x.data[i] : 0;
  }
  return out;
}

export function maxpool2(x: Tensor): Tensor {
  const [c, h, w] = x.shape;
  if (h % 2 !== 0 || w % 2 !== 0) {
    throw new Error(`maxpool2 needs even spatial dims, got ${h}x${w}`);
  }
  const oh = h / 2;
  const ow = w / 2;
  const out = makeTensor([c, oh, ow]);
  for (let cc = 0; cc < c; cc++) {
    for (let y = 0; y < oh; y++) {
      for (let xx = 0; xx < ow; xx++) {
        const base = cc * h * w + 2 * y * w + 2 * xx;
        const m1 = Math.max(x.data[base], x.data[base + 1]);
        const m2 = Math.max(x.data[base + w], x.data[base + w + 1]);
        out.data[cc * oh * ow + y * ow + xx] = Math.max(m1, m2);
      }
    }
  }
  return out;
}

/** 3x3 convolution, stride 1, zero padding 1. */
export function conv2d(x: Tensor, kernels: Tensor, bias: Tensor): Tensor {
  const [inC, h, w] = x.shape;
  const [outC, kc, kh, kw] = kernels.shape;
  if (kc !== inC || kh !== 3 || kw !== 3) {
    throw new Error(`kernel shape [${kernels.shape}] incompatible with input [${x.shape}]`);
  }
  // zero-padded copy so the inner loops stay branch-free
  const ph = h + 2;
  const pw = w + 2;
  const padded = new Float32Array(inC * ph * pw);
  for (let c = 0; c < inC; c++) {
    for (let y = 0; y < h; y++) {
      padded.set(x.data.subarray(c * h * w + y * w, c * h * w + (y + 1) * w), c * ph * pw + (y + 1) * pw + 1);
    }
  }
  const out = makeTensor([outC, h, w]);
  for (let o = 0; o < outC; o++) {
    out.data.fill(bias.data[o], o * h * w, (o + 1) * h * w);
    for (let c = 0; c < inC; c++) {
      for (let dy = 0; dy < 3; dy++) {
        for (let dx = 0; dx < 3; dx++) {
          const k = kernels.data[((o * inC + c) * 3 + dy) * 3 + dx];
          if (k === 0) continue;
          for (let y = 0; y < h; y++) {
            const src = c * ph * pw + (y + dy) * pw + dx;
            const dst = o * h * w + y * w;
            for (let xx = 0; xx < w; xx++) {
              out.data[dst + xx] += k * padded[src + xx];
            }
          }
        }
      }
    }
  }
  return out;
}

/** Per-channel mean/std normalization of a 0..1 image, float32 rounding
 * after each arithmetic step. */
export function normalizeImage(image: Tensor): Tensor {
  const [c, h, w] = image.shape;
  const out = makeTensor(image.shape);
  for (let cc = 0; cc < c; cc++) {
    const mean = CHANNEL_MEANS[cc];
    const std = CHANNEL_STDS[cc];
    for (let i = cc * h * w; i < (cc + 1) * h * w; i++) {
      out.data[i] = Math.fround(Math.fround(image.data[i] - mean) / std);
    }
  }
  return out;
}

export interface StageOutputs {
  /** stages[0] is the 0..1 input; stages[1..5] the block activations. */
  stages: Tensor[];
}

export function extractStages(image: Tensor, archive: Archive): StageOutputs {
  const [c, h, w] = image.shape;
  if (c !== 3) {
    throw new Error(`expected a 3-channel image, got ${c}`);
  }
  if (h % 16 !== 0 || w % 16 !== 0 || h < 32 || w < 32) {
    throw new Error(`image must be at least 32x32 with sides divisible by 16, got ${h}x${w}`);
  }
  const stages: Tensor[] = [image];
  let x = normalizeImage(image);
  for (let blockIndex = 0; blockIndex < VGG16_BLOCKS.length; blockIndex++) {
    if (blockIndex > 0) {
      x = maxpool2(x);
    }
    for (const conv of VGG16_BLOCKS[blockIndex]) {
      const kernels = archive.get(`${conv.name}.weight`);
      const bias = archive.get(`${conv.name}.bias`);
      if (!kernels || !bias) {
        throw new Error(`archive is missing tensors for ${conv.name}`);
      }
      x = relu(conv2d(x, kernels, bias));
    }
    stages.push(x);
  }
  return { stages };
}

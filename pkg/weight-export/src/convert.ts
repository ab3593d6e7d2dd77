/**
 * Conversion from the tfjs layers-model format (model.json plus binary
 * weight shards, as produced by `tensorflowjs_converter` on a Keras
 * VGG16) into a DWSDW1 archive.
 *
 * Keras stores conv kernels as (kh, kw, in, out); the archive wants
 * (out, in, kh, kw).
 */

import { readFileSync } from 'node:fs';
import { join } from 'node:path';

import { Archive, validateSchema } from './archive.js';
import { canonicalShapes } from './constants.js';
import { Tensor, elementCount, makeTensor } from './tensor.js';

interface WeightSpec {
  name: string;
  shape: number[];
  dtype: string;
  quantization?: unknown;
}

interface WeightsManifestGroup {
  paths: string[];
  weights: WeightSpec[];
}

interface ModelJson {
  weightsManifest: WeightsManifestGroup[];
}

export interface WeightSource {
  /** Fetch a file relative to the model.json location. */
  read(relative: string): Promise<Buffer>;
}

export function directorySource(dir: string): WeightSource {
  return {
    read: async (relative) => readFileSync(join(dir, relative)),
  };
}

export function urlSource(base: string): WeightSource {
  const root = base.endsWith('/') ? base : base.replace(/\/[^/]*$/, '/');
  return {
    read: async (relative) => {
      const url = new URL(relative, root).toString();
      const response = await fetch(url);
      if (!response.ok) {
        throw new Error(`download failed: ${url} -> HTTP ${response.status}`);
      }
      return Buffer.from(await response.arrayBuffer());
    },
  };
}

export function sourceFor(spec: string): WeightSource {
  if (spec.startsWith('http://') || spec.startsWith('https://')) {
    return urlSource(spec);
  }
  return directorySource(spec);
}

const KERAS_NAME = /block([1-5])_conv([1-4])\/(kernel|bias)$/;

function canonicalName(kerasName: string): string | null {
  const match = KERAS_NAME.exec(kerasName);
  if (!match) {
    return null;
  }
  const suffix = match[3] === 'kernel' ? 'weight' : 'bias';
  return `conv${match[1]}_${match[2]}.${suffix}`;
}

function transposeHWIOtoOIHW(src: Float32Array, shape: number[]): Tensor {
  const [kh, kw, inC, outC] = shape;
  const out = makeTensor([outC, inC, kh, kw]);
  for (let y = 0; y < kh; y++) {
    for (let x = 0; x < kw; x++) {
      for (let i = 0; i < inC; i++) {
        for (let o = 0; o < outC; o++) {
          out.data[((o * inC + i) * kh + y) * kw + x] = src[((y * kw + x) * inC + i) * outC + o];
        }
      }
    }
  }
  return out;
}

/** Load a tfjs layers model and collect the 26 backbone tensors. */
export async function convertModel(sourceSpec: string): Promise<Archive> {
  const source = sourceFor(sourceSpec);
  const modelJsonName = sourceSpec.endsWith('.json')
    ? sourceSpec.split('/').pop()!
    : 'model.json';
  const model = JSON.parse((await source.read(modelJsonName)).toString('utf-8')) as ModelJson;
  if (!model.weightsManifest) {
    throw new Error('model.json carries no weightsManifest');
  }

  const archive: Archive = new Map();
  for (const group of model.weightsManifest) {
    const shard = Buffer.concat(await Promise.all(group.paths.map((p) => source.read(p))));
    let offset = 0;
    for (const spec of group.weights) {
      const count = elementCount(spec.shape);
      if (spec.quantization) {
        throw new Error(`quantized weights are not supported (${spec.name})`);
      }
      if (spec.dtype !== 'float32') {
        throw new Error(`unsupported dtype ${spec.dtype} for ${spec.name}`);
      }
      const bytes = shard.subarray(offset, offset + 4 * count);
      offset += 4 * count;
      const name = canonicalName(spec.name);
      if (name === null) {
        continue; // classifier head and anything else we do not export
      }
      const view = new DataView(bytes.buffer, bytes.byteOffset);
      const data = new Float32Array(count);
      for (let i = 0; i < count; i++) {
        data[i] = view.getFloat32(4 * i, true);
      }
      if (name.endsWith('.weight')) {
        archive.set(name, transposeHWIOtoOIHW(data, spec.shape));
      } else {
        archive.set(name, { shape: [...spec.shape], data });
      }
    }
  }

  const expected = canonicalShapes();
  const missing = [...expected.keys()].filter((name) => !archive.has(name));
  if (missing.length > 0) {
    throw new Error(`source model is missing backbone tensors: ${missing.join(', ')}`);
  }
  validateSchema(archive);
  return archive;
}

/**
 * Dense float32 tensors and the DWTEN1 raw tensor file format.
 *
 * DWTEN1 layout: magic `DWTEN1`, u8 ndim, ndim little-endian u32 dims,
 * row-major little-endian float32 data.
 */

import { readFileSync, writeFileSync } from 'node:fs';

export interface Tensor {
  shape: number[];
  data: Float32Array;
}

const TENSOR_MAGIC = Buffer.from('DWTEN1', 'ascii');

export function elementCount(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export function makeTensor(shape: number[], data?: Float32Array): Tensor {
  const count = elementCount(shape);
  if (data === undefined) {
    data = new Float32Array(count);
  } else if (data.length !== count) {
    throw new Error(`data length ${data.length} does not match shape [${shape}]`);
  }
  return { shape: [...shape], data };
}

export function encodeTensor(tensor: Tensor): Buffer {
  const ndim = tensor.shape.length;
  const header = Buffer.alloc(TENSOR_MAGIC.length + 1 + 4 * ndim);
  TENSOR_MAGIC.copy(header, 0);
  header.writeUInt8(ndim, TENSOR_MAGIC.length);
  tensor.shape.forEach((dim, i) => {
    header.writeUInt32LE(dim, TENSOR_MAGIC.length + 1 + 4 * i);
  });
  const payload = Buffer.alloc(tensor.data.length * 4);
  const view = new DataView(payload.buffer, payload.byteOffset);
  for (let i = 0; i < tensor.data.length; i++) {
    view.setFloat32(4 * i, tensor.data[i], true);
  }
  return Buffer.concat([header, payload]);
}

export function decodeTensor(raw: Buffer): Tensor {
  if (raw.length < TENSOR_MAGIC.length + 1 || !raw.subarray(0, TENSOR_MAGIC.length).equals(TENSOR_MAGIC)) {
    throw new Error('not a DWTEN1 tensor');
  }
  let pos = TENSOR_MAGIC.length;
  const ndim = raw.readUInt8(pos);
  pos += 1;
  const shape: number[] = [];
  for (let i = 0; i < ndim; i++) {
    shape.push(raw.readUInt32LE(pos));
    pos += 4;
  }
  const count = elementCount(shape);
  if (raw.length !== pos + 4 * count) {
    throw new Error(`tensor payload size mismatch: ${raw.length - pos} bytes for shape [${shape}]`);
  }
  const data = new Float32Array(count);
  const view = new DataView(raw.buffer, raw.byteOffset + pos);
  for (let i = 0; i < count; i++) {
    data[i] = view.getFloat32(4 * i, true);
  }
  return { shape, data };
}

export function writeTensorFile(path: string, tensor: Tensor): void {
  writeFileSync(path, encodeTensor(tensor));
}

export function readTensorFile(path: string): Tensor {
  return decodeTensor(readFileSync(path));
}

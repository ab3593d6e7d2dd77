/**
 * DWSDW1 weight archive format.
 *
 * Layout: magic `DWSDW1` + zero byte; u32 LE entry count; per entry:
 * u16 LE name length, UTF-8 name, u8 ndim, ndim u32 LE dims, row-major
 * LE float32 data; trailing u32 LE CRC-32 over everything after the
 * magic (the CRC bytes themselves excluded).
 */

import { readFileSync, writeFileSync } from 'node:fs';

import { canonicalShapes } from './constants.js';
import { crc32 } from './crc32.js';
import { Tensor, elementCount } from './tensor.js';

const ARCHIVE_MAGIC = Buffer.from('DWSDW1\0', 'ascii');

export type Archive = Map<string, Tensor>;

export function validateSchema(archive: Archive): void {
  for (const [name, shape] of canonicalShapes()) {
    const tensor = archive.get(name);
    if (tensor === undefined) {
      throw new Error(`archive is missing tensor '${name}'`);
    }
    if (tensor.shape.length !== shape.length || tensor.shape.some((d, i) => d !== shape[i])) {
      throw new Error(`tensor '${name}' has shape [${tensor.shape}], expected [${shape}]`);
    }
  }
}

export function encodeArchive(archive: Archive): Buffer {
  const parts: Buffer[] = [];
  const count = Buffer.alloc(4);
  count.writeUInt32LE(archive.size, 0);
  parts.push(count);
  for (const [name, tensor] of archive) {
    const nameBytes = Buffer.from(name, 'utf-8');
    const header = Buffer.alloc(2 + nameBytes.length + 1 + 4 * tensor.shape.length);
    let pos = 0;
    header.writeUInt16LE(nameBytes.length, pos);
    pos += 2;
    nameBytes.copy(header, pos);
    pos += nameBytes.length;
    header.writeUInt8(tensor.shape.length, pos);
    pos += 1;
    for (const dim of tensor.shape) {
      header.writeUInt32LE(dim, pos);
      pos += 4;
    }
    const payload = Buffer.alloc(tensor.data.length * 4);
    const view = new DataView(payload.buffer, payload.byteOffset);
    for (let i = 0; i < tensor.data.length; i++) {
      view.setFloat32(4 * i, tensor.data[i], true);
    }
    parts.push(header, payload);
  }
  const body = Buffer.concat(parts);
  const trailer = Buffer.alloc(4);
  trailer.writeUInt32LE(crc32(body), 0);
  return Buffer.concat([ARCHIVE_MAGIC, body, trailer]);
}

export function decodeArchive(raw: Buffer): Archive {
  if (raw.length < ARCHIVE_MAGIC.length + 8 || !raw.subarray(0, ARCHIVE_MAGIC.length).equals(ARCHIVE_MAGIC)) {
    throw new Error('not a DWSDW1 weight archive');
  }
  const body = raw.subarray(ARCHIVE_MAGIC.length, raw.length - 4);
  const stored = raw.readUInt32LE(raw.length - 4);
  if (crc32(body) !== stored) {
    throw new Error('archive CRC-32 mismatch: file is corrupted');
  }
  let pos = 0;
  const take = (n: number): Buffer => {
    if (pos + n > body.length) {
      throw new Error('truncated archive payload');
    }
    const chunk = body.subarray(pos, pos + n);
    pos += n;
    return chunk;
  };
  const count = take(4).readUInt32LE(0);
  const archive: Archive = new Map();
  for (let e = 0; e < count; e++) {
    const nameLen = take(2).readUInt16LE(0);
    const name = take(nameLen).toString('utf-8');
    const ndim = take(1).readUInt8(0);
    const shape: number[] = [];
    for (let i = 0; i < ndim; i++) {
      shape.push(take(4).readUInt32LE(0));
    }
    const n = elementCount(shape);
    const payload = take(4 * n);
    const data = new Float32Array(n);
    const view = new DataView(payload.buffer, payload.byteOffset);
    for (let i = 0; i < n; i++) {
      data[i] = view.getFloat32(4 * i, true);
    }
    if (archive.has(name)) {
      throw new Error(`duplicate tensor name '${name}'`);
    }
    archive.set(name, { shape, data });
  }
  if (pos !== body.length) {
    throw new Error(`${body.length - pos} trailing payload bytes`);
  }
  return archive;
}

export function writeArchiveFile(path: string, archive: Archive): void {
  validateSchema(archive);
  writeFileSync(path, encodeArchive(archive));
}

export function readArchiveFile(path: string): Archive {
  const archive = decodeArchive(readFileSync(path));
  validateSchema(archive);
  return archive;
}

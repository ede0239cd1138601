import * as fs from 'fs';
import * as os from 'os';
import * as path from 'path';

import { describe, expect, it } from 'vitest';

import { readLogitCsv, writeGcam, writeLogitCsv } from '../src/formats';
import { readSplit, syntheticSplit, writeSplit } from '../src/data';

function tmpFile(name: string): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), 'model-export-'));
  return path.join(dir, name);
}

describe('logit CSV', () => {
  it('writes the canonical header and one row per sample', () => {
    const file = tmpFile('logits.csv');
    writeLogitCsv(new Float32Array([1.5, -2, 0.25, 0, 0, 3]), [0, 2], 3, file);
    const lines = fs.readFileSync(file, 'utf-8').trim().split('\n');
    expect(lines[0]).toBe('label,logit_0,logit_1,logit_2');
    expect(lines).toHaveLength(3);
    expect(lines[1].split(',')[0]).toBe('0');
  });

  it('round-trips float32 values exactly', () => {
    const file = tmpFile('rt.csv');
    const values = new Float32Array([0.1, -123.456, 7e-12, 3.14159, 88, -0.5]);
    writeLogitCsv(values, [1, 0], 3, file);
    const { logits, labels } = readLogitCsv(file);
    expect(labels).toEqual([1, 0]);
    logits.flat().forEach((v, i) => expect(v).toBe(values[i]));
  });

  it('rejects non-finite logits', () => {
    const file = tmpFile('nan.csv');
    expect(() => writeLogitCsv(new Float32Array([NaN, 1]), [0], 2, file)).toThrow();
  });

  it('rejects shape mismatches', () => {
    const file = tmpFile('shape.csv');
    expect(() => writeLogitCsv(new Float32Array(5), [0, 1], 3, file)).toThrow();
  });
});

describe('GCAM binary', () => {
  it('lays out magic, dimensions, and little-endian float32 maps', () => {
    const file = tmpFile('maps.gcam');
    const maps = new Float32Array([0, 0.5, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10]);
    writeGcam(maps, 2, 2, 3, file);
    const blob = fs.readFileSync(file);
    expect(blob.toString('ascii', 0, 4)).toBe('GCAM');
    expect(blob.readUInt32LE(4)).toBe(2);
    expect(blob.readUInt32LE(8)).toBe(2);
    expect(blob.readUInt32LE(12)).toBe(3);
    expect(blob.length).toBe(16 + 4 * 12);
    expect(blob.readFloatLE(16 + 4)).toBeCloseTo(0.5, 7);
    expect(blob.readFloatLE(16 + 4 * 11)).toBe(10);
  });

  it('rejects inconsistent dimensions', () => {
    expect(() => writeGcam(new Float32Array(7), 2, 2, 2, tmpFile('x.gcam'))).toThrow();
  });
});

describe('raw image splits', () => {
  it('round-trips the MMB1 container', () => {
    const split = syntheticSplit(6, 16, 1, 4, 9);
    const file = tmpFile('split.bin');
    writeSplit(split, file);
    const back = readSplit(file);
    expect(back.count).toBe(6);
    expect(back.height).toBe(16);
    expect(Array.from(back.labels)).toEqual(Array.from(split.labels));
    expect(Array.from(back.pixels)).toEqual(Array.from(split.pixels));
  });
});

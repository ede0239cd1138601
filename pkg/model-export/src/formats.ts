import * as fs from 'fs';

/**
 * Writers for the consumer toolkit's on-disk formats. The logit CSV carries
 * raw pre-softmax scores with a `label,logit_0,...,logit_{K-1}` header; the
 * heatmap binary is magic `GCAM`, three little-endian uint32
 * (count, height, width), then float32 map values row-major in sample order.
 */

/** Shortest decimal representation that round-trips a float64. */
function fmt(value: number): string {
  if (!Number.isFinite(value)) {
    throw new Error(`non-finite logit ${value}`);
  }
  return String(value);
}

export function writeLogitCsv(
  logits: Float32Array | Float64Array,
  labels: ArrayLike<number>,
  numClasses: number,
  path: string,
): void {
  const n = labels.length;
  if (logits.length !== n * numClasses) {
    throw new Error(`logits length ${logits.length} != ${n} x ${numClasses}`);
  }
  const header = ['label'];
  for (let k = 0; k < numClasses; k++) {
    header.push(`logit_${k}`);
  }
  const lines = [header.join(',')];
  for (let i = 0; i < n; i++) {
    const row = [String(labels[i])];
    for (let k = 0; k < numClasses; k++) {
      row.push(fmt(logits[i * numClasses + k]));
    }
    lines.push(row.join(','));
  }
  fs.writeFileSync(path, lines.join('\n') + '\n', 'utf-8');
}

export function readLogitCsv(path: string): { logits: number[][]; labels: number[] } {
  const lines = fs.readFileSync(path, 'utf-8').trim().split('\n');
  const header = lines[0].split(',');
  if (header[0] !== 'label' || header.slice(1).some((h, k) => h !== `logit_${k}`)) {
    throw new Error(`${path}: malformed header`);
  }
  const logits: number[][] = [];
  const labels: number[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(',');
    labels.push(Number(parts[0]));
    logits.push(parts.slice(1).map(Number));
  }
  return { logits, labels };
}

export function writeGcam(
  maps: Float32Array,
  count: number,
  height: number,
  width: number,
  path: string,
): void {
  if (maps.length !== count * height * width) {
    throw new Error(`map buffer ${maps.length} != ${count}x${height}x${width}`);
  }
  const header = Buffer.alloc(16);
  header.write('GCAM', 0, 'ascii');
  header.writeUInt32LE(count, 4);
  header.writeUInt32LE(height, 8);
  header.writeUInt32LE(width, 12);
  const payload = Buffer.alloc(maps.length * 4);
  for (let i = 0; i < maps.length; i++) {
    payload.writeFloatLE(maps[i], i * 4);
  }
  fs.writeFileSync(path, Buffer.concat([header, payload]));
}

export interface Manifest {
  dataset: string;
  seed: number;
  epochs_run: number;
  accuracy: { train: number; val: number; test: number };
  macro_f1: number;
  hyperparameters: {
    input_size: number;
    dropout: number;
    label_smoothing: number;
    learning_rate: number;
    lr_schedule: string;
    patience: number;
    batch_size: number;
    pretrained: boolean;
  };
  gradcam_target: string;
}

export function writeManifest(manifest: Manifest, path: string): void {
  fs.writeFileSync(path, JSON.stringify(manifest, null, 2) + '\n', 'utf-8');
}

import * as fs from 'fs';
import * as tf from '@tensorflow/tfjs';

/** Images as uint8 HxWxC pixels with integer labels, one split. */
export interface ImageSplit {
  count: number;
  height: number;
  width: number;
  channels: number;
  pixels: Uint8Array; // count * H * W * C, row-major
  labels: Uint8Array; // count
}

export interface DatasetSplits {
  train: ImageSplit;
  val: ImageSplit;
  test: ImageSplit;
}

const MAGIC = 'MMB1';

/**
 * Raw split file: ascii magic "MMB1", four little-endian uint32
 * (count, height, width, channels), count uint8 labels, then
 * count*H*W*C uint8 pixels. See README for converting a MedMNIST
 * .npz into this layout.
 */
export function readSplit(path: string): ImageSplit {
  const blob = fs.readFileSync(path);
  if (blob.length < 20 || blob.toString('ascii', 0, 4) !== MAGIC) {
    throw new Error(`${path}: missing ${MAGIC} magic bytes`);
  }
  const count = blob.readUInt32LE(4);
  const height = blob.readUInt32LE(8);
  const width = blob.readUInt32LE(12);
  const channels = blob.readUInt32LE(16);
  const labelsStart = 20;
  const pixelsStart = labelsStart + count;
  const expected = pixelsStart + count * height * width * channels;
  if (blob.length !== expected) {
    throw new Error(`${path}: ${blob.length} bytes, expected ${expected}`);
  }
  return {
    count,
    height,
    width,
    channels,
    labels: new Uint8Array(blob.buffer, blob.byteOffset + labelsStart, count),
    pixels: new Uint8Array(blob.buffer, blob.byteOffset + pixelsStart,
                           count * height * width * channels),
  };
}

export function writeSplit(split: ImageSplit, path: string): void {
  const header = Buffer.alloc(20);
  header.write(MAGIC, 0, 'ascii');
  header.writeUInt32LE(split.count, 4);
  header.writeUInt32LE(split.height, 8);
  header.writeUInt32LE(split.width, 12);
  header.writeUInt32LE(split.channels, 16);
  fs.writeFileSync(path, Buffer.concat([header, Buffer.from(split.labels),
                                        Buffer.from(split.pixels)]));
}

export function loadDataset(dir: string): DatasetSplits {
  return {
    train: readSplit(`${dir}/train.bin`),
    val: readSplit(`${dir}/val.bin`),
    test: readSplit(`${dir}/test.bin`),
  };
}

/** Deterministic 32-bit PRNG (mulberry32) for synthetic data. */
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/**
 * Synthetic stand-in when the benchmark files are unavailable: each class is
 * a blob at a class-specific position over background noise, so a small
 * network separates classes quickly in smoke runs.
 */
export function syntheticSplit(
  count: number,
  size: number,
  channels: number,
  numClasses: number,
  seed: number,
): ImageSplit {
  const rand = mulberry32(seed);
  const pixels = new Uint8Array(count * size * size * channels);
  const labels = new Uint8Array(count);
  for (let i = 0; i < count; i++) {
    const label = Math.floor(rand() * numClasses);
    labels[i] = label;
    const angle = (2 * Math.PI * label) / numClasses;
    const cy = size / 2 + 0.3 * size * Math.sin(angle);
    const cx = size / 2 + 0.3 * size * Math.cos(angle);
    const sigma = size / 8;
    for (let y = 0; y < size; y++) {
      for (let x = 0; x < size; x++) {
        const d2 = (y - cy) ** 2 + (x - cx) ** 2;
        const blob = 200 * Math.exp(-d2 / (2 * sigma * sigma));
        for (let c = 0; c < channels; c++) {
          const idx = ((i * size + y) * size + x) * channels + c;
          pixels[idx] = Math.min(255, Math.floor(blob + 40 * rand()));
        }
      }
    }
  }
  return { count, height: size, width: size, channels, pixels, labels };
}

export function syntheticDataset(
  counts: { train: number; val: number; test: number },
  size: number,
  channels: number,
  numClasses: number,
  seed: number,
): DatasetSplits {
  return {
    train: syntheticSplit(counts.train, size, channels, numClasses, seed),
    val: syntheticSplit(counts.val, size, channels, numClasses, seed + 1),
    test: syntheticSplit(counts.test, size, channels, numClasses, seed + 2),
  };
}

/** Split -> float tensor in [0,1], resized to the model input size. */
export function toTensors(
  split: ImageSplit,
  inputSize: number,
): { xs: tf.Tensor4D; ys: tf.Tensor1D } {
  const { xs, ys } = tf.tidy(() => {
    const raw = tf.tensor4d(new Float32Array(split.pixels),
                            [split.count, split.height, split.width, split.channels]);
    let scaled = raw.div(255) as tf.Tensor4D;
    if (split.height !== inputSize || split.width !== inputSize) {
      scaled = tf.image.resizeBilinear(scaled, [inputSize, inputSize]);
    }
    return { xs: scaled, ys: tf.tensor1d(new Float32Array(split.labels)) };
  });
  return { xs: xs as tf.Tensor4D, ys: ys as tf.Tensor1D };
}

import * as tf from '@tensorflow/tfjs';

import { TrainConfig } from './config';
import { DatasetSplits, ImageSplit, toTensors } from './data';
import { Manifest, writeLogitCsv, writeManifest } from './formats';
import { BackboneAndHead, buildResnet18 } from './resnet';

export interface TrainResult {
  model: BackboneAndHead;
  epochsRun: number;
  accuracy: { train: number; val: number; test: number };
  macroF1: number;
}

/** Cross-entropy from raw logits against smoothed one-hot targets. */
export function smoothedCrossEntropy(numClasses: number, epsilon: number) {
  return (yTrue: tf.Tensor, yPred: tf.Tensor): tf.Tensor =>
    tf.tidy(() => {
      const smoothed = yTrue
        .mul(1 - epsilon)
        .add(epsilon / numClasses);
      const logProbs = tf.logSoftmax(yPred);
      return smoothed.mul(logProbs).sum(-1).neg().mean();
    });
}

function cosineLr(base: number, epoch: number, total: number): number {
  return 0.5 * base * (1 + Math.cos((Math.PI * epoch) / Math.max(1, total)));
}

/** Forward pass in batches; returns raw logits for every row. */
export function predictLogits(
  model: tf.LayersModel,
  split: ImageSplit,
  inputSize: number,
  batchSize = 128,
): Float32Array {
  const numClasses = (model.outputs[0].shape[1] as number) ?? 0;
  const out = new Float32Array(split.count * numClasses);
  for (let start = 0; start < split.count; start += batchSize) {
    const stop = Math.min(split.count, start + batchSize);
    const piece: ImageSplit = {
      count: stop - start,
      height: split.height,
      width: split.width,
      channels: split.channels,
      pixels: split.pixels.subarray(
        start * split.height * split.width * split.channels,
        stop * split.height * split.width * split.channels,
      ),
      labels: split.labels.subarray(start, stop),
    };
    const { xs, ys } = toTensors(piece, inputSize);
    const logits = model.predict(xs, { batchSize }) as tf.Tensor2D;
    out.set(logits.dataSync() as Float32Array, start * numClasses);
    xs.dispose();
    ys.dispose();
    logits.dispose();
  }
  return out;
}

export function accuracyFromLogits(
  logits: Float32Array,
  labels: ArrayLike<number>,
  numClasses: number,
): number {
  let hits = 0;
  for (let i = 0; i < labels.length; i++) {
    let best = 0;
    for (let k = 1; k < numClasses; k++) {
      if (logits[i * numClasses + k] > logits[i * numClasses + best]) {
        best = k;
      }
    }
    if (best === labels[i]) {
      hits++;
    }
  }
  return labels.length ? hits / labels.length : 0;
}

export function macroF1FromLogits(
  logits: Float32Array,
  labels: ArrayLike<number>,
  numClasses: number,
): number {
  const tp = new Array(numClasses).fill(0);
  const fp = new Array(numClasses).fill(0);
  const fn = new Array(numClasses).fill(0);
  for (let i = 0; i < labels.length; i++) {
    let best = 0;
    for (let k = 1; k < numClasses; k++) {
      if (logits[i * numClasses + k] > logits[i * numClasses + best]) {
        best = k;
      }
    }
    if (best === labels[i]) {
      tp[best]++;
    } else {
      fp[best]++;
      fn[labels[i] as number]++;
    }
  }
  let total = 0;
  for (let k = 0; k < numClasses; k++) {
    const denom = 2 * tp[k] + fp[k] + fn[k];
    total += denom === 0 ? 0 : (2 * tp[k]) / denom;
  }
  return total / numClasses;
}

/**
 * Adam with a per-epoch cosine-annealed learning rate and early stopping on
 * validation accuracy. Aborts on a non-finite loss.
 */
export async function train(
  splits: DatasetSplits,
  config: TrainConfig,
  log: (line: string) => void = () => undefined,
): Promise<TrainResult> {
  const model = buildResnet18(config.inputSize, config.channels, config.numClasses,
                              config.dropout, config.seed, config.widthMultiplier);
  const optimizer = tf.train.adam(config.learningRate);
  const loss = smoothedCrossEntropy(config.numClasses, config.labelSmoothing);
  model.full.compile({ optimizer, loss, metrics: ['accuracy'] });

  const { xs: trainX, ys: trainYRaw } = toTensors(splits.train, config.inputSize);
  const { xs: valX, ys: valYRaw } = toTensors(splits.val, config.inputSize);
  const trainY = tf.oneHot(trainYRaw.toInt(), config.numClasses);
  const valY = tf.oneHot(valYRaw.toInt(), config.numClasses);

  let bestValAcc = -1;
  let sinceBest = 0;
  let bestWeights: tf.Tensor[] | null = null;
  let epochsRun = 0;

  for (let epoch = 0; epoch < config.maxEpochs; epoch++) {
    const lr = cosineLr(config.learningRate, epoch, config.maxEpochs);
    // tfjs Adam exposes its learning rate as a mutable field
    (optimizer as unknown as { learningRate: number }).learningRate = lr;

    const history = await model.full.fit(trainX, trainY, {
      epochs: 1,
      batchSize: config.batchSize,
      validationData: [valX, valY],
      shuffle: true,
      verbose: 0,
    });
    epochsRun++;
    const trainLoss = history.history['loss'][0] as number;
    const valAcc = (history.history['val_acc']?.[0]
      ?? history.history['val_accuracy']?.[0]) as number;
    log(`epoch ${epoch + 1}/${config.maxEpochs} lr=${lr.toFixed(5)} `
        + `loss=${trainLoss.toFixed(4)} val_acc=${valAcc.toFixed(4)}`);
    if (!Number.isFinite(trainLoss)) {
      throw new Error(`training diverged: non-finite loss at epoch ${epoch + 1}`);
    }
    if (valAcc > bestValAcc) {
      bestValAcc = valAcc;
      sinceBest = 0;
      if (bestWeights) {
        bestWeights.forEach((w) => w.dispose());
      }
      bestWeights = model.full.getWeights().map((w) => w.clone());
    } else {
      sinceBest++;
      if (sinceBest >= config.patience) {
        log(`early stop after ${epoch + 1} epochs (patience ${config.patience})`);
        break;
      }
    }
  }
  if (bestWeights) {
    model.full.setWeights(bestWeights);
    bestWeights.forEach((w) => w.dispose());
  }

  trainX.dispose(); trainYRaw.dispose(); trainY.dispose();
  valX.dispose(); valYRaw.dispose(); valY.dispose();

  const accuracy = { train: 0, val: 0, test: 0 };
  let macroF1 = 0;
  (['train', 'val', 'test'] as const).forEach((name) => {
    const logits = predictLogits(model.full, splits[name], config.inputSize);
    accuracy[name] = accuracyFromLogits(logits, splits[name].labels, config.numClasses);
    if (name === 'test') {
      macroF1 = macroF1FromLogits(logits, splits[name].labels, config.numClasses);
    }
  });

  return { model, epochsRun, accuracy, macroF1 };
}

/** Train, then write train/val/test logit CSVs plus the manifest. */
export async function trainAndExport(
  splits: DatasetSplits,
  config: TrainConfig,
  outDir: string,
  log: (line: string) => void = () => undefined,
): Promise<TrainResult> {
  const result = await train(splits, config, log);
  (['train', 'val', 'test'] as const).forEach((name) => {
    const logits = predictLogits(result.model.full, splits[name], config.inputSize);
    writeLogitCsv(logits, Array.from(splits[name].labels), config.numClasses,
                  `${outDir}/${name}_logits.csv`);
  });
  const manifest: Manifest = {
    dataset: config.dataset,
    seed: config.seed,
    epochs_run: result.epochsRun,
    accuracy: result.accuracy,
    macro_f1: result.macroF1,
    hyperparameters: {
      input_size: config.inputSize,
      dropout: config.dropout,
      label_smoothing: config.labelSmoothing,
      learning_rate: config.learningRate,
      lr_schedule: 'cosine',
      patience: config.patience,
      batch_size: config.batchSize,
      pretrained: false,
    },
    gradcam_target: 'top1',
  };
  writeManifest(manifest, `${outDir}/manifest.json`);
  return result;
}

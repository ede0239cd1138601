export type DatasetName = 'organamnist' | 'pathmnist';

export interface TrainConfig {
  dataset: DatasetName;
  /** square input size images are upsampled to; 224 for real runs */
  inputSize: number;
  numClasses: number;
  channels: number;
  dropout: number;
  labelSmoothing: number;
  learningRate: number;
  maxEpochs: number;
  /** early-stopping patience on validation accuracy */
  patience: number;
  batchSize: number;
  seed: number;
  /** channel-width scale; 1 is the full backbone, smoke runs shrink it */
  widthMultiplier: number;
}

export const DATASET_CLASSES: Record<DatasetName, { numClasses: number; channels: number }> = {
  organamnist: { numClasses: 11, channels: 1 },
  pathmnist: { numClasses: 9, channels: 3 },
};

export function defaultConfig(dataset: DatasetName): TrainConfig {
  const { numClasses, channels } = DATASET_CLASSES[dataset];
  return {
    dataset,
    inputSize: 224,
    numClasses,
    channels,
    dropout: 0.3,
    labelSmoothing: 0.1,
    learningRate: 0.001,
    maxEpochs: 100,
    patience: 10,
    batchSize: 64,
    seed: 0,
    widthMultiplier: 1.0,
  };
}

/** tiny fast settings for format-conformance runs */
export function smokeConfig(dataset: DatasetName, overrides: Partial<TrainConfig> = {}): TrainConfig {
  return {
    ...defaultConfig(dataset),
    inputSize: 32,
    maxEpochs: 1,
    batchSize: 16,
    widthMultiplier: 0.125,
    ...overrides,
  };
}

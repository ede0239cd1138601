export { DatasetName, TrainConfig, defaultConfig, smokeConfig } from './config';
export { DatasetSplits, ImageSplit, loadDataset, readSplit, syntheticDataset,
         syntheticSplit, toTensors, writeSplit } from './data';
export { Manifest, readLogitCsv, writeGcam, writeLogitCsv, writeManifest } from './formats';
export { exportGradcam, gradcamBatch } from './gradcam';
export { BackboneAndHead, buildResnet18 } from './resnet';
export { TrainResult, accuracyFromLogits, macroF1FromLogits, predictLogits,
         smoothedCrossEntropy, train, trainAndExport } from './train';

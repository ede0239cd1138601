import * as fs from 'fs';

import { DatasetName, defaultConfig, smokeConfig } from './config';
import { DatasetSplits, loadDataset, syntheticDataset } from './data';
import { exportGradcam } from './gradcam';
import { trainAndExport } from './train';

interface Args {
  dataset: DatasetName;
  dataDir?: string;
  outDir: string;
  smoke: boolean;
  seed: number;
  gradcamCount: number;
}

function parseArgs(argv: string[]): Args {
  const args: Args = {
    dataset: 'organamnist',
    outDir: 'out',
    smoke: false,
    seed: 0,
    gradcamCount: 1000,
  };
  for (let i = 0; i < argv.length; i++) {
    switch (argv[i]) {
      case '--dataset':
        args.dataset = argv[++i] as DatasetName;
        break;
      case '--data-dir':
        args.dataDir = argv[++i];
        break;
      case '--out-dir':
        args.outDir = argv[++i];
        break;
      case '--seed':
        args.seed = Number(argv[++i]);
        break;
      case '--gradcam-count':
        args.gradcamCount = Number(argv[++i]);
        break;
      case '--smoke':
        args.smoke = true;
        break;
      default:
        throw new Error(`unknown flag ${argv[i]}`);
    }
  }
  return args;
}

async function main(): Promise<void> {
  const args = parseArgs(process.argv.slice(2));
  const config = args.smoke
    ? smokeConfig(args.dataset, { seed: args.seed })
    : { ...defaultConfig(args.dataset), seed: args.seed };

  let splits: DatasetSplits;
  if (args.dataDir) {
    splits = loadDataset(args.dataDir);
  } else if (args.smoke) {
    splits = syntheticDataset({ train: 256, val: 64, test: 64 }, config.inputSize,
                              config.channels, config.numClasses, config.seed);
  } else {
    throw new Error('--data-dir is required outside --smoke mode '
                    + '(see README for converting MedMNIST splits)');
  }

  fs.mkdirSync(args.outDir, { recursive: true });
  const result = await trainAndExport(splits, config, args.outDir,
                                      (line) => console.log(line));
  console.log(`test accuracy ${result.accuracy.test.toFixed(4)} `
              + `macro-F1 ${result.macroF1.toFixed(4)}`);

  exportGradcam(result.model, splits.test, config.inputSize,
                args.gradcamCount, `${args.outDir}/test_gradcam.gcam`);
  console.log(`wrote ${args.outDir}/{train,val,test}_logits.csv, `
              + `manifest.json, test_gradcam.gcam`);
}

main().catch((err) => {
  console.error(`error: ${err.message}`);
  process.exit(1);
});

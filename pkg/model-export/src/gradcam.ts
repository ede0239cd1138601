import * as tf from '@tensorflow/tfjs';

import { ImageSplit, toTensors } from './data';
import { writeGcam } from './formats';
import { BackboneAndHead } from './resnet';

/**
 * Grad-CAM over the last convolutional stage for the top-1 predicted class:
 * channel weights are the spatial mean of the class logit's gradient, the
 * weighted activation sum is ReLU-clamped and bilinearly upsampled to the
 * output resolution.
 */
export function gradcamBatch(
  model: BackboneAndHead,
  images: tf.Tensor4D,
  outputSize = 224,
): tf.Tensor3D {
  return tf.tidy(() => {
    const features = model.backbone.predict(images) as tf.Tensor4D;
    const logits = model.head.predict(features) as tf.Tensor2D;
    const topClass = logits.argMax(-1) as tf.Tensor1D;
    const oneHot = tf.oneHot(topClass, logits.shape[1]).toFloat();

    const gradFn = tf.grad((feats: tf.Tensor) => {
      const out = model.head.predict(feats as tf.Tensor4D) as tf.Tensor2D;
      return out.mul(oneHot).sum();
    });
    const grads = gradFn(features) as tf.Tensor4D;

    const weights = grads.mean([1, 2]); // (n, channels)
    const weighted = features.mul(weights.expandDims(1).expandDims(1));
    const cam = weighted.sum(-1).relu() as tf.Tensor3D;
    return tf.image.resizeBilinear(cam.expandDims(-1) as tf.Tensor4D,
                                   [outputSize, outputSize]).squeeze([3]);
  });
}

/**
 * Export heatmaps for the first `count` rows of a split (the consumer pairs
 * them with the matching rows of the exported prediction sets).
 */
export function exportGradcam(
  model: BackboneAndHead,
  split: ImageSplit,
  inputSize: number,
  count: number,
  path: string,
  outputSize = 224,
  batchSize = 32,
): void {
  const n = Math.min(count, split.count);
  const maps = new Float32Array(n * outputSize * outputSize);
  for (let start = 0; start < n; start += batchSize) {
    const stop = Math.min(n, start + batchSize);
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
    const cam = gradcamBatch(model, xs, outputSize);
    maps.set(cam.dataSync() as Float32Array, start * outputSize * outputSize);
    xs.dispose();
    ys.dispose();
    cam.dispose();
  }
  writeGcam(maps, n, outputSize, outputSize, path);
}

import * as tf from '@tensorflow/tfjs';
import { describe, expect, it } from 'vitest';

import { buildResnet18 } from '../src/resnet';

describe('resnet-18 architecture', () => {
  it('matches the reference trainable parameter count at full width', () => {
    // conv/bn backbone of the standard 18-layer network plus a K-way head:
    // 11,176,512 + (512 * K + K) for K = 11
    const model = buildResnet18(224, 1, 11, 0.3, 0);
    const headParams = 512 * 11 + 11;
    // grayscale stem loses (3-1)*7*7*64 weights vs the RGB reference
    const stemAdjustment = 2 * 7 * 7 * 64;
    const trainable = model.full.trainableWeights.reduce(
      (sum, w) => sum + w.shape.reduce((a, b) => a * (b as number), 1), 0);
    expect(trainable).toBe(11_176_512 + headParams - stemAdjustment);
  });

  it('exposes the last convolutional stage to the head', () => {
    const model = buildResnet18(64, 1, 5, 0.3, 0, 0.125);
    const featShape = model.backbone.outputs[0].shape;
    expect(featShape).toHaveLength(4);
    expect(featShape[3]).toBe(64); // 512 * 0.125
    const x = tf.zeros([2, 64, 64, 1]);
    const feats = model.backbone.predict(x) as tf.Tensor4D;
    const logits = model.head.predict(feats) as tf.Tensor2D;
    expect(logits.shape).toEqual([2, 5]);
    const direct = model.full.predict(x) as tf.Tensor2D;
    expect(direct.shape).toEqual([2, 5]);
    x.dispose(); feats.dispose(); logits.dispose(); direct.dispose();
  });

  it('produces finite logits from random input', () => {
    const model = buildResnet18(32, 3, 9, 0.3, 1, 0.125);
    const x = tf.randomUniform([4, 32, 32, 3]);
    const out = model.full.predict(x) as tf.Tensor2D;
    const values = Array.from(out.dataSync());
    expect(values.every(Number.isFinite)).toBe(true);
    x.dispose(); out.dispose();
  });
});

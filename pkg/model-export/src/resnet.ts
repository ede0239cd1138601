import * as tf from '@tensorflow/tfjs';

/**
 * ResNet-18 split into a convolutional backbone and a classification head.
 *
 * The split exposes the last convolutional stage's activation, which the
 * Grad-CAM exporter differentiates against. The head is global average
 * pooling, dropout, and a linear projection to the class logits (no softmax;
 * the loss and the exporters both work on raw logits).
 *
 * ImageNet-pretrained weights are not available in this runtime, so layers
 * initialize randomly from the config seed; the manifest records this.
 */
export interface BackboneAndHead {
  backbone: tf.LayersModel;
  head: tf.LayersModel;
  full: tf.LayersModel;
}

function convBnRelu(
  x: tf.SymbolicTensor,
  filters: number,
  kernel: number,
  stride: number,
  seed: number,
  name: string,
  relu = true,
): tf.SymbolicTensor {
  let out = tf.layers
    .conv2d({
      filters,
      kernelSize: kernel,
      strides: stride,
      padding: 'same',
      useBias: false,
      kernelInitializer: tf.initializers.heNormal({ seed }),
      name: `${name}_conv`,
    })
    .apply(x) as tf.SymbolicTensor;
  out = tf.layers.batchNormalization({ name: `${name}_bn` }).apply(out) as tf.SymbolicTensor;
  if (relu) {
    out = tf.layers.reLU({ name: `${name}_relu` }).apply(out) as tf.SymbolicTensor;
  }
  return out;
}

function basicBlock(
  x: tf.SymbolicTensor,
  filters: number,
  stride: number,
  seed: number,
  name: string,
): tf.SymbolicTensor {
  let out = convBnRelu(x, filters, 3, stride, seed, `${name}_a`);
  out = convBnRelu(out, filters, 3, 1, seed + 1, `${name}_b`, false);
  let shortcut = x;
  if (stride !== 1 || (x.shape[3] as number) !== filters) {
    shortcut = convBnRelu(x, filters, 1, stride, seed + 2, `${name}_down`, false);
  }
  const added = tf.layers.add({ name: `${name}_add` }).apply([out, shortcut]) as tf.SymbolicTensor;
  return tf.layers.reLU({ name: `${name}_out` }).apply(added) as tf.SymbolicTensor;
}

export function buildResnet18(
  inputSize: number,
  channels: number,
  numClasses: number,
  dropout: number,
  seed: number,
  widthMultiplier = 1.0,
): BackboneAndHead {
  const input = tf.input({ shape: [inputSize, inputSize, channels], name: 'image' });
  const width = (base: number) => Math.max(8, Math.round(base * widthMultiplier));

  let x = convBnRelu(input, width(64), 7, 2, seed, 'stem');
  x = tf.layers
    .maxPooling2d({ poolSize: 3, strides: 2, padding: 'same', name: 'stem_pool' })
    .apply(x) as tf.SymbolicTensor;

  const stages: Array<[number, number]> = [
    [width(64), 1],
    [width(128), 2],
    [width(256), 2],
    [width(512), 2],
  ];
  stages.forEach(([filters, firstStride], i) => {
    x = basicBlock(x, filters, firstStride, seed + 10 * i, `stage${i + 1}a`);
    x = basicBlock(x, filters, 1, seed + 10 * i + 5, `stage${i + 1}b`);
  });

  const backbone = tf.model({ inputs: input, outputs: x, name: 'backbone' });

  const featShape = backbone.outputs[0].shape.slice(1) as number[];
  const featInput = tf.input({ shape: featShape, name: 'features' });
  let h = tf.layers.globalAveragePooling2d({ name: 'gap' }).apply(featInput) as tf.SymbolicTensor;
  h = tf.layers.dropout({ rate: dropout, seed, name: 'dropout' }).apply(h) as tf.SymbolicTensor;
  h = tf.layers
    .dense({
      units: numClasses,
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 1 }),
      name: 'logits',
    })
    .apply(h) as tf.SymbolicTensor;
  const head = tf.model({ inputs: featInput, outputs: h, name: 'head' });

  const fullOut = head.apply(backbone.apply(input)) as tf.SymbolicTensor;
  const full = tf.model({ inputs: input, outputs: fullOut, name: 'resnet18' });

  return { backbone, head, full };
}

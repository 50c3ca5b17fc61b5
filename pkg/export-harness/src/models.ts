/** Model builders: the two source CNN stacks and the dense transfer heads.
 *
 * Every layer takes an explicit initializer seed so a run is reproducible
 * end to end on a single thread.
 */

import * as tf from "@tensorflow/tfjs";

import { IMAGE_SIZE } from "./data.js";

function glorot(seed: number) {
  return tf.initializers.glorotUniform({ seed });
}

/** conv32-pool-conv64-pool-flatten-dropout-softmax stack. */
export function sourceCnn(m: number, seed: number): tf.Sequential {
  const model = tf.sequential();
  model.add(
    tf.layers.conv2d({
      inputShape: [IMAGE_SIZE, IMAGE_SIZE, 1],
      filters: 32,
      kernelSize: 3,
      activation: "relu",
      kernelInitializer: glorot(seed),
    }),
  );
  model.add(tf.layers.maxPooling2d({ poolSize: 2 }));
  model.add(
    tf.layers.conv2d({
      filters: 64,
      kernelSize: 3,
      activation: "relu",
      kernelInitializer: glorot(seed + 1),
    }),
  );
  model.add(tf.layers.maxPooling2d({ poolSize: 2 }));
  model.add(tf.layers.flatten());
  model.add(tf.layers.dropout({ rate: 0.5, seed: seed + 2 }));
  model.add(
    tf.layers.dense({ units: m, activation: "softmax", kernelInitializer: glorot(seed + 3) }),
  );
  return model;
}

/** deeper stack: two conv pairs, pooling, dense 128, softmax. */
export function deepSourceCnn(m: number, seed: number): tf.Sequential {
  const model = tf.sequential();
  model.add(
    tf.layers.conv2d({
      inputShape: [IMAGE_SIZE, IMAGE_SIZE, 1],
      filters: 32,
      kernelSize: 3,
      padding: "same",
      activation: "relu",
      kernelInitializer: glorot(seed),
    }),
  );
  model.add(
    tf.layers.conv2d({
      filters: 32,
      kernelSize: 3,
      padding: "same",
      activation: "relu",
      kernelInitializer: glorot(seed + 1),
    }),
  );
  model.add(tf.layers.maxPooling2d({ poolSize: 2 }));
  model.add(
    tf.layers.conv2d({
      filters: 64,
      kernelSize: 3,
      padding: "same",
      activation: "relu",
      kernelInitializer: glorot(seed + 2),
    }),
  );
  model.add(
    tf.layers.conv2d({
      filters: 64,
      kernelSize: 3,
      padding: "same",
      activation: "relu",
      kernelInitializer: glorot(seed + 3),
    }),
  );
  model.add(tf.layers.maxPooling2d({ poolSize: 2 }));
  model.add(tf.layers.flatten());
  model.add(
    tf.layers.dense({ units: 128, activation: "relu", kernelInitializer: glorot(seed + 4) }),
  );
  model.add(
    tf.layers.dense({ units: m, activation: "softmax", kernelInitializer: glorot(seed + 5) }),
  );
  return model;
}

/** Transfer head mapping m source softmax values to n target classes. */
export function customHead(layers: 2 | 5, mIn: number, n: number, seed: number): tf.Sequential {
  const model = tf.sequential();
  const widths = layers === 2 ? [10] : [10, 20, 40, 10];
  widths.forEach((units, i) => {
    model.add(
      tf.layers.dense({
        units,
        activation: "relu",
        kernelInitializer: glorot(seed + i),
        ...(i === 0 ? { inputShape: [mIn] } : {}),
      }),
    );
  });
  model.add(
    tf.layers.dense({
      units: n,
      activation: "softmax",
      kernelInitializer: glorot(seed + widths.length),
    }),
  );
  return model;
}

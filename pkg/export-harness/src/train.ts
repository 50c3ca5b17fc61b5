/** Seeded training with early stopping on validation loss. */

import * as tf from "@tensorflow/tfjs";

export interface TrainConfig {
  epochsCap: number;
  /** stop when val_loss fails to improve by minDelta within patience epochs */
  patience: number;
  minDelta: number;
  batchSize: number;
}

export interface TrainResult {
  epochsRun: number;
  finalLoss: number;
  finalValLoss: number;
  diverged: boolean;
}

export async function fitWithEarlyStop(
  model: tf.Sequential,
  x: tf.Tensor,
  y: tf.Tensor,
  valX: tf.Tensor,
  valY: tf.Tensor,
  cfg: TrainConfig,
): Promise<TrainResult> {
  model.compile({
    optimizer: tf.train.adam(),
    loss: "sparseCategoricalCrossentropy",
    metrics: ["accuracy"],
  });
  const history = await model.fit(x, y, {
    epochs: cfg.epochsCap,
    batchSize: cfg.batchSize,
    validationData: [valX, valY],
    shuffle: false,
    verbose: 0,
    callbacks: [
      tf.callbacks.earlyStopping({
        monitor: "val_loss",
        minDelta: cfg.minDelta,
        patience: cfg.patience,
      }),
    ],
  });
  const losses = history.history.loss as number[];
  const valLosses = history.history.val_loss as number[];
  const finalLoss = losses[losses.length - 1];
  const finalValLoss = valLosses[valLosses.length - 1];
  return {
    epochsRun: losses.length,
    finalLoss,
    finalValLoss,
    diverged: !Number.isFinite(finalLoss) || !Number.isFinite(finalValLoss),
  };
}

/** Accuracy of argmax predictions against 0-based labels. */
export function accuracyOf(probs: Float32Array, labels: Int32Array, classes: number): number {
  const count = labels.length;
  let hits = 0;
  for (let i = 0; i < count; i++) {
    let best = 0;
    for (let c = 1; c < classes; c++) {
      if (probs[i * classes + c] > probs[i * classes + best]) best = c;
    }
    if (best === labels[i]) hits++;
  }
  return hits / count;
}

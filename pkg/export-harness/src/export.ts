/** End-to-end producer: train source CNNs on class tuples, push the target
 * images through each frozen source, write softmax dumps, then train a
 * transfer head per source to obtain ground-truth accuracies.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import path from "node:path";

import * as tf from "@tensorflow/tfjs";

import { tupleId } from "./combos.js";
import { IMAGE_SIZE, ImageSet, makeImageSet } from "./data.js";
import { writeDump, writeTruth } from "./dump.js";
import { customHead, deepSourceCnn, sourceCnn } from "./models.js";
import { TrainResult, accuracyOf, fitWithEarlyStop } from "./train.js";
import { deriveSeed } from "./rng.js";

export interface ExportConfig {
  outDir: string;
  sourceTuples: number[][];
  targetTuple: number[];
  /** target images per class per split */
  perClassTrain: number;
  perClassVal: number;
  perClassTest: number;
  /** source training images per class */
  sourcePerClass: number;
  sourceValPerClass: number;
  epochsCap: number;
  patience: number;
  minDelta: number;
  batchSize: number;
  /** the dense heads are cheap, so they get their own larger budget */
  headEpochsCap: number;
  headBatchSize: number;
  headLayers: 2 | 5;
  deepSource: boolean;
  seed: number;
}

export const DEFAULTS = {
  perClassTrain: 32,
  perClassVal: 16,
  perClassTest: 24,
  sourcePerClass: 30,
  sourceValPerClass: 10,
  epochsCap: 12,
  patience: 20,
  minDelta: 0.01,
  batchSize: 16,
  headEpochsCap: 150,
  headBatchSize: 8,
  headLayers: 2 as const,
  deepSource: false,
};

export interface SourceOutcome {
  sourceId: string;
  tuple: number[];
  sourceEpochs: number;
  headEpochs: number;
  truthAccuracy: number;
}

export interface ExportResult {
  outcomes: SourceOutcome[];
  skipped: string[];
  truthPath: string;
}

function toImageTensor(set: ImageSet): tf.Tensor4D {
  return tf.tensor4d(set.pixels, [set.count, IMAGE_SIZE, IMAGE_SIZE, 1]);
}

function toLabelTensor(set: ImageSet): tf.Tensor1D {
  return tf.tensor1d(Float32Array.from(set.labels), "float32");
}

async function trainSource(
  tuple: number[],
  cfg: ExportConfig,
  seed: number,
): Promise<{ model: tf.Sequential; result: TrainResult }> {
  const train = makeImageSet(tuple, cfg.sourcePerClass, deriveSeed(seed, 1));
  const val = makeImageSet(tuple, cfg.sourceValPerClass, deriveSeed(seed, 2));
  const model = cfg.deepSource
    ? deepSourceCnn(tuple.length, deriveSeed(seed, 3))
    : sourceCnn(tuple.length, deriveSeed(seed, 3));
  const tensors = [toImageTensor(train), toLabelTensor(train), toImageTensor(val), toLabelTensor(val)];
  try {
    const result = await fitWithEarlyStop(
      model,
      tensors[0],
      tensors[1],
      tensors[2],
      tensors[3],
      {
        epochsCap: cfg.epochsCap,
        patience: cfg.patience,
        minDelta: cfg.minDelta,
        batchSize: cfg.batchSize,
      },
    );
    return { model, result };
  } finally {
    tensors.forEach((t) => t.dispose());
  }
}

function predictSoftmax(model: tf.Sequential, images: ImageSet): Float32Array {
  const out = tf.tidy(() => {
    const x = tf.tensor4d(images.pixels, [images.count, IMAGE_SIZE, IMAGE_SIZE, 1]);
    return model.predict(x) as tf.Tensor2D;
  });
  const data = out.dataSync() as Float32Array;
  out.dispose();
  return data;
}

export async function exportSources(cfg: ExportConfig): Promise<ExportResult> {
  mkdirSync(cfg.outDir, { recursive: true });
  const n = cfg.targetTuple.length;
  const targetSeed = deriveSeed(cfg.seed, 0xa11ce);
  const targetTrain = makeImageSet(cfg.targetTuple, cfg.perClassTrain, deriveSeed(targetSeed, 1));
  const targetVal = makeImageSet(cfg.targetTuple, cfg.perClassVal, deriveSeed(targetSeed, 2));
  const targetTest = makeImageSet(cfg.targetTuple, cfg.perClassTest, deriveSeed(targetSeed, 3));

  const truth = new Map<string, number>();
  const outcomes: SourceOutcome[] = [];
  const skipped: string[] = [];

  for (let s = 0; s < cfg.sourceTuples.length; s++) {
    const tuple = cfg.sourceTuples[s];
    const sourceId = tupleId(tuple);
    const m = tuple.length;
    const sourceSeed = deriveSeed(cfg.seed, 100 + s);

    const { model, result } = await trainSource(tuple, cfg, sourceSeed);
    if (result.diverged) {
      console.warn(`[export] ${sourceId}: training diverged, skipping`);
      model.dispose();
      skipped.push(sourceId);
      continue;
    }

    const probsTrain = predictSoftmax(model, targetTrain);
    const probsVal = predictSoftmax(model, targetVal);
    const probsTest = predictSoftmax(model, targetTest);
    model.dispose();

    writeDump(
      path.join(cfg.outDir, `${sourceId}_train.csv`),
      m, n, sourceId, "train", probsTrain, targetTrain.labels,
    );
    writeDump(
      path.join(cfg.outDir, `${sourceId}_val.csv`),
      m, n, sourceId, "val", probsVal, targetVal.labels,
    );

    // transfer head on the frozen source's outputs; truth = test accuracy
    const head = customHead(cfg.headLayers, m, n, deriveSeed(sourceSeed, 7));
    const headTensors = [
      tf.tensor2d(probsTrain, [targetTrain.count, m]),
      tf.tensor1d(Float32Array.from(targetTrain.labels), "float32"),
      tf.tensor2d(probsVal, [targetVal.count, m]),
      tf.tensor1d(Float32Array.from(targetVal.labels), "float32"),
    ];
    let headResult: TrainResult;
    try {
      headResult = await fitWithEarlyStop(
        head,
        headTensors[0],
        headTensors[1],
        headTensors[2],
        headTensors[3],
        {
          epochsCap: cfg.headEpochsCap,
          patience: cfg.patience,
          minDelta: cfg.minDelta,
          batchSize: cfg.headBatchSize,
        },
      );
      if (headResult.diverged) {
        console.warn(`[export] ${sourceId}: head training diverged, skipping`);
        skipped.push(sourceId);
        continue;
      }
      const testOut = tf.tidy(
        () => head.predict(tf.tensor2d(probsTest, [targetTest.count, m])) as tf.Tensor2D,
      );
      const headProbs = testOut.dataSync() as Float32Array;
      testOut.dispose();
      const accuracy = accuracyOf(headProbs, targetTest.labels, n);
      truth.set(sourceId, accuracy);
      outcomes.push({
        sourceId,
        tuple,
        sourceEpochs: result.epochsRun,
        headEpochs: headResult.epochsRun,
        truthAccuracy: accuracy,
      });
    } finally {
      headTensors.forEach((t) => t.dispose());
      head.dispose();
    }
  }

  const truthPath = path.join(cfg.outDir, "truth.csv");
  writeTruth(truthPath, truth);
  writeFileSync(
    path.join(cfg.outDir, "manifest.json"),
    JSON.stringify(
      {
        seed: cfg.seed,
        targetTuple: cfg.targetTuple,
        sourceTuples: cfg.sourceTuples,
        imageSize: IMAGE_SIZE,
        perClass: {
          train: cfg.perClassTrain,
          val: cfg.perClassVal,
          test: cfg.perClassTest,
          sourceTrain: cfg.sourcePerClass,
          sourceVal: cfg.sourceValPerClass,
        },
        training: {
          epochsCap: cfg.epochsCap,
          patience: cfg.patience,
          minDelta: cfg.minDelta,
          batchSize: cfg.batchSize,
          headEpochsCap: cfg.headEpochsCap,
          headBatchSize: cfg.headBatchSize,
          headLayers: cfg.headLayers,
          deepSource: cfg.deepSource,
          // optimizer defaults, recorded for reproducibility
          optimizer: { kind: "adam", learningRate: 0.001, beta1: 0.9, beta2: 0.999, epsilon: 1e-7 },
        },
        skipped,
      },
      null,
      2,
    ) + "\n",
    "utf-8",
  );
  return { outcomes, skipped, truthPath };
}

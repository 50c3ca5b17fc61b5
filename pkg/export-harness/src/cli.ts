/** CLI: export source softmax dumps and ground truth for a toy family.
 *
 * Example:
 *   node dist/cli.js --out-dir dumps --universe 6 --sources 6 --target 1,2 --seed 7
 */

import { firstCombinations } from "./combos.js";
import { DEFAULTS, ExportConfig, exportSources } from "./export.js";

function parseArgs(argv: string[]): Map<string, string> {
  const out = new Map<string, string>();
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (!arg.startsWith("--")) throw new Error(`unexpected argument ${arg}`);
    const key = arg.slice(2);
    if (key === "deep-source") {
      out.set(key, "true");
      continue;
    }
    const value = argv[++i];
    if (value === undefined) throw new Error(`missing value for --${key}`);
    out.set(key, value);
  }
  return out;
}

function intOf(args: Map<string, string>, key: string, fallback: number): number {
  const raw = args.get(key);
  if (raw === undefined) return fallback;
  const value = Number(raw);
  if (!Number.isInteger(value)) throw new Error(`--${key} must be an integer, got ${raw}`);
  return value;
}

export async function main(argv: string[]): Promise<number> {
  const args = parseArgs(argv);
  const outDir = args.get("out-dir");
  if (!outDir) {
    console.error("error: --out-dir is required");
    return 2;
  }
  const universe = intOf(args, "universe", 6);
  const sourceSize = intOf(args, "source-size", 2);
  const sourceCount = intOf(args, "sources", 6);
  const target = (args.get("target") ?? "1,2").split(",").map(Number);

  const cfg: ExportConfig = {
    outDir,
    sourceTuples: firstCombinations(universe, sourceSize, sourceCount),
    targetTuple: target,
    perClassTrain: intOf(args, "per-class-train", DEFAULTS.perClassTrain),
    perClassVal: intOf(args, "per-class-val", DEFAULTS.perClassVal),
    perClassTest: intOf(args, "per-class-test", DEFAULTS.perClassTest),
    sourcePerClass: intOf(args, "source-per-class", DEFAULTS.sourcePerClass),
    sourceValPerClass: intOf(args, "source-val-per-class", DEFAULTS.sourceValPerClass),
    epochsCap: intOf(args, "epochs-cap", DEFAULTS.epochsCap),
    patience: intOf(args, "patience", DEFAULTS.patience),
    minDelta: Number(args.get("min-delta") ?? DEFAULTS.minDelta),
    batchSize: intOf(args, "batch-size", DEFAULTS.batchSize),
    headEpochsCap: intOf(args, "head-epochs-cap", DEFAULTS.headEpochsCap),
    headBatchSize: intOf(args, "head-batch-size", DEFAULTS.headBatchSize),
    headLayers: intOf(args, "head-layers", DEFAULTS.headLayers) === 5 ? 5 : 2,
    deepSource: args.get("deep-source") === "true",
    seed: intOf(args, "seed", 0),
  };

  const result = await exportSources(cfg);
  console.log(
    `exported ${result.outcomes.length} sources to ${outDir}` +
      (result.skipped.length ? ` (skipped: ${result.skipped.join(", ")})` : ""),
  );
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (invokedDirectly) {
  main(process.argv.slice(2))
    .then((code) => process.exit(code))
    .catch((err) => {
      console.error(`error: ${err.message}`);
      process.exit(1);
    });
}

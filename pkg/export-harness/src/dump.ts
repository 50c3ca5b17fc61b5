/** Writers for the scoring engine's dump CSV and truth.csv formats. */

import { writeFileSync } from "node:fs";

const SCHEMA_VERSION = 1;

/** 9 significant digits with trailing zeros trimmed. */
export function formatProb(value: number): string {
  const clamped = Math.min(1, Math.max(0, value));
  return String(Number(clamped.toPrecision(9)));
}

export function formatDump(
  m: number,
  n: number,
  sourceId: string,
  split: "train" | "val" | "test",
  probs: Float32Array,
  labels: Int32Array,
): string {
  const lines = [
    `# m=${m} n=${n} source_id=${sourceId} split=${split} version=${SCHEMA_VERSION}`,
  ];
  for (let i = 0; i < labels.length; i++) {
    const cells: string[] = [];
    for (let j = 0; j < m; j++) cells.push(formatProb(probs[i * m + j]));
    cells.push(String(labels[i] + 1)); // labels are 1-based on disk
    lines.push(cells.join(","));
  }
  return lines.join("\n") + "\n";
}

export function writeDump(
  path: string,
  m: number,
  n: number,
  sourceId: string,
  split: "train" | "val" | "test",
  probs: Float32Array,
  labels: Int32Array,
): void {
  writeFileSync(path, formatDump(m, n, sourceId, split, probs, labels), "utf-8");
}

export function writeTruth(path: string, entries: Map<string, number>): void {
  const lines = [`# version=${SCHEMA_VERSION} kind=truth`, "source_id,accuracy"];
  for (const id of [...entries.keys()].sort()) {
    lines.push(`${id},${entries.get(id)}`);
  }
  writeFileSync(path, lines.join("\n") + "\n", "utf-8");
}

export function readTruth(text: string): Map<string, number> {
  const out = new Map<string, number>();
  for (const line of text.split("\n")) {
    const row = line.trim();
    if (!row || row.startsWith("#") || row === "source_id,accuracy") continue;
    const [id, acc] = row.split(",");
    out.set(id, Number(acc));
  }
  return out;
}

/** Enumeration of source class tuples: lexicographic k-combinations of 1..universe. */

export function firstCombinations(universe: number, k: number, count: number): number[][] {
  if (k < 1 || k > universe) throw new Error(`k=${k} out of range for universe=${universe}`);
  const out: number[][] = [];
  const current = Array.from({ length: k }, (_, i) => i + 1);
  while (out.length < count) {
    out.push([...current]);
    // advance to the next combination in lexicographic order
    let i = k - 1;
    while (i >= 0 && current[i] === universe - (k - 1 - i)) i--;
    if (i < 0) break;
    current[i]++;
    for (let j = i + 1; j < k; j++) current[j] = current[j - 1] + 1;
  }
  if (out.length < count) {
    throw new Error(`only ${out.length} ${k}-combinations exist for universe=${universe}`);
  }
  return out;
}

export function tupleId(tuple: number[]): string {
  return `src_${tuple.join("-")}`;
}

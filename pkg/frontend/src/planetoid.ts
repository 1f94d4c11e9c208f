/**
 * Reader for the pickled citation dataset distribution.
 *
 * Each dataset ships eight files: ind.<name>.{x,y,tx,ty,allx,ally,graph}
 * and ind.<name>.test.index. allx/ally hold the training-pool nodes in
 * storage order; tx/ty hold the test nodes in the (shuffled) order of the
 * test.index file, whose values are the absolute node ids. The adjacency
 * dict covers all nodes.
 *
 * Node ids here follow the widely used loader convention: the stored pool
 * occupies rows 0..allx_rows, and test rows are scattered back to their
 * absolute ids. Some distributions omit ids from test.index (nodes with no
 * citations and no features); those rows stay all-zero, take label 0, and
 * are excluded from the test split. That behavior is reported in the
 * conversion notes rather than silently applied.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { DataError } from "./errors.js";
import { Bundle, SplitIndices, rowNormalize } from "./bundle.js";
import { CsrMatrix, NDArray, csrToDense, loadPickle } from "./numpy.js";

const PARTS = ["x", "y", "tx", "ty", "allx", "ally", "graph"] as const;

// The reference pipeline fixes the validation pool at the 500 nodes after
// the training rows; capped so tiny inputs stay loadable.
const VAL_POOL = 500;

export interface PlanetoidRaw {
  x: CsrMatrix;
  y: NDArray;
  tx: CsrMatrix;
  ty: NDArray;
  allx: CsrMatrix;
  ally: NDArray;
  graph: Map<number, number[]>;
  testIndex: number[];
}

function readPart(dir: string, name: string, part: string): unknown {
  const file = path.join(dir, `ind.${name}.${part}`);
  if (!fs.existsSync(file)) throw new DataError(`missing upstream file: ${file}`);
  return loadPickle(new Uint8Array(fs.readFileSync(file)));
}

function expectCsr(value: unknown, what: string): CsrMatrix {
  if (
    typeof value === "object" && value !== null &&
    "rows" in value && "indptr" in value
  ) {
    return value as CsrMatrix;
  }
  throw new DataError(`${what} does not hold a CSR matrix`);
}

function expectMatrix(value: unknown, what: string): NDArray {
  if (!(value instanceof NDArray) || value.shape.length !== 2) {
    throw new DataError(`${what} does not hold a two-dimensional array`);
  }
  return value;
}

function expectGraph(value: unknown): Map<number, number[]> {
  if (!(value instanceof Map)) throw new DataError("graph file does not hold a dict");
  const out = new Map<number, number[]>();
  for (const [key, neighbors] of value) {
    if (typeof key !== "number" || !Number.isInteger(key)) {
      throw new DataError("graph dict has a non-integer node id");
    }
    if (!Array.isArray(neighbors)) {
      throw new DataError(`graph entry for node ${key} is not a list`);
    }
    for (const v of neighbors) {
      if (typeof v !== "number" || !Number.isInteger(v)) {
        throw new DataError(`graph entry for node ${key} lists a non-integer neighbor`);
      }
    }
    out.set(key, neighbors as number[]);
  }
  return out;
}

export function readPlanetoidRaw(dir: string, name: string): PlanetoidRaw {
  const loaded: Record<string, unknown> = {};
  for (const part of PARTS) loaded[part] = readPart(dir, name, part);

  const indexFile = path.join(dir, `ind.${name}.test.index`);
  if (!fs.existsSync(indexFile)) throw new DataError(`missing upstream file: ${indexFile}`);
  const testIndex = fs
    .readFileSync(indexFile, "ascii")
    .split("\n")
    .map((line) => line.trim())
    .filter((line) => line.length > 0)
    .map((line) => {
      const v = parseInt(line, 10);
      if (!Number.isFinite(v) || v < 0) throw new DataError(`bad test index line "${line}"`);
      return v;
    });
  if (testIndex.length === 0) throw new DataError("test.index is empty");

  return {
    x: expectCsr(loaded.x, "ind.*.x"),
    y: expectMatrix(loaded.y, "ind.*.y"),
    tx: expectCsr(loaded.tx, "ind.*.tx"),
    ty: expectMatrix(loaded.ty, "ind.*.ty"),
    allx: expectCsr(loaded.allx, "ind.*.allx"),
    ally: expectMatrix(loaded.ally, "ind.*.ally"),
    graph: expectGraph(loaded.graph),
    testIndex,
  };
}

function argmaxRow(values: Float64Array, base: number, width: number): number {
  let best = 0;
  for (let j = 1; j < width; j++) {
    if (values[base + j] > values[base + best]) best = j;
  }
  return best;
}

export interface PlanetoidResult {
  bundle: Bundle;
  notes: string[];
}

export function loadPlanetoid(dir: string, name: string): PlanetoidResult {
  const raw = readPlanetoidRaw(dir, name);
  const notes: string[] = [];

  const poolRows = raw.allx.rows;
  const d = raw.allx.cols;
  const numClasses = raw.ally.shape[1];
  if (raw.tx.cols !== d || raw.x.cols !== d) {
    throw new DataError(
      `feature widths disagree: allx has ${d}, tx has ${raw.tx.cols}, x has ${raw.x.cols}`,
    );
  }
  if (raw.ty.shape[1] !== numClasses || raw.y.shape[1] !== numClasses) {
    throw new DataError("one-hot label widths disagree across files");
  }
  if (raw.ally.shape[0] !== poolRows) {
    throw new DataError(`ally has ${raw.ally.shape[0]} rows but allx has ${poolRows}`);
  }
  if (raw.tx.rows !== raw.testIndex.length || raw.ty.shape[0] !== raw.testIndex.length) {
    throw new DataError(
      `test.index lists ${raw.testIndex.length} nodes but tx/ty hold ` +
        `${raw.tx.rows}/${raw.ty.shape[0]} rows`,
    );
  }

  const sorted = [...raw.testIndex].sort((a, b) => a - b);
  for (let i = 1; i < sorted.length; i++) {
    if (sorted[i] === sorted[i - 1]) {
      throw new DataError(`test.index repeats node ${sorted[i]}`);
    }
  }
  if (sorted[0] !== poolRows) {
    throw new DataError(
      `test ids must start where the stored pool ends: pool has ${poolRows} rows ` +
        `but the smallest test id is ${sorted[0]}`,
    );
  }
  const n = sorted[sorted.length - 1] + 1;

  // Scatter: pool rows keep their position, test row j lands at its
  // absolute id testIndex[j]. Ids missing from test.index stay zero.
  const features = new Float64Array(n * d);
  features.set(csrToDense(raw.allx), 0);
  const txDense = csrToDense(raw.tx);
  const onehot = new Float64Array(n * numClasses);
  onehot.set(raw.ally.toNumbers(), 0);
  const tyValues = raw.ty.toNumbers();
  raw.testIndex.forEach((node, j) => {
    features.set(txDense.subarray(j * d, (j + 1) * d), node * d);
    onehot.set(tyValues.subarray(j * numClasses, (j + 1) * numClasses), node * numClasses);
  });

  const present = new Set(raw.testIndex);
  const gaps: number[] = [];
  for (let node = poolRows; node < n; node++) {
    if (!present.has(node)) gaps.push(node);
  }
  if (gaps.length) {
    notes.push(
      `test.index skips ${gaps.length} node id(s) [${gaps.join(", ")}]: ` +
        "these isolated nodes keep zero features, take label 0, and are " +
        "excluded from the test split",
    );
  }

  const labels: number[] = [];
  for (let node = 0; node < n; node++) {
    labels.push(argmaxRow(onehot, node * numClasses, numClasses));
  }

  rowNormalize(features, n, d);
  notes.push("features row-normalized to unit sum (recorded in meta.json)");

  // Unique undirected pairs; the adjacency dict lists both directions.
  let listed = 0;
  const seen = new Set<number>();
  const pairs: [number, number][] = [];
  for (const [u, neighbors] of raw.graph) {
    if (u >= n) throw new DataError(`graph lists node ${u} outside the ${n}-node id range`);
    for (const v of neighbors) {
      if (v >= n || v < 0) {
        throw new DataError(`graph lists neighbor ${v} outside the ${n}-node id range`);
      }
      listed++;
      const a = Math.min(u, v);
      const b = Math.max(u, v);
      const key = a * n + b;
      if (!seen.has(key)) {
        seen.add(key);
        pairs.push([a, b]);
      }
    }
  }
  pairs.sort((p, q) => p[0] - q[0] || p[1] - q[1]);
  notes.push(
    `adjacency lists hold ${listed} directed entries; stored ${pairs.length} ` +
      "unique undirected pairs",
  );

  const trainRows = raw.y.shape[0];
  if (trainRows > poolRows) {
    throw new DataError(`y has ${trainRows} rows but the stored pool only ${poolRows}`);
  }
  const valLen = Math.min(VAL_POOL, poolRows - trainRows);
  const split: SplitIndices = {
    train: Array.from({ length: trainRows }, (_, i) => i),
    val: Array.from({ length: valLen }, (_, i) => trainRows + i),
    test: sorted,
  };

  const bundle: Bundle = {
    name,
    numNodes: n,
    featureDim: d,
    numClasses,
    features,
    labels,
    edges: pairs.flat(),
    splits: [split],
    featuresRowNormalized: true,
  };
  return { bundle, notes };
}

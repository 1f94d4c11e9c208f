/**
 * Reader for the webpage/Wikipedia dataset layout: tab-separated node and
 * edge tables (one header line each) plus ten .npz files of boolean split
 * masks. Edge records are stored verbatim, in file order, duplicates and
 * orientation included, so the stored edge count equals the upstream line
 * count; the consumer's adjacency builder symmetrizes and deduplicates.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { DataError } from "./errors.js";
import { Bundle, SplitIndices, rowNormalize } from "./bundle.js";
import { NDArray, readNpz } from "./numpy.js";

export const SPLIT_COUNT = 10;

function readLines(file: string): string[] {
  if (!fs.existsSync(file)) throw new DataError(`missing upstream file: ${file}`);
  return fs
    .readFileSync(file, "utf8")
    .split("\n")
    .map((line) => line.replace(/\r$/, ""))
    .filter((line) => line.length > 0);
}

interface NodeTable {
  n: number;
  d: number;
  features: Float64Array;
  labels: number[];
}

function parseNodeTable(file: string): NodeTable {
  const lines = readLines(file);
  if (lines.length < 2) throw new DataError(`${file} holds no node rows`);
  const rows = lines.slice(1); // header: node_id	feature	label
  const n = rows.length;

  let d = -1;
  let features: Float64Array | null = null;
  const labels = new Array<number>(n).fill(-1);
  const seen = new Set<number>();
  for (const row of rows) {
    const cols = row.split("\t");
    if (cols.length !== 3) {
      throw new DataError(`${file}: expected 3 tab-separated columns, got ${cols.length}`);
    }
    const id = parseInt(cols[0], 10);
    if (!Number.isInteger(id) || id < 0 || id >= n) {
      throw new DataError(`${file}: node id ${cols[0]} out of range for ${n} rows`);
    }
    if (seen.has(id)) throw new DataError(`${file}: node id ${id} appears twice`);
    seen.add(id);

    const values = cols[1].split(",").map((s) => {
      const v = Number(s);
      if (!Number.isFinite(v)) throw new DataError(`${file}: bad feature value "${s}"`);
      return v;
    });
    if (d === -1) {
      d = values.length;
      features = new Float64Array(n * d);
    } else if (values.length !== d) {
      throw new DataError(`${file}: node ${id} has ${values.length} features, expected ${d}`);
    }
    features!.set(values, id * d);

    const label = parseInt(cols[2], 10);
    if (!Number.isInteger(label) || label < 0) {
      throw new DataError(`${file}: bad label "${cols[2]}" for node ${id}`);
    }
    labels[id] = label;
  }
  return { n, d, features: features!, labels };
}

function parseEdgeTable(file: string, n: number): number[] {
  const lines = readLines(file);
  const edges: number[] = [];
  for (const row of lines.slice(1)) {
    const cols = row.split("\t");
    if (cols.length !== 2) {
      throw new DataError(`${file}: expected 2 tab-separated columns, got ${cols.length}`);
    }
    for (const col of cols) {
      const v = parseInt(col, 10);
      if (!Number.isInteger(v) || v < 0 || v >= n) {
        throw new DataError(`${file}: edge endpoint ${col} out of range for ${n} nodes`);
      }
      edges.push(v);
    }
  }
  return edges;
}

function maskToIndices(mask: NDArray, n: number, what: string): number[] {
  if (mask.shape.length !== 1 || mask.shape[0] !== n) {
    throw new DataError(`${what} mask has shape (${mask.shape.join(", ")}), expected (${n},)`);
  }
  const values = mask.toNumbers();
  const out: number[] = [];
  for (let i = 0; i < n; i++) if (values[i] !== 0) out.push(i);
  return out;
}

export interface GeomGcnResult {
  bundle: Bundle;
  notes: string[];
}

export function loadGeomGcn(dir: string, name: string): GeomGcnResult {
  const nodeTable = parseNodeTable(path.join(dir, "out1_node_feature_label.txt"));
  const { n, d, features, labels } = nodeTable;
  const edges = parseEdgeTable(path.join(dir, "out1_graph_edges.txt"), n);

  const splits: SplitIndices[] = [];
  for (let i = 0; i < SPLIT_COUNT; i++) {
    const file = path.join(dir, `${name}_split_0.6_0.2_${i}.npz`);
    if (!fs.existsSync(file)) throw new DataError(`missing upstream file: ${file}`);
    const arrays = readNpz(new Uint8Array(fs.readFileSync(file)));
    const pull = (key: string): NDArray => {
      const arr = arrays.get(key);
      if (!arr) throw new DataError(`${file} lacks the ${key} array`);
      return arr;
    };
    const split: SplitIndices = {
      train: maskToIndices(pull("train_mask"), n, `${file} train`),
      val: maskToIndices(pull("val_mask"), n, `${file} val`),
      test: maskToIndices(pull("test_mask"), n, `${file} test`),
    };
    const total = split.train.length + split.val.length + split.test.length;
    const distinct = new Set([...split.train, ...split.val, ...split.test]).size;
    if (distinct !== total) throw new DataError(`${file} masks overlap`);
    splits.push(split);
  }

  const numClasses = Math.max(...labels) + 1;
  rowNormalize(features, n, d);

  const notes = [
    `stored ${edges.length / 2} edge records verbatim from the upstream file`,
    "features row-normalized to unit sum (recorded in meta.json)",
    `${SPLIT_COUNT} fixed splits copied from the upstream mask files`,
  ];

  const bundle: Bundle = {
    name,
    numNodes: n,
    featureDim: d,
    numClasses,
    features,
    labels,
    edges,
    splits,
    featuresRowNormalized: true,
  };
  return { bundle, notes };
}

/**
 * Bundle writer.
 *
 * Output layout matches the consumer package's own serializer byte for
 * byte: meta.json (sorted keys, two-space indent), edges.bin (LE u32
 * pairs), features.bin (LE f32 row-major), labels.bin (LE u16), and
 * splits.json (sorted keys, single line). Conversion twice from the same
 * input therefore yields identical files, and a bundle the consumer
 * re-saves is already canonical.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import { DataError, UsageError } from "./errors.js";

export interface SplitIndices {
  train: number[];
  val: number[];
  test: number[];
}

export interface Bundle {
  name: string;
  numNodes: number;
  featureDim: number;
  numClasses: number;
  /** Row-major n x featureDim. */
  features: Float64Array;
  labels: number[];
  /** Flattened endpoint pairs, stored exactly as produced by the reader. */
  edges: number[];
  splits: SplitIndices[];
  featuresRowNormalized: boolean;
}

/**
 * Scale each row to unit sum, in place. Zero rows stay zero. Uses
 * multiplication by the reciprocal so results match the reference
 * preprocessing bit for bit.
 */
export function rowNormalize(features: Float64Array, n: number, d: number): void {
  for (let row = 0; row < n; row++) {
    let sum = 0;
    const base = row * d;
    for (let j = 0; j < d; j++) sum += features[base + j];
    if (sum === 0) continue;
    const inv = 1 / sum;
    for (let j = 0; j < d; j++) features[base + j] *= inv;
  }
}

function pyIntList(values: number[]): string {
  return `[${values.join(", ")}]`;
}

/** json.dumps(..., sort_keys=True) equivalent for the splits payload. */
export function splitsJson(splits: SplitIndices[]): string {
  const objects = splits.map(
    (s) =>
      `{"test": ${pyIntList(s.test)}, "train": ${pyIntList(s.train)}, ` +
      `"val": ${pyIntList(s.val)}}`,
  );
  return `[${objects.join(", ")}]\n`;
}

/** json.dumps(..., indent=2, sort_keys=True) equivalent for meta.json. */
export function metaJson(bundle: Bundle): string {
  const meta = {
    features_row_normalized: bundle.featuresRowNormalized,
    name: bundle.name,
    num_classes: bundle.numClasses,
    num_edges: bundle.edges.length / 2,
    num_features: bundle.featureDim,
    num_nodes: bundle.numNodes,
  };
  return JSON.stringify(meta, null, 2) + "\n";
}

function checkBundle(bundle: Bundle): void {
  const { numNodes: n, featureDim: d } = bundle;
  if (bundle.features.length !== n * d) {
    throw new DataError(`feature matrix has ${bundle.features.length} values, expected ${n * d}`);
  }
  if (bundle.labels.length !== n) {
    throw new DataError(`label vector has ${bundle.labels.length} entries for ${n} nodes`);
  }
  if (bundle.edges.length % 2 !== 0) {
    throw new DataError("edge list holds an odd number of endpoints");
  }
  for (const e of bundle.edges) {
    if (!Number.isInteger(e) || e < 0 || e >= n) {
      throw new DataError(`edge endpoint ${e} out of range for ${n} nodes`);
    }
    if (e >= 2 ** 32) throw new UsageError("edge endpoints exceed the u32 storage range");
  }
  for (const label of bundle.labels) {
    if (!Number.isInteger(label) || label < 0 || label >= bundle.numClasses) {
      throw new DataError(`label ${label} out of range for ${bundle.numClasses} classes`);
    }
    if (label >= 2 ** 16) throw new UsageError("labels exceed the u16 storage range");
  }
  for (const [si, split] of bundle.splits.entries()) {
    for (const part of [split.train, split.val, split.test]) {
      for (const idx of part) {
        if (!Number.isInteger(idx) || idx < 0 || idx >= n) {
          throw new DataError(`split ${si} references node ${idx}, out of range for ${n}`);
        }
      }
    }
  }
}

export function writeBundle(bundle: Bundle, outDir: string): void {
  checkBundle(bundle);
  fs.mkdirSync(outDir, { recursive: true });

  fs.writeFileSync(path.join(outDir, "meta.json"), metaJson(bundle));

  const edges = new Uint8Array(bundle.edges.length * 4);
  const edgeView = new DataView(edges.buffer);
  bundle.edges.forEach((e, i) => edgeView.setUint32(i * 4, e, true));
  fs.writeFileSync(path.join(outDir, "edges.bin"), edges);

  // setFloat32 rounds f64 -> f32 exactly like an astype cast.
  const feats = new Uint8Array(bundle.features.length * 4);
  const featView = new DataView(feats.buffer);
  bundle.features.forEach((v, i) => featView.setFloat32(i * 4, v, true));
  fs.writeFileSync(path.join(outDir, "features.bin"), feats);

  const labels = new Uint8Array(bundle.labels.length * 2);
  const labelView = new DataView(labels.buffer);
  bundle.labels.forEach((v, i) => labelView.setUint16(i * 2, v, true));
  fs.writeFileSync(path.join(outDir, "labels.bin"), labels);

  fs.writeFileSync(path.join(outDir, "splits.json"), splitsJson(bundle.splits));
}

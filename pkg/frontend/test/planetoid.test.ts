import * as fs from "node:fs";
import * as path from "node:path";
import { describe, expect, it } from "vitest";
import { DataError } from "../src/errors.js";
import { loadPlanetoid } from "../src/planetoid.js";
import { fixture, scratchCopy, scratchDir } from "./util.js";

function row(features: Float64Array, d: number, i: number): number[] {
  return [...features.subarray(i * d, (i + 1) * d)];
}

describe("tiny distribution", () => {
  const { bundle, notes } = loadPlanetoid(fixture("planetoid-tiny"), "tiny");

  it("derives the node count from the largest test id", () => {
    expect(bundle.numNodes).toBe(10);
    expect(bundle.featureDim).toBe(6);
    expect(bundle.numClasses).toBe(3);
  });

  it("scatters test rows to their absolute ids", () => {
    // tx rows arrive in file order 9, 7, 8
    expect(row(bundle.features, 6, 7)).toEqual([0.25, 0.25, 0, 0, 0.25, 0.25]);
    expect(row(bundle.features, 6, 8)).toEqual([0, 1, 0, 0, 0, 0]);
    expect(row(bundle.features, 6, 9)).toEqual([0, 0, 0.5, 0.5, 0, 0]);
  });

  it("row-normalizes and leaves all-zero rows alone", () => {
    expect(row(bundle.features, 6, 0)).toEqual([0.25, 0, 0.75, 0, 0, 0]);
    expect(row(bundle.features, 6, 6)).toEqual([0, 0, 0, 0, 0, 0]);
    expect(bundle.featuresRowNormalized).toBe(true);
  });

  it("takes labels from the one-hot rows", () => {
    expect(bundle.labels).toEqual([0, 1, 2, 0, 1, 2, 0, 2, 0, 1]);
  });

  it("dedupes the adjacency into sorted undirected pairs", () => {
    const pairs: number[][] = [];
    for (let i = 0; i < bundle.edges.length; i += 2) {
      pairs.push([bundle.edges[i], bundle.edges[i + 1]]);
    }
    expect(pairs).toEqual([
      [0, 1], [0, 2], [0, 9], [1, 3], [2, 4], [3, 5],
      [4, 6], [5, 5], [5, 7], [6, 8], [7, 9], [8, 9],
    ]);
    expect(notes.some((n) => n.includes("24 directed entries"))).toBe(true);
  });

  it("builds train/val/test from the stored layout", () => {
    expect(bundle.splits).toHaveLength(1);
    expect(bundle.splits[0].train).toEqual([0, 1, 2]);
    expect(bundle.splits[0].val).toEqual([3, 4, 5, 6]);
    expect(bundle.splits[0].test).toEqual([7, 8, 9]);
  });
});

describe("gappy distribution (id missing from test.index)", () => {
  const { bundle, notes } = loadPlanetoid(fixture("planetoid-gappy"), "gappy");

  it("keeps the skipped node with zero features and label 0", () => {
    expect(bundle.numNodes).toBe(11);
    expect(row(bundle.features, 5, 9)).toEqual([0, 0, 0, 0, 0]);
    expect(bundle.labels).toEqual([0, 1, 2, 0, 1, 2, 0, 1, 1, 0, 2]);
  });

  it("excludes the skipped node from the test split", () => {
    expect(bundle.splits[0].val).toEqual([3, 4, 5, 6, 7]);
    expect(bundle.splits[0].test).toEqual([8, 10]);
  });

  it("reports the gap", () => {
    expect(notes.some((n) => n.includes("skips 1 node id(s) [9]"))).toBe(true);
  });
});

describe("rejects broken distributions", () => {
  it("missing part file", () => {
    expect(() => loadPlanetoid(scratchDir("empty"), "tiny")).toThrow(/missing upstream file/);
  });

  it("repeated test id", () => {
    const dir = scratchCopy("dup", "planetoid-tiny");
    fs.writeFileSync(path.join(dir, "ind.tiny.test.index"), "9\n7\n7\n");
    expect(() => loadPlanetoid(dir, "tiny")).toThrow(DataError);
    expect(() => loadPlanetoid(dir, "tiny")).toThrow(/repeats node 7/);
  });

  it("test ids that do not start at the pool boundary", () => {
    const dir = scratchCopy("offset", "planetoid-tiny");
    fs.writeFileSync(path.join(dir, "ind.tiny.test.index"), "10\n8\n9\n");
    expect(() => loadPlanetoid(dir, "tiny")).toThrow(
      /pool has 7 rows but the smallest test id is 8/,
    );
  });

  it("test.index length disagreeing with tx", () => {
    const dir = scratchCopy("short", "planetoid-tiny");
    fs.writeFileSync(path.join(dir, "ind.tiny.test.index"), "7\n8\n");
    expect(() => loadPlanetoid(dir, "tiny")).toThrow(
      /test.index lists 2 nodes but tx\/ty hold 3\/3 rows/,
    );
  });
});

import * as fs from "node:fs";
import * as path from "node:path";
import { describe, expect, it } from "vitest";
import { convert } from "../src/convert.js";
import { DataError } from "../src/errors.js";
import { fixture, scratchDir } from "./util.js";

const BUNDLE_FILES = ["meta.json", "edges.bin", "features.bin", "labels.bin", "splits.json"];

function expectBytesMatch(outDir: string, goldenDir: string): void {
  for (const name of BUNDLE_FILES) {
    const got = fs.readFileSync(path.join(outDir, name));
    const want = fs.readFileSync(path.join(goldenDir, name));
    expect(got.equals(want), `${name} differs from the golden copy`).toBe(true);
  }
}

// The golden bundles were written by an independent implementation of the
// same transforms. Fixture feature rows sum to powers of two, so row
// normalization and the float32 narrowing are exact in either language and
// byte equality is a fair check.
describe("bundle output matches the golden copies byte for byte", () => {
  it("planetoid", () => {
    const out = scratchDir("conv-tiny");
    convert("planetoid", "tiny", fixture("planetoid-tiny"), out);
    expectBytesMatch(out, fixture("golden", "tiny"));
  });

  it("planetoid with a skipped node id", () => {
    const out = scratchDir("conv-gappy");
    convert("planetoid", "gappy", fixture("planetoid-gappy"), out);
    expectBytesMatch(out, fixture("golden", "gappy"));
  });

  it("geom-gcn", () => {
    const out = scratchDir("conv-web");
    convert("geom-gcn", "tinyweb", fixture("geomgcn-tinyweb"), out);
    expectBytesMatch(out, fixture("golden", "tinyweb"));
  });

  it("repeated runs agree", () => {
    const a = scratchDir("det-a");
    const b = scratchDir("det-b");
    convert("geom-gcn", "tinyweb", fixture("geomgcn-tinyweb"), a);
    convert("geom-gcn", "tinyweb", fixture("geomgcn-tinyweb"), b);
    for (const name of BUNDLE_FILES) {
      const first = fs.readFileSync(path.join(a, name));
      const second = fs.readFileSync(path.join(b, name));
      expect(first.equals(second), `${name} differs between runs`).toBe(true);
    }
  });
});

describe("registered statistics", () => {
  it("rejects a known name whose counts disagree", () => {
    const out = scratchDir("conv-mismatch");
    const attempt = () => convert("planetoid", "cora", fixture("planetoid-mismatch"), out);
    expect(attempt).toThrow(DataError);
    expect(attempt).toThrow(/nodes expected 2708, got 10/);
  });
});

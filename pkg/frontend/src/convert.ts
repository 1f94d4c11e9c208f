import { Bundle, writeBundle } from "./bundle.js";
import { DataError } from "./errors.js";
import { loadGeomGcn } from "./geomgcn.js";
import { loadPlanetoid } from "./planetoid.js";
import { ActualStats, checkStats } from "./stats.js";

export type SourceKind = "planetoid" | "geom-gcn";

export interface ConvertResult {
  bundle: Bundle;
  stats: ActualStats;
  notes: string[];
}

/**
 * Read one upstream dataset, check its statistics against the registry
 * when the name is a known benchmark, and write the bundle. The whole
 * pipeline is deterministic: converting the same input twice produces
 * byte-identical files.
 */
export function convert(
  kind: SourceKind,
  name: string,
  inDir: string,
  outDir: string,
): ConvertResult {
  let bundle: Bundle;
  let notes: string[];
  if (kind === "planetoid") {
    ({ bundle, notes } = loadPlanetoid(inDir, name));
  } else if (kind === "geom-gcn") {
    ({ bundle, notes } = loadGeomGcn(inDir, name));
  } else {
    throw new DataError(`unknown source kind ${JSON.stringify(kind)}`);
  }

  const stats: ActualStats = {
    nodes: bundle.numNodes,
    edges: bundle.edges.length / 2,
    features: bundle.featureDim,
    classes: bundle.numClasses,
  };
  checkStats(name, stats);
  writeBundle(bundle, outDir);
  return { bundle, stats, notes };
}

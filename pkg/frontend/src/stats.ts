/**
 * Registered statistics for the eight supported benchmark graphs.
 *
 * Edge counts for the three citation graphs accept two values: the number
 * quoted alongside the datasets historically (a raw citation-file line
 * count) and the unique undirected pair count actually recoverable from
 * the pickled distribution. The five webpage/Wikipedia graphs store their
 * edge files verbatim, so a single line count applies. This mirrors the
 * consumer package's registry exactly.
 */

import { DataError } from "./errors.js";

export interface DatasetStats {
  nodes: number;
  features: number;
  classes: number;
  edges: number[];
}

export const KNOWN_STATS: Record<string, DatasetStats> = {
  cora: { nodes: 2708, features: 1433, classes: 7, edges: [5429, 5278] },
  citeseer: { nodes: 3327, features: 3703, classes: 6, edges: [4732, 4552] },
  pubmed: { nodes: 19717, features: 500, classes: 3, edges: [44338, 44324] },
  cornell: { nodes: 183, features: 1703, classes: 5, edges: [295] },
  texas: { nodes: 183, features: 1703, classes: 5, edges: [309] },
  wisconsin: { nodes: 251, features: 1703, classes: 5, edges: [499] },
  chameleon: { nodes: 2277, features: 2325, classes: 5, edges: [36101] },
  squirrel: { nodes: 5201, features: 2089, classes: 5, edges: [198493] },
};

export interface ActualStats {
  nodes: number;
  edges: number;
  features: number;
  classes: number;
}

/**
 * Hard check against the registry. Unknown names pass (nothing to compare
 * against); known names must match every statistic.
 */
export function checkStats(name: string, actual: ActualStats): void {
  const expected = KNOWN_STATS[name];
  if (!expected) return;
  const problems: string[] = [];
  if (actual.nodes !== expected.nodes) {
    problems.push(`nodes expected ${expected.nodes}, got ${actual.nodes}`);
  }
  if (!expected.edges.includes(actual.edges)) {
    problems.push(`edges expected ${expected.edges.join(" or ")}, got ${actual.edges}`);
  }
  if (actual.features !== expected.features) {
    problems.push(`features expected ${expected.features}, got ${actual.features}`);
  }
  if (actual.classes !== expected.classes) {
    problems.push(`classes expected ${expected.classes}, got ${actual.classes}`);
  }
  if (problems.length) {
    throw new DataError(`dataset "${name}" statistics mismatch: ${problems.join("; ")}`);
  }
}

import { parseArgs } from "node:util";
import { convert, SourceKind } from "./convert.js";
import { ConvertError, UsageError } from "./errors.js";
import { KNOWN_STATS } from "./stats.js";

const USAGE = `usage: gpnet-convert convert --kind {planetoid,geom-gcn} --name <dataset> --in <dir> --out <dir>

Converts one upstream dataset distribution into a bundle directory
(meta.json, edges.bin, features.bin, labels.bin, splits.json).

Known dataset names are checked against their registered statistics:
${Object.keys(KNOWN_STATS).join(", ")}.`;

interface Io {
  out(line: string): void;
  err(line: string): void;
}

export function run(argv: string[], io: Io): number {
  try {
    if (argv.includes("--help") || argv.includes("-h")) {
      io.out(USAGE);
      return 0;
    }
    let parsed;
    try {
      parsed = parseArgs({
        args: argv,
        allowPositionals: true,
        options: {
          kind: { type: "string" },
          name: { type: "string" },
          in: { type: "string" },
          out: { type: "string" },
        },
      });
    } catch (exc) {
      throw new UsageError((exc as Error).message);
    }
    if (parsed.positionals.length !== 1 || parsed.positionals[0] !== "convert") {
      throw new UsageError("expected exactly one subcommand: convert");
    }
    const { kind, name, in: inDir, out: outDir } = parsed.values;
    for (const [flag, value] of Object.entries({ kind, name, in: inDir, out: outDir })) {
      if (!value) throw new UsageError(`--${flag} is required`);
    }
    if (kind !== "planetoid" && kind !== "geom-gcn") {
      throw new UsageError(`--kind must be planetoid or geom-gcn, not ${JSON.stringify(kind)}`);
    }

    const result = convert(kind as SourceKind, name!, inDir!, outDir!);
    io.out(
      `${name}: nodes=${result.stats.nodes} edges=${result.stats.edges} ` +
        `features=${result.stats.features} classes=${result.stats.classes} ` +
        `splits=${result.bundle.splits.length}`,
    );
    for (const note of result.notes) io.out(`note: ${note}`);
    if (name! in KNOWN_STATS) {
      io.out("registered statistics check passed");
    } else {
      io.out(`"${name}" has no registered statistics; counts not cross-checked`);
    }
    io.out(`wrote bundle: ${outDir}`);
    return 0;
  } catch (exc) {
    if (exc instanceof ConvertError) {
      io.err(`error: ${exc.message}`);
      return exc.exitCode;
    }
    throw exc;
  }
}

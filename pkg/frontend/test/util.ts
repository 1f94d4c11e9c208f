import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { fileURLToPath } from "node:url";

const here = path.dirname(fileURLToPath(import.meta.url));

export function fixture(...parts: string[]): string {
  return path.join(here, "fixtures", ...parts);
}

export function readFixture(...parts: string[]): Uint8Array {
  return new Uint8Array(fs.readFileSync(fixture(...parts)));
}

export function scratchDir(label: string): string {
  return fs.mkdtempSync(path.join(os.tmpdir(), `gpnet-convert-${label}-`));
}

/** Copy a fixture directory into a fresh scratch dir so a test can corrupt it. */
export function scratchCopy(label: string, ...parts: string[]): string {
  const dir = scratchDir(label);
  fs.cpSync(fixture(...parts), dir, { recursive: true });
  return dir;
}

/**
 * Process plumbing: every operation in this package delegates to the
 * installed `arapipe` executable through {@link runNative}.  Nothing in the
 * wrapper re-implements pipeline logic; it only shuttles bytes.
 */

import { spawnSync } from "node:child_process";

import { errorFromRun, FormatError, InternalError, IoError } from "./errors.js";

/** Stdout limit per native call; record files can be large. */
const MAX_BUFFER = 256 * 1024 * 1024;

/**
 * Resolve the native executable.  `ARAPIPE_BIN` overrides the PATH lookup so
 * test environments can pin a specific installation.
 */
export function nativeBinary(): string {
  return process.env.ARAPIPE_BIN ?? "arapipe";
}

/**
 * Run one native command and return its raw stdout bytes.
 *
 * @param args - argv after the executable name, e.g. `["segment", "--in", f]`.
 * @param input - optional bytes for the child's stdin.
 * @throws {ArapipeError} the typed equivalent of the native failure.
 */
export function runNative(args: string[], input?: string | Buffer): Buffer {
  const proc = spawnSync(nativeBinary(), args, { input, maxBuffer: MAX_BUFFER });
  if (proc.error !== undefined) {
    throw new IoError(
      `cannot run ${nativeBinary()}: ${proc.error.message}`,
      66,
    );
  }
  if (proc.status === null) {
    throw new InternalError(
      `${nativeBinary()} terminated by signal ${proc.signal}`,
      70,
    );
  }
  if (proc.status !== 0) {
    throw errorFromRun(proc.status, proc.stderr.toString("utf8"));
  }
  return proc.stdout;
}

/**
 * Run one native command and split its stdout into text lines.
 *
 * The native tools terminate every line with `\n`; the trailing empty
 * fragment is dropped so an empty stdout maps to an empty array.
 */
export function runNativeLines(args: string[], input?: string | Buffer): string[] {
  const text = runNative(args, input).toString("utf8");
  if (text === "") {
    return [];
  }
  const lines = text.split("\n");
  if (lines[lines.length - 1] === "") {
    lines.pop();
  }
  return lines;
}

/**
 * Parse a `name<TAB>value` report (the format every `stats`/`eval`/`train`
 * report uses) into a map of numeric rows.
 */
export function parseReport(lines: string[]): Record<string, number> {
  const rows: Record<string, number> = {};
  for (const line of lines) {
    const tab = line.indexOf("\t");
    if (tab <= 0) {
      throw new FormatError(`malformed report line: ${JSON.stringify(line)}`, 65);
    }
    const value = Number(line.slice(tab + 1));
    if (Number.isNaN(value)) {
      throw new FormatError(`non-numeric report value: ${JSON.stringify(line)}`, 65);
    }
    rows[line.slice(0, tab)] = value;
  }
  return rows;
}

/** Fetch one row from a parsed report, failing loudly if it is missing. */
export function requireRow(rows: Record<string, number>, name: string): number {
  const value = rows[name];
  if (value === undefined) {
    throw new InternalError(`report is missing the ${name} row`, 70);
  }
  return value;
}

/** Native library version, e.g. `"0.1.0"`, from `arapipe --version`. */
export function nativeVersion(): string {
  const out = runNative(["--version"]).toString("utf8").trim();
  const match = /^arapipe\s+(\S+)$/.exec(out);
  if (match === null) {
    throw new InternalError(`unexpected --version output: ${out}`, 70);
  }
  return match[1];
}

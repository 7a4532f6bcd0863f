/**
 * Typed exceptions mirroring the native error classes.
 *
 * Every failing native invocation prints one `error: <ErrorClass>: <message>`
 * line to stderr and exits with a BSD-style status code.  {@link errorFromRun}
 * converts that surface back into the matching exception class so callers can
 * catch `FormatError` and friends exactly as native callers do.
 */

/** Base class for everything this package throws. */
export class ArapipeError extends Error {
  /** Exit status of the native process (or the status that would apply). */
  readonly exitCode: number;

  constructor(message: string, exitCode: number) {
    super(message);
    this.name = new.target.name;
    this.exitCode = exitCode;
  }
}

/** Bad command line handed to the native executable (exit 64). */
export class UsageError extends ArapipeError {}

/** Invalid configuration value or combination (exit 64). */
export class ConfigError extends ArapipeError {}

/** Malformed input data: bad vocab line, bad ids, bad report rows (exit 65). */
export class FormatError extends ArapipeError {}

/** Parallel inputs that do not line up, e.g. token columns (exit 65). */
export class AlignmentError extends ArapipeError {}

/** No valid decode path under the given constraints (exit 65). */
export class DecodeError extends ArapipeError {}

/** Missing or unreadable file, or an unlaunchable executable (exit 66). */
export class IoError extends ArapipeError {}

/** Invariant breach in the native process or in this wrapper (exit 70). */
export class InternalError extends ArapipeError {}

type ErrorCtor = new (message: string, exitCode: number) => ArapipeError;

const BY_NAME: Record<string, ErrorCtor> = {
  UsageError,
  ConfigError,
  FormatError,
  AlignmentError,
  DecodeError,
};

const BY_EXIT: Record<number, ErrorCtor> = {
  64: ConfigError,
  65: FormatError,
  66: IoError,
};

const STDERR_LINE = /^error:\s*([A-Za-z_][A-Za-z0-9_]*):\s*(.*)$/m;

/**
 * Map a failed native run to the matching typed exception.
 *
 * The error class named on stderr wins; classes without a direct counterpart
 * (e.g. `FileNotFoundError` under exit 66) fall back to the class implied by
 * the exit code, and anything else becomes {@link InternalError}.
 */
export function errorFromRun(exitCode: number, stderr: string): ArapipeError {
  const match = STDERR_LINE.exec(stderr);
  if (match !== null) {
    const [, name, message] = match;
    const direct = BY_NAME[name];
    if (direct !== undefined) {
      return new direct(message, exitCode);
    }
    const byExit = BY_EXIT[exitCode];
    if (byExit !== undefined) {
      return new byExit(`${name}: ${message}`, exitCode);
    }
    return new InternalError(`${name}: ${message}`, exitCode);
  }
  const fallback = BY_EXIT[exitCode] ?? InternalError;
  return new fallback(stderr.trim() || `exit status ${exitCode}`, exitCode);
}

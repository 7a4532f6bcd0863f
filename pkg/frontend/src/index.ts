/**
 * TypeScript bindings for the `arapipe` CLI.
 *
 * Each export is a thin, stateless delegate to the native executable
 * (resolved from `ARAPIPE_BIN` or the PATH): segmentation and its inverse,
 * subword encode/decode through {@link BoundTokenizer}, pretraining-record
 * statistics, and the QA/NER evaluation reports, with native error classes
 * surfaced as typed exceptions.
 */

export {
  AlignmentError,
  ArapipeError,
  ConfigError,
  DecodeError,
  FormatError,
  InternalError,
  IoError,
  UsageError,
  errorFromRun,
} from "./errors.js";
export { nativeBinary, nativeVersion, runNative, runNativeLines } from "./runner.js";
export { boundDesegment } from "./marker.js";
export { boundSegment, boundSegmentAll } from "./segment.js";
export { BoundTokenizer } from "./tokenizer.js";
export type { Encoding, TokenizeMode } from "./tokenizer.js";
export {
  boundEvalNer,
  boundEvalQa,
  boundPretrainStats,
} from "./metrics.js";
export type { PretrainStatsOptions, QaScores } from "./metrics.js";

/**
 * Version of this binding package.  It must — and the test suite checks that
 * it does — match the native library version reported by `arapipe --version`
 * exactly.
 */
export const VERSION = "0.1.0";

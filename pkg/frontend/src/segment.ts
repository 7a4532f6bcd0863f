/**
 * Morphological segmentation through the native `segment` command.
 */

import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { ConfigError, InternalError } from "./errors.js";
import { runNative } from "./runner.js";

/**
 * Segment a batch of sentences in one native call.
 *
 * @param sentences - one single-line sentence per entry.
 * @param rules - rule table name (`"arabic"`, `"romanized"`) or a rule-file
 * path, handed through to `--rules`.
 * @returns the marker-format line for each input sentence, in order.
 */
export function boundSegmentAll(sentences: string[], rules = "arabic"): string[] {
  sentences.forEach((sentence, index) => {
    if (sentence.includes("\n")) {
      throw new ConfigError(
        `sentence ${index} contains a newline; segment one sentence per entry`,
        64,
      );
    }
  });
  const dir = mkdtempSync(join(tmpdir(), "arapipe-bind-"));
  try {
    const inFile = join(dir, "in.txt");
    const outFile = join(dir, "out.txt");
    writeFileSync(inFile, sentences.map((sentence) => sentence + "\n").join(""));
    runNative(["segment", "--in", inFile, "--out", outFile, "--rules", rules, "--quiet"]);
    const text = readFileSync(outFile, "utf8");
    const lines = text === "" ? [] : text.split("\n");
    if (lines[lines.length - 1] === "") {
      lines.pop();
    }
    if (lines.length !== sentences.length) {
      throw new InternalError(
        `expected ${sentences.length} segmented lines, got ${lines.length}`,
        70,
      );
    }
    return lines;
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

/**
 * Segment one sentence to marker format: `boundSegment("Alloga",
 * "romanized")` returns `"Al+ log +a"`.
 */
export function boundSegment(text: string, rules = "arabic"): string {
  return boundSegmentAll([text], rules)[0];
}

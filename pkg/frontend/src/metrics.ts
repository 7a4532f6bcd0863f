/**
 * Evaluation and record-audit reports through the native `eval` and
 * `pretrain stats` commands.
 */

import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { AlignmentError, ConfigError } from "./errors.js";
import { parseReport, requireRow, runNativeLines } from "./runner.js";

/** Mean exact-match and token-F1 over the evaluated predictions. */
export interface QaScores {
  readonly exactMatch: number;
  readonly f1: number;
}

function withTempDir<T>(body: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "arapipe-bind-"));
  try {
    return body(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function rejectNewlines(value: string, what: string): void {
  if (value.includes("\n")) {
    throw new ConfigError(`${what} must not contain newlines`, 64);
  }
}

/**
 * Score one extractive-QA prediction against its gold answers:
 * `boundEvalQa("sAn fransIskO", ["fI sAn fransIskO"])` returns
 * `{ exactMatch: 0, f1: 0.8 }`.
 */
export function boundEvalQa(pred: string, golds: readonly string[]): QaScores {
  rejectNewlines(pred, "prediction");
  golds.forEach((gold, index) => rejectNewlines(gold, `gold answer ${index}`));
  return withTempDir((dir) => {
    const predFile = join(dir, "pred.tsv");
    const goldFile = join(dir, "gold.tsv");
    writeFileSync(predFile, `q0\t0\t${pred}\n`);
    writeFileSync(goldFile, golds.map((gold) => `q0\t0\t${gold}\n`).join(""));
    const report = parseReport(
      runNativeLines(["eval", "qa", "--pred", predFile, "--gold", goldFile]),
    );
    return {
      exactMatch: requireRow(report, "exact_match"),
      f1: requireRow(report, "f1"),
    };
  });
}

function writeConll(
  path: string,
  tokens: readonly (readonly string[])[],
  tags: readonly (readonly string[])[],
  what: string,
): void {
  if (tokens.length !== tags.length) {
    throw new AlignmentError(
      `${tokens.length} token sentences vs ${tags.length} ${what} tag sentences`,
      65,
    );
  }
  const chunks: string[] = [];
  tokens.forEach((sentence, si) => {
    const sentenceTags = tags[si];
    if (sentence.length !== sentenceTags.length) {
      throw new AlignmentError(
        `sentence ${si}: ${sentence.length} tokens vs ${sentenceTags.length} ${what} tags`,
        65,
      );
    }
    sentence.forEach((token, ti) => {
      const tag = sentenceTags[ti];
      if (token.trim() === "" || tag.trim() === "" || /[\t\n]/.test(token + tag)) {
        throw new ConfigError(
          `sentence ${si}, token ${ti}: tokens and tags must be non-blank and tab-free`,
          64,
        );
      }
      chunks.push(`${token}\t${tag}\n`);
    });
    chunks.push("\n");
  });
  writeFileSync(path, chunks.join(""));
}

/**
 * Score IOB2 tag predictions against gold tags over the same token columns.
 *
 * @returns the full report: `<CLASS>_precision` / `_recall` / `_f1` per
 * class plus `macro_f1`.
 */
export function boundEvalNer(
  tokens: readonly (readonly string[])[],
  predTags: readonly (readonly string[])[],
  goldTags: readonly (readonly string[])[],
  level: "entity" | "token" = "entity",
): Record<string, number> {
  return withTempDir((dir) => {
    const predFile = join(dir, "pred.conll");
    const goldFile = join(dir, "gold.conll");
    writeConll(predFile, tokens, predTags, "predicted");
    writeConll(goldFile, tokens, goldTags, "gold");
    return parseReport(
      runNativeLines([
        "eval", "ner",
        "--pred", predFile,
        "--gold", goldFile,
        "--level", level,
      ]),
    );
  });
}

/** Optional knobs for {@link boundPretrainStats}. */
export interface PretrainStatsOptions {
  /** Masking probability the budget check audits against (native default 0.15). */
  readonly maskedLmProb?: number;
  /** Mask id override when the vocabulary layout is non-standard. */
  readonly maskId?: number;
}

/**
 * Audit a pretraining record file: example count, masking mix, budget
 * violations, and the not-next fraction, exactly as `pretrain stats` reports
 * them.
 */
export function boundPretrainStats(
  recordsPath: string,
  options: PretrainStatsOptions = {},
): Record<string, number> {
  const args = ["pretrain", "stats", recordsPath];
  if (options.maskedLmProb !== undefined) {
    args.push("--masked-lm-prob", String(options.maskedLmProb));
  }
  if (options.maskId !== undefined) {
    args.push("--mask-id", String(options.maskId));
  }
  return parseReport(runNativeLines(args));
}

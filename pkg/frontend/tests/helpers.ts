/**
 * Shared test plumbing: seeded fuzz-corpus generation and direct native
 * invocations that bypass the wrapper (the parity baselines).
 */

import { spawnSync } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export const ARABIC_ALPHABET = "ابتثجحخدذرزسشصضطظعغفقكلمنهوي";
export const ROMAN_ALPHABET = "abdfhiklmnqrstuwy";

/** Deterministic 32-bit PRNG (mulberry32), uniform on [0, 1). */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function randInt(rand: () => number, low: number, high: number): number {
  return low + Math.floor(rand() * (high - low + 1));
}

function makeWordTypes(
  rand: () => number,
  nTypes: number,
  alphabet: string,
  minLen: number,
  maxLen: number,
): string[] {
  const seen = new Set<string>();
  const out: string[] = [];
  while (out.length < nTypes) {
    const length = randInt(rand, minLen, maxLen);
    let word = "";
    for (let i = 0; i < length; i++) {
      word += alphabet[Math.floor(rand() * alphabet.length)];
    }
    if (!seen.has(word)) {
      seen.add(word);
      out.push(word);
    }
  }
  return out;
}

/** Whitespace-canonical sentences with Zipf-distributed word types. */
export function zipfSentences(
  seed: number,
  nSentences: number,
  nTypes: number,
  alphabet: string,
): string[] {
  const rand = mulberry32(seed);
  const types = makeWordTypes(rand, nTypes, alphabet, 2, 8);
  const cumulative: number[] = [];
  let total = 0;
  for (let rank = 1; rank <= nTypes; rank++) {
    total += 1 / rank;
    cumulative.push(total);
  }
  const drawType = (): string => {
    const target = rand() * total;
    let lo = 0;
    let hi = nTypes - 1;
    while (lo < hi) {
      const mid = (lo + hi) >> 1;
      if (cumulative[mid] < target) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    return types[lo];
  };
  const sentences: string[] = [];
  for (let i = 0; i < nSentences; i++) {
    const k = randInt(rand, 4, 11);
    const words: string[] = [];
    for (let j = 0; j < k; j++) {
      words.push(drawType());
    }
    sentences.push(words.join(" "));
  }
  return sentences;
}

export interface DirectResult {
  status: number | null;
  stdout: Buffer;
  stderr: string;
}

/** Raw native invocation with none of the wrapper's parsing or typing. */
export function runDirect(args: string[], input?: string | Buffer): DirectResult {
  const proc = spawnSync(process.env.ARAPIPE_BIN ?? "arapipe", args, {
    input,
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error !== undefined) {
    throw proc.error;
  }
  return { status: proc.status, stdout: proc.stdout, stderr: proc.stderr.toString("utf8") };
}

/** Fresh scratch directory for one test file. */
export function makeTempDir(): string {
  return mkdtempSync(join(tmpdir(), "arapipe-bind-test-"));
}

/**
 * Train a vocabulary on the given sentences through the native CLI (the
 * binding exposes no training on purpose) and return the vocab path.
 */
export function trainVocab(
  dir: string,
  sentences: string[],
  size: number,
  name = "vocab.tsv",
): string {
  const corpusFile = join(dir, "train-corpus.txt");
  writeFileSync(corpusFile, sentences.map((s) => s + "\n").join(""));
  const vocabFile = join(dir, name);
  const result = runDirect([
    "vocab", "train",
    "--in", corpusFile,
    "--out", vocabFile,
    "--size", String(size),
    "--unused", "10",
    "--seed", "1",
    "--quiet",
  ]);
  if (result.status !== 0) {
    throw new Error(`vocab train failed: ${result.stderr}`);
  }
  return vocabFile;
}

/** A vocabulary file with a valid layout, written by hand for error tests. */
export function writeMiniVocab(dir: string): string {
  const path = join(dir, "mini.tsv");
  const rows = [
    "[PAD]\t0.0",
    "[UNK]\t0.0",
    "[CLS]\t0.0",
    "[SEP]\t0.0",
    "[MASK]\t0.0",
    "▁a\t-1.0",
    "▁ab\t-1.5",
    "a\t-2.0",
    "b\t-2.0",
  ];
  writeFileSync(path, rows.map((row) => row + "\n").join(""));
  return path;
}

/**
 * Binding-parity suite: every exposed operation must reproduce the native
 * CLI byte-for-byte on a 1K-sentence fuzz corpus, and the wrapped QA metric
 * must reproduce the worked partial-overlap fixture exactly.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { beforeAll, describe, expect, it } from "vitest";

import {
  BoundTokenizer,
  boundDesegment,
  boundEvalNer,
  boundEvalQa,
  boundPretrainStats,
  boundSegmentAll,
} from "../src/index.js";
import {
  ARABIC_ALPHABET,
  makeTempDir,
  runDirect,
  trainVocab,
  zipfSentences,
} from "./helpers.js";

const N_SENTENCES = 1000;

let dir: string;
let corpus: string[];
let vocabPath: string;
let recordsPath: string;

function parseReportLines(stdout: Buffer): Record<string, number> {
  const rows: Record<string, number> = {};
  for (const line of stdout.toString("utf8").split("\n")) {
    if (line === "") {
      continue;
    }
    const tab = line.indexOf("\t");
    rows[line.slice(0, tab)] = Number(line.slice(tab + 1));
  }
  return rows;
}

beforeAll(() => {
  dir = makeTempDir();
  corpus = zipfSentences(97, N_SENTENCES, 300, ARABIC_ALPHABET);
  vocabPath = trainVocab(dir, corpus, 400);

  // A document-shaped copy of the corpus (blank line between documents)
  // feeds `pretrain build` for the record-statistics parity check.
  const docs: string[][] = [];
  for (let i = 0; i < corpus.length; i += 50) {
    docs.push(corpus.slice(i, i + 50));
  }
  const corpusFile = join(dir, "docs.txt");
  writeFileSync(corpusFile, docs.map((doc) => doc.join("\n")).join("\n\n") + "\n");
  recordsPath = join(dir, "examples.bin");
  const built = runDirect([
    "pretrain", "build",
    "--vocab", vocabPath,
    "--in", corpusFile,
    "--out", recordsPath,
    "--max-seq-len", "32",
    "--dup-factor", "2",
    "--seed", "34",
    "--quiet",
  ]);
  expect(built.status).toBe(0);
}, 180_000);

describe("segment parity", () => {
  it("matches the native CLI byte-for-byte and desegments back", () => {
    const wrapped = boundSegmentAll(corpus, "arabic");

    const inFile = join(dir, "seg-in.txt");
    const outFile = join(dir, "seg-out.txt");
    writeFileSync(inFile, corpus.map((s) => s + "\n").join(""));
    const direct = runDirect([
      "segment", "--in", inFile, "--out", outFile, "--rules", "arabic", "--quiet",
    ]);
    expect(direct.status).toBe(0);

    const wrappedBytes = Buffer.from(wrapped.map((line) => line + "\n").join(""));
    expect(wrappedBytes.equals(readFileSync(outFile))).toBe(true);

    expect(wrapped.some((line) => line.includes("+"))).toBe(true);
    wrapped.forEach((line, i) => {
      expect(boundDesegment(line)).toBe(corpus[i]);
    });
  });
});

describe("tokenize parity", () => {
  it("encode matches the native CLI byte-for-byte", () => {
    const tok = new BoundTokenizer(vocabPath);
    const encs = tok.encodeAll(corpus);

    const direct = runDirect(
      ["tokenize", "encode", "--vocab", vocabPath, "--quiet"],
      corpus.map((s) => s + "\n").join(""),
    );
    expect(direct.status).toBe(0);
    const wrappedBytes = Buffer.from(
      encs.map((enc) => enc.ids.join(" ") + "\n").join(""),
    );
    expect(wrappedBytes.equals(direct.stdout)).toBe(true);
  });

  it("decode matches the native CLI and inverts encode", () => {
    const tok = new BoundTokenizer(vocabPath);
    const encs = tok.encodeAll(corpus);
    encs.forEach((enc) => {
      expect(enc.pieces).not.toContain("[UNK]");
    });

    const idLines = encs.map((enc) => enc.ids.join(" ") + "\n").join("");
    const texts = tok.decodeAll(encs.map((enc) => enc.ids));
    const direct = runDirect(
      ["tokenize", "decode", "--vocab", vocabPath, "--quiet"],
      idLines,
    );
    expect(direct.status).toBe(0);
    const wrappedBytes = Buffer.from(texts.map((text) => text + "\n").join(""));
    expect(wrappedBytes.equals(direct.stdout)).toBe(true);

    expect(texts).toEqual(corpus);
  });

  it("attaches word ids that tile the input words", () => {
    const tok = new BoundTokenizer(vocabPath);
    const encs = tok.encodeAll(corpus);
    encs.forEach((enc, i) => {
      const nWords = corpus[i].split(" ").length;
      expect(enc.wordIds.length).toBe(enc.ids.length);
      expect(enc.wordIds[0]).toBe(0);
      expect(enc.wordIds[enc.wordIds.length - 1]).toBe(nWords - 1);
      for (let j = 1; j < enc.wordIds.length; j++) {
        const step = enc.wordIds[j] - enc.wordIds[j - 1];
        expect(step === 0 || step === 1).toBe(true);
      }
    });
  });
});

describe("eval parity", () => {
  it("per-instance QA scores aggregate to the native report", () => {
    const instances: { pred: string; golds: string[] }[] = [];
    for (let i = 0; i < 12; i++) {
      const words = corpus[i].split(" ");
      const gold = words.slice(0, 4).join(" ");
      let pred: string;
      if (i % 3 === 0) {
        pred = gold;
      } else if (i % 3 === 1) {
        pred = words.slice(1, 4).join(" ");
      } else {
        pred = corpus[i + 12].split(" ").slice(0, 3).join(" ");
      }
      const golds = i % 2 === 0 ? [gold] : [gold, words.slice(0, 5).join(" ")];
      instances.push({ pred, golds });
    }

    const singles = instances.map(({ pred, golds }) => boundEvalQa(pred, golds));

    const predFile = join(dir, "qa-pred.tsv");
    const goldFile = join(dir, "qa-gold.tsv");
    writeFileSync(
      predFile,
      instances.map(({ pred }, i) => `q${i}\t0\t${pred}\n`).join(""),
    );
    writeFileSync(
      goldFile,
      instances
        .map(({ golds }, i) => golds.map((gold) => `q${i}\t0\t${gold}\n`).join(""))
        .join(""),
    );
    const direct = runDirect(["eval", "qa", "--pred", predFile, "--gold", goldFile]);
    expect(direct.status).toBe(0);
    const report = parseReportLines(direct.stdout);

    const meanEm =
      singles.reduce((sum, scores) => sum + scores.exactMatch, 0) / singles.length;
    const meanF1 =
      singles.reduce((sum, scores) => sum + scores.f1, 0) / singles.length;
    expect(report.examples).toBe(instances.length);
    expect(meanEm).toBe(report.exact_match);
    expect(meanF1).toBe(report.f1);
  });

  it("returns (0, 0.8) for the partial-overlap fixture", () => {
    const scores = boundEvalQa("sAn fransIskO", ["fI sAn fransIskO"]);
    expect(scores.exactMatch).toBe(0);
    expect(scores.f1).toBe(0.8);
  });

  it("NER report matches the native CLI on fuzz tags", () => {
    const tokens = corpus.slice(0, 5).map((sentence) => sentence.split(" "));
    const classes = ["PER", "LOC", "ORG"];
    const tagFor = (si: number, ti: number, shift: number): string => {
      const roll = (si * 7 + ti * 3 + shift) % 5;
      if (roll === 0) {
        return `B-${classes[(si + ti + shift) % 3]}`;
      }
      if (roll === 1 && ti > 0) {
        return `I-${classes[(si + ti - 1 + shift) % 3]}`;
      }
      return "O";
    };
    const goldTags = tokens.map((sentence, si) =>
      sentence.map((_, ti) => tagFor(si, ti, 0)),
    );
    const predTags = tokens.map((sentence, si) =>
      sentence.map((_, ti) => tagFor(si, ti, 1)),
    );

    const wrapped = boundEvalNer(tokens, predTags, goldTags);

    const conll = (tags: string[][]): string =>
      tokens
        .map((sentence, si) =>
          sentence.map((token, ti) => `${token}\t${tags[si][ti]}\n`).join(""),
        )
        .join("\n");
    const predFile = join(dir, "ner-pred.conll");
    const goldFile = join(dir, "ner-gold.conll");
    writeFileSync(predFile, conll(predTags));
    writeFileSync(goldFile, conll(goldTags));
    const direct = runDirect(["eval", "ner", "--pred", predFile, "--gold", goldFile]);
    expect(direct.status).toBe(0);

    expect(wrapped).toEqual(parseReportLines(direct.stdout));
    expect(wrapped.macro_f1).toBeGreaterThanOrEqual(0);
    expect(wrapped.macro_f1).toBeLessThanOrEqual(1);
  });

  it("pretraining-record statistics match the native CLI", () => {
    const wrapped = boundPretrainStats(recordsPath);
    const direct = runDirect(["pretrain", "stats", recordsPath]);
    expect(direct.status).toBe(0);
    expect(wrapped).toEqual(parseReportLines(direct.stdout));
    expect(wrapped.examples).toBeGreaterThan(0);
    expect(wrapped.budget_violations).toBe(0);
  });
});

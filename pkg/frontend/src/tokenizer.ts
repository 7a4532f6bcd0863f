/**
 * Subword encoding/decoding through the native `tokenize` commands.
 */

import { readFileSync } from "node:fs";

import { ConfigError, FormatError, InternalError, IoError } from "./errors.js";
import { markerWordGroups, splitTokens } from "./marker.js";
import { runNativeLines } from "./runner.js";

/** Marker prepended to the piece that starts each surface word. */
const BOUNDARY = "▁"; // ▁

/**
 * One encoded sentence: subword pieces, their vocabulary ids, and for each
 * piece the index of the surface word it belongs to.
 */
export interface Encoding {
  readonly pieces: readonly string[];
  readonly ids: readonly number[];
  readonly wordIds: readonly number[];
}

/**
 * `"raw"` treats each whitespace token as a word; `"segmented"` expects
 * marker-format input and groups clitic tokens with their stem.
 */
export type TokenizeMode = "raw" | "segmented";

/**
 * Handle to one immutable, already-trained vocabulary plus a tokenize mode.
 *
 * The piece table is loaded once from the vocabulary file (the same
 * `piece<TAB>log_prob` TSV the native tools read); all encoding and decoding
 * delegates to the native executable.  Instances hold no mutable state, so
 * one tokenizer can serve concurrent readers.  Training a vocabulary is not
 * exposed here — use `arapipe vocab train`.
 */
export class BoundTokenizer {
  /** Path of the vocabulary file every native call reads. */
  readonly vocabPath: string;

  /** Tokenize mode passed to every native call. */
  readonly mode: TokenizeMode;

  private readonly pieces: readonly string[];
  private readonly index: ReadonlyMap<string, number>;
  private readonly unkId: number;

  constructor(vocabPath: string, mode: TokenizeMode = "raw") {
    if (mode !== "raw" && mode !== "segmented") {
      throw new ConfigError(`mode must be 'raw' or 'segmented', got '${mode}'`, 64);
    }
    let text: string;
    try {
      text = readFileSync(vocabPath, "utf8");
    } catch (err) {
      throw new IoError(
        `cannot read vocabulary ${vocabPath}: ${(err as Error).message}`,
        66,
      );
    }
    const lines = text.split("\n");
    if (lines[lines.length - 1] === "") {
      lines.pop();
    }
    const pieces: string[] = [];
    const index = new Map<string, number>();
    lines.forEach((line, lineno) => {
      const tab = line.indexOf("\t");
      if (tab <= 0) {
        throw new FormatError(
          `${vocabPath}:${lineno + 1}: expected 'piece<TAB>log_prob'`,
          65,
        );
      }
      const piece = line.slice(0, tab);
      index.set(piece, pieces.length);
      pieces.push(piece);
    });
    const unkId = index.get("[UNK]");
    if (unkId === undefined) {
      throw new FormatError(`${vocabPath}: vocabulary has no [UNK] row`, 65);
    }
    this.vocabPath = vocabPath;
    this.mode = mode;
    this.pieces = Object.freeze(pieces);
    this.index = index;
    this.unkId = unkId;
  }

  /** Total number of ids, reserved rows included. */
  get size(): number {
    return this.pieces.length;
  }

  /** Piece text for an id. @throws {FormatError} when out of range. */
  idToPiece(id: number): string {
    if (!Number.isInteger(id) || id < 0 || id >= this.pieces.length) {
      throw new FormatError(`id ${id} out of range [0, ${this.pieces.length})`, 65);
    }
    return this.pieces[id];
  }

  /** Id for a piece. @throws {FormatError} for unknown pieces. */
  pieceToId(piece: string): number {
    const id = this.index.get(piece);
    if (id === undefined) {
      throw new FormatError(`piece not in vocabulary: '${piece}'`, 65);
    }
    return id;
  }

  /** Encode one single-line sentence. */
  encode(text: string): Encoding {
    return this.encodeAll([text])[0];
  }

  /**
   * Encode a batch of sentences in one native call, preserving order.
   *
   * Ids come verbatim from the native encoder; pieces are looked up in the
   * loaded table, and word ids are attached by aligning the piece stream to
   * the input tokens (every surface word starts at a `▁` piece or an
   * `[UNK]`, which stands in for a whole word).
   */
  encodeAll(texts: string[]): Encoding[] {
    texts.forEach((text, index) => {
      if (text.includes("\n")) {
        throw new ConfigError(
          `text ${index} contains a newline; encode one sentence per entry`,
          64,
        );
      }
    });
    if (texts.length === 0) {
      return [];
    }
    const input = texts.map((text) => text + "\n").join("");
    const lines = runNativeLines(
      ["tokenize", "encode", "--vocab", this.vocabPath, "--mode", this.mode, "--quiet"],
      input,
    );
    if (lines.length !== texts.length) {
      throw new InternalError(
        `expected ${texts.length} encoded lines, got ${lines.length}`,
        70,
      );
    }
    return lines.map((line, index) => this.toEncoding(texts[index], line));
  }

  /** Decode one id sequence back to text. */
  decode(ids: readonly number[]): string {
    return this.decodeAll([ids])[0];
  }

  /** Decode a batch of id sequences in one native call, preserving order. */
  decodeAll(idLists: readonly (readonly number[])[]): string[] {
    idLists.forEach((ids, index) => {
      for (const id of ids) {
        if (!Number.isSafeInteger(id)) {
          throw new FormatError(`sequence ${index}: ids must be decimal integers`, 65);
        }
      }
    });
    if (idLists.length === 0) {
      return [];
    }
    const input = idLists.map((ids) => ids.join(" ") + "\n").join("");
    const lines = runNativeLines(
      ["tokenize", "decode", "--vocab", this.vocabPath, "--mode", this.mode, "--quiet"],
      input,
    );
    if (lines.length !== idLists.length) {
      throw new InternalError(
        `expected ${idLists.length} decoded lines, got ${lines.length}`,
        70,
      );
    }
    return lines;
  }

  private toEncoding(text: string, idLine: string): Encoding {
    const ids =
      idLine === ""
        ? []
        : idLine.split(" ").map((token) => {
            const id = Number(token);
            if (!Number.isInteger(id)) {
              throw new InternalError(`native encoder emitted non-integer id '${token}'`, 70);
            }
            return id;
          });
    const pieces = ids.map((id) => this.idToPiece(id));
    const tokens = splitTokens(text);
    const groups =
      this.mode === "segmented"
        ? markerWordGroups(tokens)
        : tokens.map((_, index) => index);
    const wordIds: number[] = [];
    let run = -1;
    for (let i = 0; i < pieces.length; i++) {
      if (ids[i] === this.unkId || pieces[i].startsWith(BOUNDARY)) {
        run += 1;
      }
      if (run < 0 || run >= groups.length) {
        throw new InternalError("piece stream does not align with input tokens", 70);
      }
      wordIds.push(groups[run]);
    }
    if (pieces.length > 0 && run !== groups.length - 1) {
      throw new InternalError("piece stream does not align with input tokens", 70);
    }
    return { pieces, ids, wordIds };
  }
}

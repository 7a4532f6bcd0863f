/**
 * Marker-format helpers.
 *
 * Segmented text tags clitics with `+`: prefixes end with it (`w+`, `Al+`)
 * and suffixes start with it (`+a`), so `"Alloga"` segments to
 * `"Al+ log +a"`.  The native CLI emits this format but exposes no inverse
 * verb, so the inverse lives here; it is pinned against the native output by
 * round-trip parity tests (`desegment(segment(s)) === s` on fuzz corpora).
 */

import { FormatError } from "./errors.js";

type MarkerKind = "prefix" | "suffix" | "plain";

/** Split on whitespace runs exactly like the native tokenizers do. */
export function splitTokens(text: string): string[] {
  return text.split(/\s+/u).filter((token) => token.length > 0);
}

function markerKind(token: string, index: number): MarkerKind {
  const starts = token.startsWith("+");
  const ends = token.endsWith("+");
  if (token === "+" || (starts && ends)) {
    throw new FormatError(`ambiguous marker token '${token}' at token ${index}`, 65);
  }
  if (ends) {
    return "prefix";
  }
  if (starts) {
    return "suffix";
  }
  return "plain";
}

/**
 * Map each marker-format token to the index of the surface word it belongs
 * to: a word is `[prefix...] stem [suffix...]`.
 *
 * @throws {FormatError} on structural violations — a suffix with no word to
 * attach to, a suffix directly after a prefix, or a prefix at the end.
 */
export function markerWordGroups(tokens: string[]): number[] {
  const groups: number[] = [];
  let word = -1;
  let openPrefix = false;
  tokens.forEach((token, index) => {
    const kind = markerKind(token, index);
    if (kind === "prefix") {
      if (!openPrefix) {
        word += 1;
      }
      groups.push(word);
      openPrefix = true;
    } else if (kind === "suffix") {
      if (openPrefix || word < 0) {
        throw new FormatError(`dangling suffix marker '${token}' at token ${index}`, 65);
      }
      groups.push(word);
    } else {
      if (!openPrefix) {
        word += 1;
      }
      groups.push(word);
      openPrefix = false;
    }
  });
  if (openPrefix) {
    throw new FormatError(`dangling prefix marker at token ${tokens.length - 1}`, 65);
  }
  return groups;
}

/**
 * Invert the marker format: strip the `+` markers and rejoin clitics to
 * their stems, so `"Al+ log +a"` becomes `"Alloga"`.
 */
export function boundDesegment(marked: string): string {
  const tokens = splitTokens(marked);
  const groups = markerWordGroups(tokens);
  const words: string[][] = [];
  tokens.forEach((token, index) => {
    const group = groups[index];
    if (group === words.length) {
      words.push([]);
    }
    const kind = markerKind(token, 0);
    if (kind === "prefix") {
      words[group].push(token.slice(0, -1));
    } else if (kind === "suffix") {
      words[group].push(token.slice(1));
    } else {
      words[group].push(token);
    }
  });
  return words.map((parts) => parts.join("")).join(" ");
}

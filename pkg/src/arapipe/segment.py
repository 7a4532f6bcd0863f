"""Rule-based light morphological pre-segmentation.

Words are split into ``prefixes + stem + suffixes`` with a small closed set
of clitic rules, and rendered in a marker format the rest of the pipeline
understands: prefixes carry a trailing ``+`` and suffixes a leading ``+``,
each as its own space-separated token, e.g. ``"w+ Al+ kitAb"``.  The format
is exactly invertible: :func:`desegment` restores the original text for any
input that does not itself contain marker-shaped tokens.

Two rule tables ship built in.  ``arabic`` fires only on tokens made purely
of Arabic letters, so numbers, punctuation carriers and genuine Latin words
pass through untouched.  ``romanized`` covers the common ASCII
transliteration scheme (backtick for ayn); it skips tokens without any
lowercase letter, so acronyms like ``NASA`` survive verbatim.

The strip order implements the usual positional grammar of Arabic clitics:

* at most one conjunction (w/f), word-initial only;
* at most one preposition (b/k/l), and only when the definite article
  follows — this is what keeps ``kitAb`` from losing its ``k``;
* the article ``Al`` at most once; or, when neither preposition nor article
  is present, the future marker ``s`` directly on the stem;
* at most one suffix, longest match first.

Every strip must leave a stem of at least two letters or it does not fire.
This is a light approximation, not a disambiguating analyzer: it exists to
shorten the long tail of surface forms ahead of subword training.
"""

from __future__ import annotations

from dataclasses import dataclass

from sklearn.base import BaseEstimator, TransformerMixin

from .errors import ConfigError, FormatError
from .validation import as_text_list

MIN_STEM_LETTERS = 2

#: Arabic letters (hamza through ya).
ARABIC_LETTERS = frozenset(chr(c) for c in range(0x0621, 0x064B))

_ROMAN_LOWER = frozenset("abcdefghijklmnopqrstuvwxyz")
_ROMAN_CHARS = _ROMAN_LOWER | frozenset(c.upper() for c in _ROMAN_LOWER) | {"`", "'"}

# Role inventory, both scripts.  Custom tables map their prefixes onto these
# roles by surface form; strings outside the inventory behave like articles.
_CONJUNCTIONS = {"w", "f", "و", "ف"}          # waw, fa
_PREPOSITIONS = {"b", "k", "l", "ب", "ك", "ل"}  # ba, kaf, lam
_ARTICLES = {"Al", "ال"}                      # alef+lam
_FUTURE = {"s", "س"}                               # sin


@dataclass(frozen=True)
class SegmentedWord:
    """One word split into clitic prefixes, a stem, and clitic suffixes."""

    prefixes: tuple[str, ...]
    stem: str
    suffixes: tuple[str, ...]

    def surface(self) -> str:
        """The unsegmented word."""
        return "".join(self.prefixes) + self.stem + "".join(self.suffixes)

    def tokens(self) -> list[str]:
        """Marker-format tokens, e.g. ``["Al+", "log", "+a"]``."""
        out = [p + "+" for p in self.prefixes]
        out.append(self.stem)
        out.extend("+" + s for s in self.suffixes)
        return out

    def render(self) -> str:
        return " ".join(self.tokens())


class RuleTable:
    """An ordered affix inventory plus the alphabet it applies to.

    ``prefixes`` and ``suffixes`` keep their given order; suffix matching
    tries rules in that order and built-in tables are sorted longest-first.
    """

    def __init__(self, prefixes: list[str], suffixes: list[str],
                 alphabet: frozenset[str], require_lowercase: bool = False,
                 name: str = "custom"):
        for affix in list(prefixes) + list(suffixes):
            if not affix:
                raise FormatError("empty affix in rule table")
        if len(set(prefixes)) != len(prefixes) or len(set(suffixes)) != len(suffixes):
            raise FormatError("duplicate rule in table")
        self.prefixes = list(prefixes)
        self.suffixes = list(suffixes)
        self.alphabet = alphabet
        self.require_lowercase = require_lowercase
        self.name = name
        self.conjunctions = [p for p in self.prefixes if p in _CONJUNCTIONS]
        self.prepositions = [p for p in self.prefixes if p in _PREPOSITIONS]
        self.future_markers = [p for p in self.prefixes if p in _FUTURE]
        self.articles = [p for p in self.prefixes
                         if p not in _CONJUNCTIONS and p not in _PREPOSITIONS
                         and p not in _FUTURE]

    def is_segmentable(self, word: str) -> bool:
        if not word or any(ch not in self.alphabet for ch in word):
            return False
        if self.require_lowercase and not any(ch in _ROMAN_LOWER for ch in word):
            return False
        return True

    def article_at(self, s: str) -> str | None:
        best = None
        for art in self.articles:
            if s.startswith(art) and (best is None or len(art) > len(best)):
                best = art
        return best

    @classmethod
    def from_file(cls, path: str, alphabet: frozenset[str] | None = None,
                  require_lowercase: bool = False) -> "RuleTable":
        """Parse ``P <affix>`` / ``S <affix>`` lines; order is significant.

        Blank lines and ``#`` comments are ignored.  The alphabet defaults to
        Arabic letters plus every character used by the rules themselves.
        """
        prefixes: list[str] = []
        suffixes: list[str] = []
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                parts = line.split(None, 1)
                if len(parts) != 2 or parts[0] not in ("P", "S"):
                    raise FormatError(
                        f"{path}:{lineno}: expected 'P <affix>' or 'S <affix>', got {raw!r}")
                if parts[0] == "P":
                    prefixes.append(parts[1])
                else:
                    suffixes.append(parts[1])
        if alphabet is None:
            alphabet = ARABIC_LETTERS | frozenset(
                ch for affix in prefixes + suffixes for ch in affix)
        return cls(prefixes, suffixes, alphabet,
                   require_lowercase=require_lowercase, name=path)


def _longest_first(affixes: list[str]) -> list[str]:
    return sorted(affixes, key=lambda a: -len(a))


#: Default table over Arabic script.
ARABIC_RULES = RuleTable(
    prefixes=[
        "و",         # waw (conjunction)
        "ف",         # fa (conjunction)
        "ب",         # ba (preposition)
        "ك",         # kaf (preposition)
        "ل",         # lam (preposition)
        "س",         # sin (future marker)
        "ال",   # alef+lam (definite article)
    ],
    suffixes=_longest_first([
        "ة",                 # ta marbuta
        "ات",           # alef+ta (-At)
        "ان",           # alef+nun (-An)
        "ون",           # waw+nun (-wn)
        "ين",           # ya+nun (-yn)
        "ه",                 # ha
        "ها",           # ha+alef (-hA)
        "هما",     # ha+mim+alef (-hmA)
        "هم",           # ha+mim (-hm)
        "هن",           # ha+nun (-hn)
        "ك",                 # kaf
        "كما",     # kaf+mim+alef (-kmA)
        "كم",           # kaf+mim (-km)
        "كن",           # kaf+nun (-kn)
        "ي",                 # ya
        "نا",           # nun+alef (-nA)
        "تم",           # ta+mim (-tm)
        "تن",           # ta+nun (-tn)
    ]),
    alphabet=ARABIC_LETTERS,
    name="arabic",
)

#: Table over the ASCII transliteration scheme (backtick = ayn).  Carries the
#: same inventory as the Arabic table; ta marbuta has two renderings there
#: ("T" and word-final "a"), so both appear as suffixes.
ROMANIZED_RULES = RuleTable(
    prefixes=["w", "f", "b", "k", "l", "s", "Al"],
    suffixes=_longest_first([
        "T", "At", "An", "wn", "yn", "h", "hA", "hmA", "hm", "hn",
        "k", "kmA", "km", "kn", "y", "nA", "tm", "tn", "a",
    ]),
    alphabet=frozenset(_ROMAN_CHARS),
    require_lowercase=True,
    name="romanized",
)

BUILTIN_RULES = {"arabic": ARABIC_RULES, "romanized": ROMANIZED_RULES}


def segment_word(word: str, rules: RuleTable | None = None) -> SegmentedWord:
    """Greedy staged strip of one word.  Non-alphabet words pass through."""
    if rules is None:
        rules = ARABIC_RULES
    if not rules.is_segmentable(word):
        return SegmentedWord((), word, ())

    rest = word
    prefixes: list[str] = []

    for conj in rules.conjunctions:
        if rest.startswith(conj) and len(rest) - len(conj) >= MIN_STEM_LETTERS:
            prefixes.append(conj)
            rest = rest[len(conj):]
            break

    took_preposition = False
    for prep in rules.prepositions:
        if rest.startswith(prep):
            after = rest[len(prep):]
            art = rules.article_at(after)
            if art and len(after) - len(art) >= MIN_STEM_LETTERS:
                prefixes.append(prep)
                rest = after
                took_preposition = True
                break

    art = rules.article_at(rest)
    if art and len(rest) - len(art) >= MIN_STEM_LETTERS:
        prefixes.append(art)
        rest = rest[len(art):]
    elif not took_preposition:
        for fut in rules.future_markers:
            if rest.startswith(fut) and len(rest) - len(fut) >= MIN_STEM_LETTERS:
                prefixes.append(fut)
                rest = rest[len(fut):]
                break

    suffixes: list[str] = []
    for suf in rules.suffixes:
        if rest.endswith(suf) and len(rest) - len(suf) >= MIN_STEM_LETTERS:
            suffixes.append(suf)
            rest = rest[:len(rest) - len(suf)]
            break

    return SegmentedWord(tuple(prefixes), rest, tuple(suffixes))


def segment_text_aligned(text: str,
                         rules: RuleTable | None = None,
                         ) -> tuple[str, list[int]]:
    """Segment whitespace-separated words; also return, for each output
    token, the index of the source word it came from."""
    tokens: list[str] = []
    word_map: list[int] = []
    for i, word in enumerate(text.split()):
        parts = segment_word(word, rules).tokens()
        tokens.extend(parts)
        word_map.extend([i] * len(parts))
    return " ".join(tokens), word_map


def segment_text(text: str, rules: RuleTable | None = None) -> str:
    return segment_text_aligned(text, rules)[0]


def _marker_kind(token: str, index: int) -> str:
    starts = token.startswith("+")
    ends = token.endswith("+")
    if len(token) == 1 and token == "+" or (starts and ends):
        raise FormatError(f"ambiguous marker token {token!r} at token {index}")
    if ends:
        return "prefix"
    if starts:
        return "suffix"
    return "plain"


def marker_word_groups(tokens: list[str]) -> list[int]:
    """Map each marker-format token to the index of the word it belongs to.

    Raises :class:`FormatError` on structural violations: a suffix with no
    word to attach to, a suffix directly after a prefix, or a prefix at the
    end of the input.
    """
    groups: list[int] = []
    word = -1
    open_prefix = False
    for idx, tok in enumerate(tokens):
        kind = _marker_kind(tok, idx)
        if kind == "prefix":
            if not open_prefix:
                word += 1
            groups.append(word)
            open_prefix = True
        elif kind == "suffix":
            if open_prefix or word < 0:
                raise FormatError(f"dangling suffix marker {tok!r} at token {idx}")
            groups.append(word)
        else:
            if not open_prefix:
                word += 1
            groups.append(word)
            open_prefix = False
    if open_prefix:
        raise FormatError(f"dangling prefix marker at token {len(tokens) - 1}")
    return groups


def desegment(marked: str) -> str:
    """Invert the marker format: strip markers, rejoin clitics to stems."""
    tokens = marked.split()
    groups = marker_word_groups(tokens)
    words: list[list[str]] = []
    for tok, g in zip(tokens, groups):
        if g == len(words):
            words.append([])
        kind = _marker_kind(tok, 0)
        if kind == "prefix":
            words[g].append(tok[:-1])
        elif kind == "suffix":
            words[g].append(tok[1:])
        else:
            words[g].append(tok)
    return " ".join("".join(parts) for parts in words)


def resolve_rules(rules) -> RuleTable:
    """Accept a table name, a RuleTable, or None (-> arabic default)."""
    if rules is None:
        return ARABIC_RULES
    if isinstance(rules, RuleTable):
        return rules
    if isinstance(rules, str):
        try:
            return BUILTIN_RULES[rules]
        except KeyError:
            raise ConfigError(
                f"unknown rule table {rules!r}; built-ins: {sorted(BUILTIN_RULES)}")
    raise ConfigError(f"rules must be a name or RuleTable, got {type(rules).__name__}")


class MorphSegmenter(TransformerMixin, BaseEstimator):
    """Transformer from plain sentences to marker-format sentences.

    ``transform`` segments; ``inverse_transform`` restores the original
    text.  With ``passthrough=True`` the input is treated as already
    segmented: transform only validates marker structure and returns the
    sentences unchanged.
    """

    def __init__(self, rules="arabic", passthrough: bool = False):
        self.rules = rules
        self.passthrough = passthrough

    def fit(self, X, y=None):
        resolve_rules(self.rules)
        return self

    def transform(self, X) -> list[str]:
        table = resolve_rules(self.rules)
        out = []
        for sent in as_text_list(X):
            if self.passthrough:
                marker_word_groups(sent.split())
                out.append(sent)
            else:
                out.append(segment_text(sent, table))
        return out

    def inverse_transform(self, X) -> list[str]:
        return [desegment(sent) for sent in as_text_list(X)]

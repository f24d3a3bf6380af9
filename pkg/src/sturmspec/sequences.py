"""Symbolic sequence generators and the Toeplitz block algebra.

Three families of potentials are produced here: codings of circle
rotations by a half-open arc, Toeplitz words built by composing periodic
partial words, and sparse barrier sequences.  Symbols are stored as small
integer codes (numpy ``int16``); code ``-1`` marks the undetermined cell
of a partial word.  Everything is immutable after construction, so values
can be shared freely across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

HOLE = "?"

__all__ = [
    "HOLE",
    "ValidationError",
    "WindowTooShortError",
    "UndeterminedSiteError",
    "PartitionError",
    "AmbiguousPartitionError",
    "Alphabet",
    "Window",
    "PartialWord",
    "CodingTriple",
    "compose",
    "compose_triples",
    "CircleMapSpec",
    "circle_map_window",
    "ToeplitzSpec",
    "toeplitz_window",
    "blocks",
    "blocks_str",
    "PartitionView",
    "k_partition",
    "SparseSpec",
    "sparse_window",
]


class ValidationError(ValueError):
    """A spec or argument violates a documented invariant."""


class WindowTooShortError(ValidationError):
    """Window cannot support the requested operation.

    ``required`` carries the minimal sufficient length (or denominator),
    so callers can retry with a larger window.
    """

    def __init__(self, message: str, required: Optional[int] = None):
        super().__init__(message)
        self.required = required


class UndeterminedSiteError(ValidationError):
    """A window touches a cell that no finite composition depth determines."""

    def __init__(self, message: str, site: int):
        super().__init__(message)
        self.site = site


class PartitionError(ValidationError):
    """No legal block alignment exists for the given window."""


class AmbiguousPartitionError(PartitionError):
    """More than one alignment residue tiles the window legally."""

    def __init__(self, message: str, residues: Sequence[int]):
        super().__init__(message)
        self.residues = tuple(residues)


def _as_fraction(x) -> Fraction:
    """Exact conversion; floats convert via their binary expansion."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, tuple):
        return Fraction(x[0], x[1])
    return Fraction(x)


# ---------------------------------------------------------------------------
# Alphabet and windows
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Alphabet:
    """Ordered symbol labels together with their real coupling values."""

    symbols: tuple
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(str(s) for s in self.symbols))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.symbols) != len(set(self.symbols)):
            raise ValidationError("alphabet labels must be distinct")
        if HOLE in self.symbols:
            raise ValidationError("the hole label %r is reserved" % HOLE)
        if len(self.symbols) != len(self.values):
            raise ValidationError("one value per symbol required")
        if not self.symbols:
            raise ValidationError("alphabet must not be empty")
        for v in self.values:
            if not math.isfinite(v):
                raise ValidationError("coupling values must be finite")

    def __len__(self):
        return len(self.symbols)

    def code(self, label: str) -> int:
        try:
            return self.symbols.index(label)
        except ValueError:
            raise ValidationError(
                "symbol %r not in alphabet %r" % (label, self.symbols)
            ) from None

    def value(self, label: str) -> float:
        return self.values[self.code(label)]

    def value_table(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)

    def other(self, label: str) -> str:
        """The complementary letter of a two-letter alphabet."""
        if len(self.symbols) != 2:
            raise ValidationError("other() requires a two-letter alphabet")
        a, b = self.symbols
        return b if label == a else a


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Window:
    """A finite view of a sequence, anchored at an absolute start index."""

    start: int
    codes: np.ndarray
    alphabet: Alphabet

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int16)
        if codes.ndim != 1 or codes.size == 0:
            raise ValidationError("window must be a non-empty 1-d symbol array")
        if codes.min() < 0 or codes.max() >= len(self.alphabet):
            raise ValidationError("window entries must be drawn from the alphabet")
        object.__setattr__(self, "codes", _freeze(codes))

    def __len__(self):
        return len(self.codes)

    @property
    def end(self) -> int:
        """One past the last site."""
        return self.start + len(self.codes)

    def index_of(self, site: int) -> int:
        if not (self.start <= site < self.end):
            raise ValidationError(
                "site %d outside window [%d, %d)" % (site, self.start, self.end)
            )
        return site - self.start

    def code_at(self, site: int) -> int:
        return int(self.codes[self.index_of(site)])

    def symbol_at(self, site: int) -> str:
        return self.alphabet.symbols[self.code_at(site)]

    @property
    def symbols(self) -> tuple:
        return tuple(self.alphabet.symbols[c] for c in self.codes)

    def values(self) -> np.ndarray:
        return self.alphabet.value_table()[self.codes]

    def slice(self, lo: int, hi: int) -> "Window":
        """Sub-window over absolute sites [lo, hi)."""
        if not (self.start <= lo < hi <= self.end):
            raise ValidationError("slice [%d, %d) outside window" % (lo, hi))
        return Window(lo, self.codes[lo - self.start : hi - self.start], self.alphabet)

    def reflected(self) -> "Window":
        """The window read backwards around site 0: entry at n becomes entry at -n."""
        return Window(-(self.end - 1), self.codes[::-1], self.alphabet)


# ---------------------------------------------------------------------------
# Partial words and composition
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartialWord:
    """A periodic symbol map with at most one undetermined residue class.

    ``codes[hole_offset]`` is -1 when ``hole_offset`` is set; a fully
    determined word has ``hole_offset is None`` and no -1 cells.
    """

    period: int
    codes: np.ndarray
    alphabet: Alphabet
    hole_offset: Optional[int]

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int16)
        if self.period < 1 or codes.shape != (self.period,):
            raise ValidationError("cells must have exactly `period` entries")
        holes = np.flatnonzero(codes < 0)
        if self.hole_offset is None:
            if holes.size:
                raise ValidationError("fully determined word cannot contain holes")
        else:
            if not (0 <= self.hole_offset < self.period):
                raise ValidationError("hole offset out of range")
            if holes.size != 1 or holes[0] != self.hole_offset:
                raise ValidationError("exactly one hole per period, at hole_offset")
        if codes.size and codes.max() >= len(self.alphabet):
            raise ValidationError("cell codes exceed alphabet")
        object.__setattr__(self, "codes", _freeze(codes))

    @classmethod
    def from_cells(cls, cells: Sequence[str], alphabet: Alphabet) -> "PartialWord":
        codes = np.empty(len(cells), dtype=np.int16)
        hole = None
        for i, c in enumerate(cells):
            if c == HOLE:
                if hole is not None:
                    raise ValidationError("more than one hole per period")
                hole = i
                codes[i] = -1
            else:
                codes[i] = alphabet.code(c)
        return cls(len(cells), codes, alphabet, hole)

    @classmethod
    def identity(cls, alphabet: Alphabet) -> "PartialWord":
        """The all-hole period-1 word, the neutral element of composition."""
        return cls(1, np.array([-1], dtype=np.int16), alphabet, 0)

    @property
    def cells(self) -> tuple:
        return tuple(
            HOLE if c < 0 else self.alphabet.symbols[c] for c in self.codes
        )

    def at(self, x: int) -> int:
        """Code at absolute position x (periodic); -1 for the hole class."""
        return int(self.codes[x % self.period])

    def is_determined(self) -> bool:
        return self.hole_offset is None


def compose(outer: PartialWord, inner: PartialWord) -> PartialWord:
    """Fill the undetermined residue class of ``outer`` with ``inner``.

    Position x of the result reads ``outer(x)`` off the hole class and
    ``inner((x - l) / n)`` on it, where n is the outer period and l its
    hole offset.  The result period is the product of the two periods and
    the operation is associative.
    """
    if outer.alphabet != inner.alphabet:
        raise ValidationError("composition requires a shared alphabet")
    if outer.hole_offset is None:
        raise ValidationError("outer word is fully determined; nothing to fill")
    n, l = outer.period, outer.hole_offset
    m = inner.period
    period = n * m
    codes = np.tile(outer.codes, m).astype(np.int16)
    codes[l::n] = inner.codes
    if inner.hole_offset is None:
        hole = None
    else:
        hole = l + n * inner.hole_offset
    return PartialWord(period, codes, outer.alphabet, hole)


@dataclass(frozen=True)
class CodingTriple:
    """A periodic partial word described by (pattern, period, offset).

    Cells at offset+1 .. offset+period-1 (mod period) spell the pattern;
    the cell at the offset class is the hole.  Period 1 is the identity
    word with an empty pattern.
    """

    pattern: tuple
    period: int
    offset: int

    def __post_init__(self):
        object.__setattr__(self, "pattern", tuple(str(s) for s in self.pattern))
        if self.period < 1:
            raise ValidationError("period must be >= 1")
        if len(self.pattern) != self.period - 1:
            raise ValidationError("pattern length must equal period - 1")
        if not (0 <= self.offset < self.period):
            raise ValidationError("offset must lie in [0, period)")
        if HOLE in self.pattern:
            raise ValidationError("pattern may not contain the hole label")

    def to_partial(self, alphabet: Alphabet) -> PartialWord:
        codes = np.full(self.period, -1, dtype=np.int16)
        for i, sym in enumerate(self.pattern, start=1):
            codes[(self.offset + i) % self.period] = alphabet.code(sym)
        return PartialWord(self.period, codes, alphabet, self.offset)

    def constant_letter(self) -> Optional[str]:
        """The single letter of a constant pattern, if any (period >= 2)."""
        letters = set(self.pattern)
        if len(letters) == 1:
            return next(iter(letters))
        return None


def compose_triples(first: CodingTriple, second: CodingTriple) -> CodingTriple:
    """Composition of two coding triples, again a coding triple.

    The merged word has period n1*n2, offset l1 + n1*l2, and pattern
    p1 q1 p1 q2 ... p1 q_{n2-1} p1 (pattern p1 interleaved with the
    letters of pattern q).  Period-1 operands act as identities.
    """
    if first.period == 1:
        return second
    if second.period == 1:
        return first
    p1 = first.pattern
    merged = []
    for q in second.pattern:
        merged.extend(p1)
        merged.append(q)
    merged.extend(p1)
    return CodingTriple(
        tuple(merged), first.period * second.period,
        first.offset + first.period * second.offset,
    )


# ---------------------------------------------------------------------------
# Circle map sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CircleMapSpec:
    """Coding of the rotation n -> n*p/q + theta by the arc [1-beta, 1).

    ``(p, q)`` is a continued-fraction convergent standing in for an
    irrational rotation number; arc membership is decided in exact
    rational arithmetic so boundary points never misclassify.  Symbol "1"
    carries the coupling ``lam``, symbol "0" carries zero.
    """

    p: int
    q: int
    beta: Fraction
    theta: Fraction
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "beta", _as_fraction(self.beta))
        object.__setattr__(self, "theta", _as_fraction(self.theta))
        object.__setattr__(self, "lam", float(self.lam))
        if self.q < 1 or math.gcd(self.p, self.q) != 1:
            raise ValidationError("alpha = p/q must be in lowest terms")
        if not (0 < Fraction(self.p, self.q) < 1):
            raise ValidationError("alpha must lie in (0, 1)")
        if not (0 < self.beta < 1):
            raise ValidationError("beta must lie strictly inside (0, 1)")
        if not (0 <= self.theta < 1):
            raise ValidationError("theta must lie in [0, 1)")
        if self.lam == 0.0:
            raise ValidationError("lambda must be nonzero")

    @property
    def alphabet(self) -> Alphabet:
        return Alphabet(("0", "1"), (0.0, self.lam))

    def window(self, start: int, length: int, allow_periodic: bool = False) -> Window:
        return circle_map_window(self, start, length, allow_periodic=allow_periodic)


def circle_map_window(
    spec: CircleMapSpec, start: int, length: int, allow_periodic: bool = False
) -> Window:
    """Window [start, start+length) of the circle-map coding.

    Requires q > length + |start| so the window cannot wrap around the
    rational period of the convergent; pass ``allow_periodic=True`` to
    sample the periodic convergent word anyway (complexity estimates on
    moderate windows are insensitive to the difference).
    """
    if length < 1:
        raise ValidationError("window length must be >= 1")
    needed = length + abs(start)
    if spec.q <= needed and not allow_periodic:
        raise WindowTooShortError(
            "convergent denominator %d too small for window [%d, %d); "
            "need q > %d (or pass allow_periodic=True)"
            % (spec.q, start, start + length, needed),
            required=needed + 1,
        )
    bnum, bden = spec.beta.numerator, spec.beta.denominator
    tnum, tden = spec.theta.numerator, spec.theta.denominator
    # residue of n*alpha + theta as a fraction over D = q*tden; the arc test
    # r >= 1 - beta becomes r_num * bden >= D * (bden - bnum) in integers.
    D = spec.q * tden
    thresh = D * (bden - bnum)
    n = np.arange(start, start + length, dtype=object)
    rnum = (n * (spec.p * tden) + tnum * spec.q) % D
    inside = np.array([int(r) * bden >= thresh for r in rnum], dtype=bool)
    codes = inside.astype(np.int16)
    return Window(start, codes, spec.alphabet)


# ---------------------------------------------------------------------------
# Toeplitz specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ToeplitzSpec:
    """A Toeplitz word given as a prefix triple composed with a simple tail.

    The tail is a list of (letter, period, offset) levels; with
    ``cycle=True`` (the default) the list repeats indefinitely, giving an
    infinite coding.  Consecutive tail letters must differ, and after
    normalization every tail period is >= 3: period-2 levels are legal
    only in non-cycling specs, where the leading run up to the last
    period-2 level is absorbed into the prefix via triple composition
    (the generated word is unchanged).

    ``extension_letter`` fills the single everywhere-undetermined site
    when the offsets leave one; without it, windows touching that site
    raise :class:`UndeterminedSiteError`.
    """

    alphabet: Alphabet
    prefix: CodingTriple
    tail_letters: tuple
    tail_periods: tuple
    tail_offsets: tuple
    cycle: bool = True
    extension_letter: Optional[str] = None

    def __post_init__(self):
        if len(self.alphabet) != 2:
            raise ValidationError("Toeplitz specs use a two-letter alphabet")
        letters = tuple(str(x) for x in self.tail_letters)
        periods = tuple(int(x) for x in self.tail_periods)
        offsets = tuple(int(x) for x in self.tail_offsets)
        if not (len(letters) == len(periods) == len(offsets)):
            raise ValidationError("tail letter/period/offset lists must align")
        if not letters:
            raise ValidationError("tail must contain at least one level")
        for a in letters:
            self.alphabet.code(a)
        for sym in self.prefix.pattern:
            self.alphabet.code(sym)
        for n, l in zip(periods, offsets):
            if n < 2:
                raise ValidationError("tail periods must be >= 2")
            if not (0 <= l < n):
                raise ValidationError("tail offsets must lie in [0, period)")

        prefix = self.prefix
        if any(n == 2 for n in periods):
            if self.cycle:
                raise ValidationError(
                    "a cycling tail cannot contain period-2 levels; merge them "
                    "first or construct with cycle=False"
                )
            cut = max(i for i, n in enumerate(periods) if n == 2) + 1
            for a, n, l in zip(letters[:cut], periods[:cut], offsets[:cut]):
                prefix = compose_triples(
                    prefix, CodingTriple((a,) * (n - 1), n, l)
                )
            letters, periods, offsets = letters[cut:], periods[cut:], offsets[cut:]
            if not letters:
                raise ValidationError(
                    "normalization absorbed the whole tail; supply at least one "
                    "period->=3 level after the last period-2 level"
                )

        pairs = zip(letters, letters[1:] + ((letters[0],) if self.cycle else ()))
        for a, b in pairs:
            if a == b:
                raise ValidationError("consecutive tail letters must differ")
        if self.extension_letter is not None:
            if self.extension_letter not in letters:
                raise ValidationError(
                    "extension letter must recur in the tail coding"
                )
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "tail_letters", letters)
        object.__setattr__(self, "tail_periods", periods)
        object.__setattr__(self, "tail_offsets", offsets)

    # -- level access (1-indexed, cycling if enabled) -----------------------

    def max_level(self) -> float:
        return math.inf if self.cycle else len(self.tail_letters)

    def _tail_index(self, k: int) -> int:
        if k < 1:
            raise ValidationError("tail levels are 1-indexed")
        if self.cycle:
            return (k - 1) % len(self.tail_letters)
        if k > len(self.tail_letters):
            raise ValidationError(
                "tail exhausted at level %d (%d levels declared, cycle=False)"
                % (k, len(self.tail_letters))
            )
        return k - 1

    def tail_letter(self, k: int) -> str:
        return self.tail_letters[self._tail_index(k)]

    def tail_period(self, k: int) -> int:
        return self.tail_periods[self._tail_index(k)]

    def tail_offset(self, k: int) -> int:
        return self.tail_offsets[self._tail_index(k)]

    def coding_triple(self, k: int) -> CodingTriple:
        a, n, l = self.tail_letter(k), self.tail_period(k), self.tail_offset(k)
        return CodingTriple((a,) * (n - 1), n, l)

    def block_length(self, k: int) -> int:
        ell = self.prefix.period
        for j in range(1, k + 1):
            ell *= self.tail_period(j)
        return ell

    def hole_position(self, depth: int) -> int:
        """Absolute offset of the undetermined class after `depth` levels."""
        pos = self.prefix.offset
        stride = self.prefix.period
        for j in range(1, depth + 1):
            pos += stride * self.tail_offset(j)
            stride *= self.tail_period(j)
        return pos

    def composed(self, depth: int) -> PartialWord:
        return _composed_partial(self, depth)

    def window(self, start: int, length: int) -> Window:
        """Window at the smallest depth whose period exceeds the length."""
        depth, period = 0, self.prefix.period
        while period <= length:
            depth += 1
            try:
                period *= self.tail_period(depth)
            except ValidationError:
                raise WindowTooShortError(
                    "declared tail too shallow for a window of length %d; "
                    "period reaches only %d" % (length, period),
                    required=length + 1,
                ) from None
        return toeplitz_window(self, depth, start, length)

    def coupling_values(self) -> tuple:
        return self.alphabet.values


@lru_cache(maxsize=128)
def _composed_partial(spec: ToeplitzSpec, depth: int) -> PartialWord:
    word = spec.prefix.to_partial(spec.alphabet)
    for k in range(1, depth + 1):
        word = compose(word, spec.coding_triple(k).to_partial(spec.alphabet))
    return word


def _resolve_site(spec: ToeplitzSpec, x: int) -> int:
    """Symbol code at site x of the limit word, or raise if undetermined.

    Walks the coding one level at a time: a site off the current hole
    class is decided there; otherwise descend into the next level.  The
    descent state shrinks geometrically, so on cycling specs a repeated
    state proves the site is the everywhere-undetermined position.
    """
    prefix = spec.prefix.to_partial(spec.alphabet)
    if x % prefix.period != prefix.hole_offset:
        return prefix.at(x)
    j = (x - spec.prefix.offset) // prefix.period
    seen = set()
    k = 1
    while True:
        if not spec.cycle and k > len(spec.tail_letters):
            raise UndeterminedSiteError(
                "site %d still undetermined after the declared %d levels"
                % (x, len(spec.tail_letters)),
                site=x,
            )
        n, l = spec.tail_period(k), spec.tail_offset(k)
        if (j - l) % n != 0:
            return spec.alphabet.code(spec.tail_letter(k))
        j = (j - l) // n
        if spec.cycle and -2 <= j <= 2:
            state = (j, (k - 1) % len(spec.tail_letters))
            if state in seen:
                if spec.extension_letter is None:
                    raise UndeterminedSiteError(
                        "site %d is the everywhere-undetermined position; "
                        "declare an extension_letter to fill it" % x,
                        site=x,
                    )
                return spec.alphabet.code(spec.extension_letter)
            seen.add(state)
        k += 1


def toeplitz_window(spec: ToeplitzSpec, depth: int, start: int, length: int) -> Window:
    """Window [start, start+length) read from the depth-level composition.

    Requires the composed period to exceed the window length; at most one
    cell then sits on the undetermined class, and it is resolved by
    descending further (or by the extension letter at the limit).
    """
    if length < 1:
        raise ValidationError("window length must be >= 1")
    word = spec.composed(depth)
    if word.period <= length:
        raise WindowTooShortError(
            "depth %d gives period %d <= window length %d; increase depth"
            % (depth, word.period, length),
            required=length + 1,
        )
    idx = np.arange(start, start + length) % word.period
    codes = word.codes[idx].astype(np.int16)
    for pos in np.flatnonzero(codes < 0):
        codes[pos] = _resolve_site(spec, start + int(pos))
    return Window(start, codes, spec.alphabet)


# ---------------------------------------------------------------------------
# Building blocks s_k / t_k and the k-partition
# ---------------------------------------------------------------------------


def blocks(spec: ToeplitzSpec, k: int, budget: int = 10**7):
    """The level-k building blocks (s_k, t_k) as code arrays.

    s_0 is the prefix pattern followed by the first tail letter, t_0 the
    same with the other letter; one level up, s_k repeats s_{k-1} one time
    fewer than the period and appends t_{k-1}, while t_k is the pure
    power.  Both have length prefix_period * n_1 * ... * n_k and differ
    exactly in their last symbol.
    """
    if k < 0:
        raise ValidationError("block level must be >= 0")
    if spec.block_length(k) > budget:
        raise ValidationError(
            "block length %d exceeds budget %d" % (spec.block_length(k), budget)
        )
    a1 = spec.tail_letter(1)
    base = [spec.alphabet.code(sym) for sym in spec.prefix.pattern]
    s = np.array(base + [spec.alphabet.code(a1)], dtype=np.int16)
    t = np.array(base + [spec.alphabet.code(spec.alphabet.other(a1))], dtype=np.int16)
    for j in range(1, k + 1):
        n = spec.tail_period(j)
        s_new = np.concatenate([np.tile(s, n - 1), t])
        t_new = np.tile(s, n)
        s, t = s_new, t_new
    return _freeze(s), _freeze(t)


def blocks_str(spec: ToeplitzSpec, k: int):
    s, t = blocks(spec, k)
    syms = spec.alphabet.symbols
    return "".join(syms[c] for c in s), "".join(syms[c] for c in t)


@dataclass(frozen=True)
class PartitionView:
    """The unique tiling of a window by level-k blocks.

    Block starts are congruent to ``residue`` mod the block length; labels
    are "s"/"t" per block.  ``gaps`` lists the number of s-blocks between
    consecutive t-blocks strictly inside the window.
    """

    level: int
    block_len: int
    residue: int
    starts: np.ndarray
    labels: tuple
    gaps: tuple

    def __post_init__(self):
        object.__setattr__(self, "starts", _freeze(np.asarray(self.starts)))

    def block_containing(self, site: int):
        """(start, label, index) of the full block covering the site."""
        i = int(np.searchsorted(self.starts, site, side="right")) - 1
        if i < 0 or site >= int(self.starts[i]) + self.block_len:
            raise PartitionError(
                "site %d not covered by a full level-%d block" % (site, self.level)
            )
        return int(self.starts[i]), self.labels[i], i

    def label(self, index: int) -> Optional[str]:
        if 0 <= index < len(self.labels):
            return self.labels[index]
        return None


def k_partition(
    window: Window,
    spec: ToeplitzSpec,
    k: int,
    refine_from: Optional[PartitionView] = None,
) -> PartitionView:
    """Recover the level-k block tiling of a window by exhaustive alignment.

    Every residue class mod the block length is tried; full blocks must
    equal s_k or t_k and edge fragments must match the shared prefix of
    the two blocks.  Exactly one residue may survive: zero legal residues
    means the window is not a slice of the subshift, two or more raise an
    ambiguity error rather than silently picking one.

    ``refine_from`` may carry the (unique) level-(k-1) view; level-k
    block starts are then necessarily level-(k-1) starts, which cuts the
    residue search from block_length(k) candidates down to the level-k
    period, without weakening the legality or uniqueness checks among
    the surviving candidates.
    """
    s, t = blocks(spec, k)
    ell = len(s)
    n_next = spec.tail_period(k + 1)
    min_len = (4 * n_next + 2) * ell
    if len(window) < min_len:
        raise WindowTooShortError(
            "window length %d cannot pin a level-%d alignment; need >= %d"
            % (len(window), k, min_len),
            required=min_len,
        )
    if refine_from is not None:
        if refine_from.level != k - 1:
            raise ValidationError("refine_from must be the level-(k-1) view")
        base = refine_from.residue % refine_from.block_len
        candidates = [
            (base + j * refine_from.block_len) % ell
            for j in range(spec.tail_period(k))
        ]
    else:
        candidates = range(ell)
    codes = window.codes
    w = len(codes)
    common = s[:-1]
    legal = []
    for r in candidates:
        off = (r - window.start) % ell
        nfull = (w - off) // ell
        if nfull < 2:
            continue
        body = codes[off : off + nfull * ell].reshape(nfull, ell)
        is_s = np.all(body == s, axis=1)
        is_t = np.all(body == t, axis=1)
        if not np.all(is_s | is_t):
            continue
        # left fragment is the tail of a block: its non-final part must
        # match the shared prefix; the final symbol is free (s vs t).
        if off > 1 and not np.array_equal(codes[: off - 1], common[ell - off :]):
            continue
        rest = w - off - nfull * ell
        if rest > 0 and not np.array_equal(
            codes[off + nfull * ell :], common[:rest]
        ):
            continue
        legal.append((r, off, nfull, is_t))
    if not legal:
        raise PartitionError(
            "no legal level-%d alignment: window is not a subshift slice" % k
        )
    if len(legal) > 1:
        raise AmbiguousPartitionError(
            "multiple legal alignments at level %d" % k,
            residues=[r for r, *_ in legal],
        )
    r, off, nfull, is_t = legal[0]
    starts = window.start + off + ell * np.arange(nfull)
    labels = tuple("t" if flag else "s" for flag in is_t)
    t_idx = np.flatnonzero(is_t)
    gaps = tuple(int(b - a - 1) for a, b in zip(t_idx, t_idx[1:]))
    return PartitionView(
        level=k,
        block_len=ell,
        residue=(window.start + off) % ell,
        starts=starts,
        labels=labels,
        gaps=gaps,
    )


# ---------------------------------------------------------------------------
# Sparse sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SparseSpec:
    """One-sided sparse barrier sequence: value v at positions n_k, else 0.

    Positions must grow faster than doubling (n_{k+1} > 2 n_k >= 1).  They
    are given either explicitly or by a rule: ``("power", b)`` places
    barriers at b, b^2, b^3, ... (b >= 3), and ``("factorial_gaps", n1)``
    grows gaps as max(k!, n_k + 1) so the doubling constraint always
    holds and the gaps are eventually exactly factorial.  Negative sites
    of a two-sided extension take ``left_fill``.
    """

    v: float
    positions: Optional[tuple] = None
    rule: Optional[tuple] = None
    left_fill: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "v", float(self.v))
        object.__setattr__(self, "left_fill", float(self.left_fill))
        if self.v == 0.0:
            raise ValidationError("barrier value v must be nonzero")
        if (self.positions is None) == (self.rule is None):
            raise ValidationError("give exactly one of positions= or rule=")
        if self.positions is not None:
            pos = tuple(int(n) for n in self.positions)
            if not pos or pos[0] < 1:
                raise ValidationError("positions must start at >= 1")
            for a, b in zip(pos, pos[1:]):
                if not b > 2 * a:
                    raise ValidationError(
                        "growth rule violated: need n_{k+1} > 2 n_k, got %d after %d"
                        % (b, a)
                    )
            object.__setattr__(self, "positions", pos)
        else:
            kind = self.rule[0]
            if kind == "power":
                base = int(self.rule[1])
                if base < 3:
                    raise ValidationError(
                        "power rule needs base >= 3 to satisfy n_{k+1} > 2 n_k"
                    )
                object.__setattr__(self, "rule", ("power", base))
            elif kind == "factorial_gaps":
                n1 = int(self.rule[1])
                if n1 < 1:
                    raise ValidationError("factorial_gaps rule needs n_1 >= 1")
                object.__setattr__(self, "rule", ("factorial_gaps", n1))
            else:
                raise ValidationError("unknown sparse rule %r" % (kind,))

    def positions_upto(self, limit: int) -> tuple:
        """All barrier positions <= limit, in increasing order."""
        return tuple(self._iter_positions(lambda n, k: n > limit))

    def position_list(self, count: int) -> tuple:
        """The first `count` barrier positions."""
        return tuple(self._iter_positions(lambda n, k: k > count))

    def _iter_positions(self, stop):
        out = []
        if self.positions is not None:
            for k, n in enumerate(self.positions, start=1):
                if stop(n, k):
                    break
                out.append(n)
            return out
        kind = self.rule[0]
        if kind == "power":
            base = self.rule[1]
            n, k = base, 1
            while not stop(n, k):
                out.append(n)
                k += 1
                n *= base
        else:
            n, k = self.rule[1], 1
            while not stop(n, k):
                out.append(n)
                n = max(2 * n + 1, n + math.factorial(k))
                k += 1
        return out

    def gaps(self, count: int) -> tuple:
        pos = self.position_list(count + 1)
        return tuple(b - a for a, b in zip(pos, pos[1:]))

    @property
    def alphabet(self) -> Alphabet:
        if self.left_fill == 0.0:
            return Alphabet(("0", "v"), (0.0, self.v))
        return Alphabet(("0", "v", "L"), (0.0, self.v, self.left_fill))

    def window(self, start: int, length: int) -> Window:
        return sparse_window(self, start, length)


def sparse_window(spec: SparseSpec, start: int, length: int) -> Window:
    """Window of the sparse word; sites <= 0 take the two-sided left fill."""
    if length < 1:
        raise ValidationError("window length must be >= 1")
    end = start + length
    codes = np.zeros(length, dtype=np.int16)
    if start <= 0 and spec.left_fill != 0.0:
        codes[: min(length, 1 - start)] = 2
    for n in spec.positions_upto(max(end - 1, 0)):
        if start <= n < end:
            codes[n - start] = 1
    return Window(start, codes, spec.alphabet)

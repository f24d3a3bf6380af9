"""Block complexity p(n) and maximal pattern complexity p*(n) on finite
windows, plus the complexity-based classification tests.

Both estimators are lower bounds for the infinite-word quantities: a
finite window can only miss patterns, never invent them.  Counting packs
sampled symbol tuples into integer keys and deduplicates with
``np.unique``; when the key range would overflow, rows fall back to a
byte-view comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .sequences import (
    SparseSpec,
    ValidationError,
    Window,
    WindowTooShortError,
    sparse_window,
)

__all__ = [
    "PatternTemplate",
    "ComplexityReport",
    "block_complexity",
    "max_pattern_complexity",
    "complexity_report",
    "periodicity_test",
    "PeriodicityVerdict",
    "find_period",
    "two_sided_complexity_report",
    "nonrecurrent_extension_test",
]

EXHAUSTIVE_N = 5
EXHAUSTIVE_TMAX = 60
TEMPLATE_BUDGET = 500_000
DEFAULT_BEAM = 64


@dataclass(frozen=True)
class PatternTemplate:
    """Strictly increasing sampling offsets starting at 0."""

    offsets: tuple

    def __post_init__(self):
        offs = tuple(int(t) for t in self.offsets)
        if not offs or offs[0] != 0:
            raise ValidationError("first offset must be 0")
        if any(b <= a for a, b in zip(offs, offs[1:])):
            raise ValidationError("offsets must be strictly increasing")
        object.__setattr__(self, "offsets", offs)

    def __len__(self):
        return len(self.offsets)

    @property
    def span(self) -> int:
        return self.offsets[-1]


def _distinct_count(codes: np.ndarray, offsets: Sequence[int], radix: int) -> int:
    span = offsets[-1]
    m = len(codes) - span
    if m <= 0:
        return 0
    if radix ** len(offsets) < 2**62:
        key = np.zeros(m, dtype=np.int64)
        for t in offsets:
            key *= radix
            key += codes[t : t + m]
        return len(np.unique(key))
    cols = np.stack([codes[t : t + m] for t in offsets], axis=1).astype(np.int16)
    return len(np.unique(cols.view([("", np.int16)] * cols.shape[1])))


def block_complexity(window: Window, n: int) -> int:
    """Number of distinct contiguous length-n factors of the window."""
    if n < 1:
        raise ValidationError("factor length must be >= 1")
    if n > len(window):
        raise ValidationError(
            "factor length %d exceeds window length %d" % (n, len(window))
        )
    return _distinct_count(window.codes, tuple(range(n)), len(window.alphabet))


def _class_ids(codes: np.ndarray, offsets, radix: int, m: int) -> np.ndarray:
    """Integer ids of the sampled patterns at positions 0..m-1."""
    if radix ** len(offsets) < 2**62:
        key = np.zeros(m, dtype=np.int64)
        for t in offsets:
            key *= radix
            key += codes[t : t + m]
    else:
        cols = np.stack([codes[t : t + m] for t in offsets], axis=1).astype(np.int16)
        key = cols.view([("", np.int16)] * cols.shape[1]).ravel()
    _, ids = np.unique(key, return_inverse=True)
    return ids.astype(np.int64)


def _beam_profile(codes, radix: int, n_max: int, t_max: int, beam_width: int):
    """Best (count, offsets) per pattern length 2..n_max in one growth pass.

    Partial templates carry dense integer ids of their sampled patterns
    over the common position range; an extension's distinct count is then
    a bincount over ids*radix + shifted symbols, vectorized across all
    admissible extension offsets at once.
    """
    m = len(codes) - t_max
    windows = np.lib.stride_tricks.sliding_window_view(codes, m)  # row t = codes[t:t+m]
    ids0 = _class_ids(codes, (0,), radix, m)
    beam = [((0,), ids0, int(ids0.max()) + 1)]
    best = {}
    for level in range(2, n_max + 1):
        candidates = []
        for offs, ids, u in beam:
            lo = offs[-1] + 1
            if lo > t_max:
                continue
            K = u * radix
            keys = ids * np.int64(radix) + windows[lo : t_max + 1]
            T = keys.shape[0]
            keys = keys + (np.arange(T, dtype=np.int64) * K)[:, None]
            bc = np.bincount(keys.ravel(), minlength=T * K)
            counts = (bc.reshape(T, K) > 0).sum(axis=1)
            for i in range(T):
                candidates.append((int(counts[i]), offs + (lo + i,), offs, lo + i))
        if not candidates:
            break
        candidates.sort(key=lambda c: (-c[0], c[1]))
        best[level] = (candidates[0][0], candidates[0][1])
        new_beam = []
        by_parent = {offs: (ids, u) for offs, ids, u in beam}
        for cnt, offs, parent, t in candidates[:beam_width]:
            ids, u = by_parent[parent]
            key = ids * np.int64(radix) + codes[t : t + m]
            _, new_ids = np.unique(key, return_inverse=True)
            new_beam.append((offs, new_ids.astype(np.int64), cnt))
        beam = new_beam
    return best


def max_pattern_complexity(
    window: Window,
    n: int,
    t_max: int,
    beam_width: int = DEFAULT_BEAM,
    mode: str = "auto",
    template_budget: int = TEMPLATE_BUDGET,
):
    """Estimated p*(n): max distinct sampled n-tuples over offset templates.

    Searches templates 0 = tau_0 < ... < tau_{n-1} <= t_max.  Small
    problems (n <= 5, t_max <= 60) are searched exhaustively; larger ones
    grow the template one offset at a time, keeping the ``beam_width``
    best partial templates by distinct-pattern count (ties broken
    lexicographically, so the result is deterministic).  The contiguous
    template is always evaluated too, so the estimate never drops below
    the block-complexity estimate.  Returns (count, template).
    """
    profile = pstar_profile(
        window, n, t_max, beam_width=beam_width, mode=mode,
        template_budget=template_budget,
    )
    return profile[n - 1]


def pstar_profile(
    window: Window,
    n_max: int,
    t_max: int,
    beam_width: int = DEFAULT_BEAM,
    mode: str = "auto",
    template_budget: int = TEMPLATE_BUDGET,
):
    """(count, template) estimates for every pattern length 1..n_max."""
    if n_max < 1:
        raise ValidationError("pattern length must be >= 1")
    if t_max < n_max - 1:
        raise ValidationError("t_max must allow n strictly increasing offsets")
    if len(window) <= t_max:
        raise WindowTooShortError(
            "window length %d leaves no sampling positions for t_max=%d"
            % (len(window), t_max),
            required=t_max + 1,
        )
    codes = window.codes
    radix = len(window.alphabet)
    out = [( _distinct_count(codes, (0,), radix), PatternTemplate((0,)) )]
    if n_max == 1:
        return out

    exhaustive = mode == "exhaustive" or (
        mode == "auto" and n_max <= EXHAUSTIVE_N and t_max <= EXHAUSTIVE_TMAX
    )
    if exhaustive:
        for n in range(2, n_max + 1):
            total = math.comb(t_max, n - 1)
            if total > template_budget:
                raise ValidationError(
                    "exhaustive search over %d templates exceeds the budget %d; "
                    "use mode='beam'" % (total, template_budget)
                )
            best, best_offs = -1, None
            for rest in combinations(range(1, t_max + 1), n - 1):
                offs = (0,) + rest
                cnt = _distinct_count(codes, offs, radix)
                if cnt > best or (cnt == best and offs < best_offs):
                    best, best_offs = cnt, offs
            out.append((best, PatternTemplate(best_offs)))
        return out

    found = _beam_profile(codes, radix, n_max, t_max, beam_width)
    for n in range(2, n_max + 1):
        _, offs = found.get(n, (-1, None))
        # re-count the winner over its own maximal position range, so
        # counts are comparable with the contiguous (block) estimate
        cnt = -1 if offs is None else _distinct_count(codes, offs, radix)
        contiguous = tuple(range(n))
        cnt_c = _distinct_count(codes, contiguous, radix)
        if cnt_c > cnt:
            cnt, offs = cnt_c, contiguous
        out.append((cnt, PatternTemplate(offs)))
    return out


@dataclass(frozen=True)
class ComplexityReport:
    """p(n) and p*(n) estimates over a range of n, with parameters."""

    n_range: tuple
    p_values: tuple
    pstar_values: tuple
    templates: tuple
    window_len: int
    window_start: int
    t_max: int
    position_range: tuple

    def __post_init__(self):
        # the contiguous template is always in the p* search space, so a
        # p estimate above the p* estimate means the estimator is broken;
        # monotonicity in n, by contrast, only holds when the window
        # dwarfs n and is checked by tests in that regime
        for n, p, ps in zip(self.n_range, self.p_values, self.pstar_values):
            if p > ps:
                raise ValidationError(
                    "p(%d)=%d exceeds p*(%d)=%d; estimator invariant broken"
                    % (n, p, n, ps)
                )

    def as_dict(self):
        return {
            "n": list(self.n_range),
            "p": list(self.p_values),
            "pstar": list(self.pstar_values),
            "template": [list(t.offsets) for t in self.templates],
            "window_len": self.window_len,
            "window_start": self.window_start,
            "t_max": self.t_max,
            "position_range": list(self.position_range),
        }

    def rows(self):
        return [
            (n, p, ps, " ".join(str(o) for o in t.offsets))
            for n, p, ps, t in zip(
                self.n_range, self.p_values, self.pstar_values, self.templates
            )
        ]


def complexity_report(
    window: Window,
    n_max: int,
    t_max: int,
    beam_width: int = DEFAULT_BEAM,
    mode: str = "auto",
) -> ComplexityReport:
    ns = tuple(range(1, n_max + 1))
    profile = pstar_profile(window, n_max, t_max, beam_width=beam_width, mode=mode)
    ps, stars, temps = [], [], []
    for n in ns:
        ps.append(block_complexity(window, n))
        cnt, tpl = profile[n - 1]
        stars.append(cnt)
        temps.append(tpl)
    return ComplexityReport(
        n_range=ns,
        p_values=tuple(ps),
        pstar_values=tuple(stars),
        templates=tuple(temps),
        window_len=len(window),
        window_start=window.start,
        t_max=t_max,
        position_range=(window.start, window.end - t_max),
    )


# ---------------------------------------------------------------------------
# Classification tests
# ---------------------------------------------------------------------------


def find_period(window: Window) -> Optional[int]:
    """Smallest exact period of the window contents, if any below len/2."""
    codes = window.codes
    for p in range(1, len(codes) // 2 + 1):
        if np.array_equal(codes[p:], codes[:-p]):
            return p
    return None


@dataclass(frozen=True)
class PeriodicityVerdict:
    kind: str  # "periodic-evidence" | "aperiodic-evidence"
    n_witness: Optional[int]
    p_values: tuple
    pstar_at_least_2n: bool

    def __str__(self):
        if self.kind == "periodic-evidence":
            return "periodic-evidence(%d)" % self.n_witness
        return "aperiodic-evidence"


def periodicity_test(window: Window, n_max: int, t_max: Optional[int] = None) -> PeriodicityVerdict:
    """Periodicity evidence from p(n) <= n, plus the two-sided p* >= 2n check.

    A word is periodic exactly when p(n) <= n for some n; on a finite
    window this yields evidence, not proof, in the aperiodic direction.
    """
    if len(window) < 4 * n_max:
        raise WindowTooShortError(
            "window of length %d is short for n_max=%d" % (len(window), n_max),
            required=4 * n_max,
        )
    t_max = t_max if t_max is not None else min(2 * n_max, len(window) // 4)
    ps = []
    witness = None
    for n in range(1, n_max + 1):
        p = block_complexity(window, n)
        ps.append(p)
        if witness is None and p <= n:
            witness = n
    cap_ok = True
    for n in range(1, n_max + 1):
        cnt, _ = max_pattern_complexity(window, n, t_max)
        if cnt < 2 * n:
            cap_ok = False
            break
    if witness is not None:
        return PeriodicityVerdict("periodic-evidence", witness, tuple(ps), cap_ok)
    return PeriodicityVerdict("aperiodic-evidence", None, tuple(ps), cap_ok)


@dataclass(frozen=True)
class ExtensionComplexityRow:
    n: int
    p_estimate: int
    threshold: int
    exceeds: bool


def two_sided_complexity_report(window: Window, j: int, probes: Sequence[int]):
    """Block complexity of a two-sided window against the 2n + j threshold."""
    rows = []
    for n in sorted(set(int(n) for n in probes)):
        if n > len(window) - 1:
            raise WindowTooShortError(
                "probe n=%d too large for window of length %d" % (n, len(window)),
                required=n + 1,
            )
        p = block_complexity(window, n)
        rows.append(ExtensionComplexityRow(n, p, 2 * n + j, p > 2 * n + j))
    return tuple(rows)


def nonrecurrent_extension_test(
    spec: SparseSpec, j: int, n_probe: Sequence[int], depth: int = 6
):
    """Two-sided-extension complexity rows for a sparse word.

    The window spans [-max(n_probe), n_depth + max(n_probe)] with the
    left half filled by the extension, so factors crossing the boundary
    as well as the rightmost barrier context are all visible.
    """
    n_max = max(n_probe)
    hi = spec.position_list(depth)[-1] + n_max + 1
    window = sparse_window(spec, -n_max, hi + n_max)
    return two_sided_complexity_report(window, j, n_probe)

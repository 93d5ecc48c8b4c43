"""Prefix codes for blocks of independent identical coin flips.

A block of L bits drawn iid Bernoulli(p) has 2**L outcomes but only
L + 1 distinct probabilities, one per number of ones.  The block-code
builder therefore runs the classic smallest-two-merge construction on
weight classes instead of individual outcomes: a heap entry is a whole
family of subtrees sharing one value and one shape, so the construction
for L = 1024 finishes in a few million heap events instead of 2**1024.

Family values are exact big integers at a fixed binary scale with 64
guard bits.  A truncated family value of c outcomes is below the exact
one by less than c, while the value itself is at least c * 2**64 by the
choice of scale, so merge decisions can deviate from exact-value
decisions only between families equal to within relative 2**-63; that
cannot move the expected length at any tolerance used in this project.
The resulting length multiset satisfies the Kraft equality exactly
(checked in big integers) and codewords are assigned canonically, so
encoding and decoding work by ranking an outcome within its weight
class rather than by table lookup.
"""

from __future__ import annotations

import heapq
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Hashable, Iterable, Sequence

from .core import CapacityError, InputError

PROB_SUM_TOL = 1e-12


def bernoulli_entropy(p: float) -> float:
    """Entropy in bits of a single Bernoulli(p) flip."""
    if not 0.0 < p < 1.0:
        raise InputError(f"entropy needs p in (0, 1), got {p!r}")
    q = 1.0 - p
    return -(p * math.log2(p) + q * math.log2(q))


# ---------------------------------------------------------------------------
# Explicit construction for small alphabets


@dataclass(frozen=True)
class HuffmanCode:
    """Prefix code over an explicit alphabet.

    A one-symbol alphabet gets the empty codeword; decoding then relies
    on the caller's symbol count, which `decode` takes for that reason.
    """

    codewords: dict[Hashable, str]
    expected_length: float

    def length(self, symbol: Hashable) -> int:
        return len(self.codewords[symbol])

    def encode(self, symbols: Iterable[Hashable]) -> str:
        return "".join(self.codewords[s] for s in symbols)

    def decode(self, bits: str, count: int) -> list:
        inverse = {cw: s for s, cw in self.codewords.items()}
        out = []
        pos = 0
        for _ in range(count):
            end = pos
            while True:
                sym = inverse.get(bits[pos:end])
                if sym is not None or end > len(bits):
                    break
                end += 1
            if sym is None:
                raise InputError("bit stream ended inside a codeword")
            out.append(sym)
            pos = end
        if pos != len(bits):
            raise InputError(f"{len(bits) - pos} unread bits after {count} symbols")
        return out

    def kraft_sum(self) -> Fraction:
        return sum((Fraction(1, 2 ** len(cw)) for cw in self.codewords.values()), Fraction(0))


def huffman_build(dist: dict[Hashable, float]) -> HuffmanCode:
    """Minimum-expected-length prefix code for an explicit distribution.

    Ties in the merge heap break on (probability, smallest contained
    symbol, subtree size), and of the two merged subtrees the one with
    the lower key hangs off the '0' branch, so the code is a pure
    function of the distribution.
    """
    if not dist:
        raise InputError("empty distribution")
    total = 0.0
    for sym, p in dist.items():
        if not p > 0.0:
            raise InputError(f"probability of {sym!r} must be positive, got {p!r}")
        total += p
    if abs(total - 1.0) > PROB_SUM_TOL:
        raise InputError(f"probabilities sum to {total!r}, not 1")
    if len(dist) == 1:
        (sym,) = dist
        return HuffmanCode(codewords={sym: ""}, expected_length=0.0)

    # entries: (prob, min contained symbol, subtree size, tree); internal
    # tree nodes are 2-lists, which no hashable symbol can collide with
    heap = [(p, sym, 1, sym) for sym, p in dist.items()]
    heapq.heapify(heap)
    while len(heap) > 1:
        p0, m0, s0, t0 = heapq.heappop(heap)
        p1, m1, s1, t1 = heapq.heappop(heap)
        heapq.heappush(heap, (p0 + p1, min(m0, m1), s0 + s1, [t0, t1]))
    (_, _, _, root) = heap[0]

    codewords: dict[Hashable, str] = {}

    def assign(tree, prefix: str) -> None:
        if isinstance(tree, list):
            assign(tree[0], prefix + "0")
            assign(tree[1], prefix + "1")
        else:
            codewords[tree] = prefix

    assign(root, "")
    expected = sum(dist[s] * len(cw) for s, cw in codewords.items())
    return HuffmanCode(codewords=codewords, expected_length=expected)


def block_distribution(p: float, L: int) -> dict[int, float]:
    """Distribution of an L-bit iid Bernoulli(p) block, keyed by integer value.

    Bit 1 of the block is the most significant bit of the key, so integer
    order equals lexicographic order of the bit strings.  Explicit, so
    capped to small L; the aggregated builder has no such cap.
    """
    if not 0.0 < p < 1.0:
        raise InputError(f"p must be in (0, 1), got {p!r}")
    if L < 1:
        raise InputError(f"block length must be positive, got {L}")
    if L > 16:
        raise CapacityError(f"explicit block distribution capped at L=16, got L={L}")
    q = 1.0 - p
    return {b: p ** b.bit_count() * q ** (L - b.bit_count()) for b in range(1 << L)}


# ---------------------------------------------------------------------------
# Weight-class aggregated construction


def _class_values(p: float, L: int) -> list[int]:
    """Exact truncated values of p^w q^(L-w) scaled to 2**E, w = 0..L.

    p is taken at its exact binary value A / 2**a, so the only error is
    the final truncating shift; E leaves 64 guard bits above the
    smallest class value.
    """
    frac = Fraction(p)
    A, D = frac.numerator, frac.denominator
    a = D.bit_length() - 1
    B = D - A
    E = math.ceil(L * math.log2(1.0 / min(p, 1.0 - p))) + 64
    shift = a * L - E
    p_pows = [1] * (L + 1)
    q_pows = [1] * (L + 1)
    for w in range(1, L + 1):
        p_pows[w] = p_pows[w - 1] * A
        q_pows[w] = q_pows[w - 1] * B
    vals = []
    for w in range(L + 1):
        num = p_pows[w] * q_pows[L - w]
        vals.append(num >> shift if shift >= 0 else num << -shift)
    return vals


def _aggregate_lengths(p: float, L: int) -> list[dict[int, int]]:
    """Codeword-length multiset per weight class, via family-level merging.

    Returns, for each w, a dict {length: count} with counts summing to
    C(L, w).  Merge events are recorded forward and replayed in reverse
    to push depth multisets from the root back down to the classes.
    """
    values = _class_values(p, L)
    # heap entries: (family value, family id, tree count); ids 0..L are classes
    heap = [(values[w], w, math.comb(L, w)) for w in range(L + 1)]
    heapq.heapify(heap)
    next_id = L + 1
    # events: (new id, ((child id, subtrees per new tree), ...))
    events: list[tuple[int, tuple[tuple[int, int], ...]]] = []

    while True:
        v1, g1, c1 = heapq.heappop(heap)
        if not heap and c1 == 1:
            root = g1
            break
        if c1 >= 2:
            if heap and heap[0][0] == v1:
                v2, g2, c2 = heapq.heappop(heap)
                take = min(c1, c2)
                events.append((next_id, ((g1, 1), (g2, 1))))
                heapq.heappush(heap, (v1 + v2, next_id, take))
                next_id += 1
                if c1 > take:
                    heapq.heappush(heap, (v1, g1, c1 - take))
                if c2 > take:
                    heapq.heappush(heap, (v2, g2, c2 - take))
            else:
                events.append((next_id, ((g1, 2),)))
                heapq.heappush(heap, (v1 + v1, next_id, c1 // 2))
                next_id += 1
                if c1 % 2:
                    heapq.heappush(heap, (v1, g1, 1))
        else:
            v2, g2, c2 = heapq.heappop(heap)
            events.append((next_id, ((g1, 1), (g2, 1))))
            heapq.heappush(heap, (v1 + v2, next_id, 1))
            next_id += 1
            if c2 > 1:
                heapq.heappush(heap, (v2, g2, c2 - 1))

    depth: dict[int, dict[int, int]] = {root: {0: 1}}
    for new_id, children in reversed(events):
        # consumers of new_id all lie later in forward order, so its
        # multiset is complete by the time its creation event replays
        dm = depth.pop(new_id)
        for child, per in children:
            tgt = depth.setdefault(child, {})
            for d, cnt in dm.items():
                tgt[d + 1] = tgt.get(d + 1, 0) + cnt * per
    return [depth.get(w, {}) for w in range(L + 1)]


def _rank_in_class(bits: Sequence[int], w: int) -> int:
    """Lexicographic rank of a bit string among equal-weight strings."""
    L = len(bits)
    r = 0
    left = w
    for j, b in enumerate(bits):
        if b:
            r += math.comb(L - 1 - j, left)
            left -= 1
    return r


def _unrank_in_class(r: int, L: int, w: int) -> list[int]:
    bits = []
    left = w
    for j in range(L):
        if left == 0:
            bits.append(0)
            continue
        t = math.comb(L - 1 - j, left)
        if r >= t:
            bits.append(1)
            r -= t
            left -= 1
        else:
            bits.append(0)
    return bits


@dataclass
class BernoulliBlockCode:
    """Canonical minimum-redundancy code for an L-bit iid Bernoulli(p) block.

    Within a weight class (all outcomes equally likely), shorter
    codewords go to lexicographically smaller outcomes; across the whole
    alphabet, codewords are assigned canonically by (length, weight,
    in-class rank).  Everything is computed from class-level counts, so
    L in the hundreds or thousands stays cheap.
    """

    p: float
    L: int
    class_lengths: list[dict[int, int]]
    expected_length: float
    max_length: int
    # per class: (length, first in-class rank, count, canonical offset), by length
    _class_buckets: list[list[tuple[int, int, int, int]]] = field(repr=False)
    _first_code: dict[int, int] = field(repr=False)
    _count_at_length: dict[int, int] = field(repr=False)
    # per length: parallel arrays for decoding, sorted by offset
    _len_offsets: dict[int, list[int]] = field(repr=False)
    _len_entries: dict[int, list[tuple[int, int]]] = field(repr=False)  # (w, first rank)

    def codeword_length(self, bits: Sequence[int]) -> int:
        w, r = self._locate(bits)
        for length, rank_start, count, _ in self._class_buckets[w]:
            if r < rank_start + count:
                return length
        raise AssertionError("rank outside class range")

    def encode_block(self, bits: Sequence[int]) -> str:
        w, r = self._locate(bits)
        for length, rank_start, count, offset in self._class_buckets[w]:
            if r < rank_start + count:
                value = self._first_code[length] + offset + (r - rank_start)
                return format(value, "b").zfill(length)
        raise AssertionError("rank outside class range")

    def decode_block(self, stream: str, pos: int = 0) -> tuple[list[int], int]:
        """Read one codeword from `stream` at `pos`; return (block bits, new pos)."""
        value = 0
        length = 0
        first = self._first_code
        totals = self._count_at_length
        for ch in stream[pos:]:
            value = (value << 1) | (ch == "1")
            length += 1
            start = first.get(length)
            if start is not None and 0 <= value - start < totals[length]:
                idx = value - start
                offsets = self._len_offsets[length]
                slot = bisect_right(offsets, idx) - 1
                w, rank_start = self._len_entries[length][slot]
                r = rank_start + (idx - offsets[slot])
                return _unrank_in_class(r, self.L, w), pos + length
        raise InputError("bit stream ended inside a block codeword")

    def _locate(self, bits: Sequence[int]) -> tuple[int, int]:
        if len(bits) != self.L:
            raise InputError(f"block has {len(bits)} bits, code expects {self.L}")
        w = sum(1 for b in bits if b)
        return w, _rank_in_class(bits, w)


@lru_cache(maxsize=256)
def build_block_code(p: float, L: int) -> BernoulliBlockCode:
    """Build (and cache) the aggregated block code for Bernoulli(p)^L."""
    if not 0.0 < p < 1.0:
        raise InputError(f"p must be in (0, 1), got {p!r}")
    if L < 1:
        raise InputError(f"block length must be positive, got {L}")
    class_lengths = _aggregate_lengths(p, L)

    for w, dm in enumerate(class_lengths):
        if sum(dm.values()) != math.comb(L, w):
            raise AssertionError(f"class {w} length counts do not sum to C({L},{w})")
    max_length = max(d for dm in class_lengths for d in dm)
    kraft = sum(cnt << (max_length - d) for dm in class_lengths for d, cnt in dm.items())
    if kraft != 1 << max_length:
        raise AssertionError("length multiset misses Kraft equality")

    count_at_length: dict[int, int] = {}
    for dm in class_lengths:
        for d, cnt in dm.items():
            count_at_length[d] = count_at_length.get(d, 0) + cnt
    first_code: dict[int, int] = {}
    code = 0
    prev = None
    for d in sorted(count_at_length):
        if prev is not None:
            code = (code + count_at_length[prev]) << (d - prev)
        first_code[d] = code
        prev = d

    class_buckets: list[list[tuple[int, int, int, int]]] = []
    offset_cursor: dict[int, int] = {d: 0 for d in count_at_length}
    len_offsets: dict[int, list[int]] = {d: [] for d in count_at_length}
    len_entries: dict[int, list[tuple[int, int]]] = {d: [] for d in count_at_length}
    for w, dm in enumerate(class_lengths):
        buckets = []
        rank_start = 0
        for d in sorted(dm):
            cnt = dm[d]
            off = offset_cursor[d]
            buckets.append((d, rank_start, cnt, off))
            len_offsets[d].append(off)
            len_entries[d].append((w, rank_start))
            offset_cursor[d] = off + cnt
            rank_start += cnt
        class_buckets.append(buckets)

    q = 1.0 - p
    expected = 0.0
    lg_n = math.lgamma(L + 1)
    for w, dm in enumerate(class_lengths):
        log_pmf = (
            lg_n
            - math.lgamma(w + 1)
            - math.lgamma(L - w + 1)
            + w * math.log(p)
            + (L - w) * math.log(q)
        )
        avg_len = Fraction(sum(d * cnt for d, cnt in dm.items()), math.comb(L, w))
        expected += math.exp(log_pmf) * float(avg_len)

    return BernoulliBlockCode(
        p=p,
        L=L,
        class_lengths=class_lengths,
        expected_length=expected,
        max_length=max_length,
        _class_buckets=class_buckets,
        _first_code=first_code,
        _count_at_length=count_at_length,
        _len_offsets=len_offsets,
        _len_entries=len_entries,
    )

"""Group subshifts of finite type over the integers.

A ``GroupSFT`` is the set of bi-infinite configurations all of whose
length-m windows lie in a defining subgroup P of A^m.  The defining window
is always the interval {0..m-1}: shift invariance makes interval windows
fully general over the integers.

The central algorithm is essentialization, which shrinks P to the true
restriction of the subshift (the blocks that actually extend to bi-infinite
configurations): iterate "keep the blocks that extend one step left and one
step right within P" until a fixed point.  Each iterate is again a subgroup,
so the descending chain condition of the alphabet bounds the number of
strict refinements and guarantees termination.  Once P is essential, a word
is in the language exactly when all of its m-windows lie in P, which makes
language queries cheap at any length.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .alphabet import (Alphabet, EnumeratedSubgroup, LinearSubgroup, Subgroup,
                       chain_length_bound, cylinder_lift, full_subgroup,
                       identity_tuple, project, subgroup_closure,
                       subgroup_intersect, trivial_subgroup)
from .blocks import PeriodicConfig, Word, wrap_subwords
from .errors import CapacityError, InvariantError, ValidationError

# when set, equality checks re-verify at one extra window
debug_checks = False


@dataclass(frozen=True, eq=False)
class GroupSFT:
    """Subshift of finite type cut out by a subgroup P of A^window.

    ``essential`` records that P is known to equal the true restriction of
    the subshift to {0..window-1}.  Instances are immutable; use ``equals``
    for semantic comparison (``==`` is identity).
    """

    alphabet: Alphabet
    window: int
    group: Subgroup
    essential: bool = False
    _memo: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.window < 1:
            raise ValidationError("window length must be >= 1")
        if self.group.alphabet != self.alphabet or self.group.k != self.window:
            raise ValidationError("defining subgroup must live in A^window")
        if not self.group.contains(identity_tuple(self.alphabet, self.window)):
            raise InvariantError("defining subgroup lost the identity block")

    def __repr__(self) -> str:
        tag = "essential" if self.essential else "raw"
        return (f"GroupSFT({self.alphabet.describe()}, window={self.window}, "
                f"{self.group.size_label()}, {tag})")


def make_sft(alphabet: Alphabet, window: int, group: Subgroup) -> GroupSFT:
    """The subshift of A^Z whose every length-``window`` pattern lies in
    ``group``."""
    return GroupSFT(alphabet, window, group)


def sft_from_generators(alphabet: Alphabet, window: int,
                        gens: Sequence[Sequence]) -> GroupSFT:
    return make_sft(alphabet, window, subgroup_closure(alphabet, window, gens))


def full_shift(alphabet: Alphabet, window: int = 1) -> GroupSFT:
    return GroupSFT(alphabet, window, full_subgroup(alphabet, window),
                    essential=True)


def trivial_shift(alphabet: Alphabet) -> GroupSFT:
    return GroupSFT(alphabet, 1, trivial_subgroup(alphabet, 1), essential=True)


def _essential_step_enumerated(p: EnumeratedSubgroup) -> EnumeratedSubgroup:
    m = p.k
    elems = p.elems
    prefixes = {t[:m - 1] for t in elems}
    suffixes = {t[1:] for t in elems}
    kept = frozenset(t for t in elems
                     if t[1:] in prefixes and t[:m - 1] in suffixes)
    return EnumeratedSubgroup(p.alphabet, m, kept)


def _essential_step_linear(p: LinearSubgroup) -> LinearSubgroup:
    m = p.k
    wide = p.pullback(m + 2, list(range(0, m)))
    for offset in (1, 2):
        wide = subgroup_intersect(wide, p.pullback(m + 2,
                                                   list(range(offset, offset + m))))
    return project(wide, range(1, m + 1))


def essentialize(s: GroupSFT) -> GroupSFT:
    """Same subshift with the defining subgroup replaced by the true
    restriction (every block extends to a configuration)."""
    if s.essential:
        return s
    cached = s._memo.get("essential")
    if cached is not None:
        return cached
    bound = chain_length_bound(s.alphabet, s.window)
    cur = s.group
    strict = 0
    while True:
        if isinstance(cur, EnumeratedSubgroup):
            nxt = _essential_step_enumerated(cur)
        else:
            nxt = _essential_step_linear(cur)
        if nxt == cur:
            break
        strict += 1
        if strict > bound:
            raise InvariantError(
                f"essentialization exceeded the chain bound {bound}")
        cur = nxt
    out = GroupSFT(s.alphabet, s.window, cur, essential=True)
    s._memo["essential"] = out
    out._memo["essential"] = out
    return out


def _blocks_enumerated(p: EnumeratedSubgroup, k: int) -> EnumeratedSubgroup:
    """Length-k words all of whose m-windows lie in the essential group p."""
    m = p.k
    alphabet = p.alphabet
    by_prefix: dict[tuple, list] = {}
    for t in p.elems:
        by_prefix.setdefault(t[:m - 1], []).append(t[m - 1])
    words = set(p.elems)
    for _ in range(k - m):
        new = set()
        for w in words:
            tail = w[len(w) - m + 1:] if m > 1 else ()
            for b in by_prefix.get(tail, ()):
                new.add(w + (b,))
                if len(new) > alphabet.order_cap:
                    raise CapacityError(
                        f"block group materialization exceeds the order cap "
                        f"{alphabet.order_cap}")
        words = new
    return EnumeratedSubgroup(alphabet, k, frozenset(words))


def _blocks_linear(p: LinearSubgroup, k: int) -> LinearSubgroup:
    m = p.k
    out = p.pullback(k, list(range(0, m)))
    for offset in range(1, k - m + 1):
        out = subgroup_intersect(out, p.pullback(k, list(range(offset,
                                                               offset + m))))
    return out


def blocks(s: GroupSFT, k: int) -> Subgroup:
    """The true restriction of the subshift to {0..k-1}, as a subgroup of
    A^k."""
    if k < 1:
        raise ValidationError("block length must be >= 1")
    cached = s._memo.get(("blocks", k))
    if cached is not None:
        return cached
    ess = essentialize(s)
    p = ess.group
    if k == s.window:
        out = p
    elif k < s.window:
        out = project(p, range(k))
    elif isinstance(p, EnumeratedSubgroup):
        out = _blocks_enumerated(p, k)
    else:
        out = _blocks_linear(p, k)
    s._memo[("blocks", k)] = out
    return out


def word_in_language(s: GroupSFT, w: Word) -> bool:
    """Whether the word occurs in some configuration of the subshift."""
    if w.alphabet != s.alphabet:
        raise ValidationError("word alphabet does not match the subshift")
    ess = essentialize(s)
    m, p = ess.window, ess.group
    if len(w) == 0:
        return True
    if len(w) < m:
        return blocks(s, len(w)).contains(w.letters)
    return all(p.contains(w.letters[i:i + m])
               for i in range(len(w) - m + 1))


def widen(s: GroupSFT, new_window: int) -> GroupSFT:
    """The same subshift presented on a wider window."""
    if new_window < s.window:
        raise ValidationError("widen target must be >= the current window")
    if new_window == s.window:
        return essentialize(s)
    return GroupSFT(s.alphabet, new_window, blocks(s, new_window),
                    essential=True)


def intersect(s1: GroupSFT, s2: GroupSFT) -> GroupSFT:
    """Intersection, presented on window max(m1, m2) and essentialized."""
    if s1.alphabet != s2.alphabet:
        raise ValidationError("cannot intersect shifts over different alphabets")
    m = max(s1.window, s2.window)
    p = subgroup_intersect(widen(s1, m).group, widen(s2, m).group)
    return essentialize(GroupSFT(s1.alphabet, m, p))


def equals(s1: GroupSFT, s2: GroupSFT) -> bool:
    """Set equality of the two subshifts (exact: essential presentations at
    a common window determine the shift)."""
    if s1.alphabet != s2.alphabet:
        raise ValidationError("cannot compare shifts over different alphabets")
    k = max(s1.window, s2.window)
    same = blocks(s1, k) == blocks(s2, k)
    if debug_checks and same:
        if blocks(s1, k + 1) != blocks(s2, k + 1):
            raise InvariantError(
                "window-k block agreement did not persist at k+1")
    return same


def contains(s1: GroupSFT, s2: GroupSFT) -> bool:
    """Whether s1 contains s2 as sets of configurations."""
    if s1.alphabet != s2.alphabet:
        raise ValidationError("cannot compare shifts over different alphabets")
    k = max(s1.window, s2.window)
    return blocks(s2, k).subset_of(blocks(s1, k))


def member_periodic(s: GroupSFT, c: PeriodicConfig) -> bool:
    """Whether the periodic configuration lies in the subshift (checks the
    defining constraint on every wraparound window)."""
    if c.word.alphabet != s.alphabet:
        raise ValidationError("configuration alphabet does not match")
    return all(s.group.contains(w.letters)
               for w in wrap_subwords(c, s.window))


def minimize_window(s: GroupSFT) -> GroupSFT:
    """Equivalent presentation on the smallest window that still defines the
    same subshift."""
    ess = essentialize(s)
    for m in range(1, ess.window):
        candidate = GroupSFT(s.alphabet, m, blocks(s, m))
        if equals(candidate, s):
            return essentialize(candidate)
    return ess


def _restrict_window_count(m: int, d: int) -> int:
    # smallest K with d*K >= m + d - 1
    return (m - 2) // d + 2 if m > 1 else 1


def restrict_to_subgroup(s: GroupSFT, d: int) -> GroupSFT:
    """Restriction of the subshift to the subgroup dZ, recoded over the
    product alphabet A^d (consecutive d-blocks become single letters)."""
    if d < 1:
        raise ValidationError("subgroup index must be >= 1")
    if d == 1:
        return essentialize(s)
    coding = s.alphabet.power(d)
    k = _restrict_window_count(s.window, d)
    wide = blocks(s, d * k)
    if isinstance(wide, LinearSubgroup):
        group: Subgroup = LinearSubgroup(coding.alphabet, k, wide.basis)
    else:
        assert isinstance(wide, EnumeratedSubgroup)
        elems = frozenset(
            tuple(coding.pack(t[i * d:(i + 1) * d]) for i in range(k))
            for t in wide.elems)
        group = EnumeratedSubgroup(coding.alphabet, k, elems)
    return GroupSFT(coding.alphabet, k, group, essential=True)


def induce_from_subgroup(lam: GroupSFT, base: Alphabet, d: int) -> GroupSFT:
    """Induction of a subshift over the product alphabet A^d (viewed on dZ)
    back to a subshift over A: configurations whose every d-chunking, at
    every phase, lies in the given subshift."""
    if d < 1:
        raise ValidationError("subgroup index must be >= 1")
    if d == 1:
        if lam.alphabet != base:
            raise ValidationError("alphabet mismatch in induction")
        return essentialize(lam)
    coding = base.power(d)
    if lam.alphabet != coding.alphabet:
        raise ValidationError(
            f"induction expects a subshift over {coding.alphabet.describe()}")
    m_lam = lam.window
    flat_width = d * m_lam
    if isinstance(lam.group, LinearSubgroup):
        flat: Subgroup = LinearSubgroup(base, flat_width, lam.group.basis)
    else:
        assert isinstance(lam.group, EnumeratedSubgroup)
        elems = frozenset(
            tuple(a for letter in t for a in coding.unpack(letter))
            for t in lam.group.elems)
        flat = EnumeratedSubgroup(base, flat_width, elems)
    m_out = d * m_lam + (d - 1)
    q: Optional[Subgroup] = None
    for phase in range(d):
        lifted = cylinder_lift(flat, m_out,
                               list(range(phase, phase + flat_width)))
        q = lifted if q is None else subgroup_intersect(q, lifted)
    assert q is not None
    return essentialize(GroupSFT(base, m_out, q))


def recode_higher_block(s: GroupSFT, d: int) -> GroupSFT:
    """The d-th higher-block presentation: configurations read in
    non-overlapping d-windows over the product alphabet A^d.  Decoding is
    ``induce_from_subgroup`` with the original alphabet."""
    return restrict_to_subgroup(s, d)

"""Finite words over an alphabet and periodic configurations w^infinity.

Words of a fixed length form a group under the pointwise operation; periodic
configurations are the only infinite configurations this package ever
materializes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .alphabet import Alphabet, Letter, _tuple_inv, _tuple_op, _validate_tuple
from .errors import ValidationError


@dataclass(frozen=True)
class Word:
    """A finite word; letters use the alphabet's element encoding."""

    alphabet: Alphabet
    letters: tuple

    def __post_init__(self):
        for a in self.letters:
            self.alphabet.check_letter(a)

    def __len__(self) -> int:
        return len(self.letters)

    def __add__(self, other: "Word") -> "Word":
        if self.alphabet != other.alphabet:
            raise ValidationError("cannot concatenate over different alphabets")
        return Word(self.alphabet, self.letters + other.letters)


def word(alphabet: Alphabet, letters: Sequence) -> Word:
    return Word(alphabet, tuple(letters))


def identity_word(alphabet: Alphabet, k: int) -> Word:
    return Word(alphabet, (alphabet.identity,) * k)


@dataclass(frozen=True)
class PeriodicConfig:
    """The configuration x(n) = w[(n + phase) mod |w|] for a word w."""

    word: Word
    phase: int = 0

    def __post_init__(self):
        if len(self.word) < 1:
            raise ValidationError("periodic configurations need period >= 1")
        if not 0 <= self.phase < len(self.word):
            raise ValidationError("phase must lie in [0, period)")

    @property
    def period(self) -> int:
        return len(self.word)

    def at(self, n: int) -> Letter:
        return self.word.letters[(n + self.phase) % self.period]

    def window(self, start: int, length: int) -> Word:
        return Word(self.word.alphabet,
                    tuple(self.at(start + i) for i in range(length)))


def periodic(alphabet: Alphabet, letters: Sequence, phase: int = 0) -> PeriodicConfig:
    return PeriodicConfig(word(alphabet, letters), phase)


def subwords(w: Word, k: int) -> list[Word]:
    """All contiguous length-k subwords, left to right."""
    if k < 0 or k > len(w):
        raise ValidationError(f"subword length {k} outside [0, {len(w)}]")
    return [Word(w.alphabet, w.letters[i:i + k]) for i in range(len(w) - k + 1)]


def wrap_subwords(c: PeriodicConfig, k: int) -> list[Word]:
    """The period-many length-k windows of the configuration, one per start
    offset 0..period-1, read with wraparound."""
    if k < 0:
        raise ValidationError("window length must be >= 0")
    return [c.window(i, k) for i in range(c.period)]


def pointwise_op(w1: Word, w2: Word) -> Word:
    """Componentwise product of two equal-length words."""
    if w1.alphabet != w2.alphabet:
        raise ValidationError("pointwise product needs a common alphabet")
    if len(w1) != len(w2):
        raise ValidationError("pointwise product needs equal lengths")
    return Word(w1.alphabet, _tuple_op(w1.alphabet, w1.letters, w2.letters))


def pointwise_inv(w: Word) -> Word:
    """Componentwise inverse."""
    return Word(w.alphabet, _tuple_inv(w.alphabet, w.letters))

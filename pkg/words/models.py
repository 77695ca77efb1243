from collections import namedtuple
from dataclasses import dataclass

from django.conf import settings

from wordwidth.exceptions import BudgetExceededError


def _free_reduce(letters):
    stack = []
    for index, sign in letters:
        if stack and stack[-1] == (index, -sign):
            stack.pop()
        else:
            stack.append((index, sign))
    return tuple(stack)


@dataclass(frozen=True)
class Word:
    """
    Reduced word in the free group on x1, x2, ...; letters are
    (generator index, ±1) pairs.
    """
    letters: tuple = ()

    def __post_init__(self):
        letters = []
        for index, sign in self.letters:
            if int(index) < 1 or sign not in (1, -1):
                raise ValueError(f"Bad letter ({index}, {sign}).")
            letters.append((int(index), int(sign)))
        object.__setattr__(self, 'letters', _free_reduce(letters))

    @classmethod
    def generator(cls, index):
        return cls(((index, 1),))

    @classmethod
    def commutator(cls, u, v):
        """[u,v] = u⁻¹v⁻¹uv."""
        return u.inverse() * v.inverse() * u * v

    @property
    def arity(self):
        return max((index for index, _ in self.letters), default=0)

    def is_trivial(self):
        return not self.letters

    def __len__(self):
        return len(self.letters)

    def __mul__(self, other):
        return Word(self.letters + other.letters)

    def inverse(self):
        return Word(tuple((index, -sign) for index, sign in reversed(self.letters)))

    def power(self, k):
        if abs(k) > settings.LAB_MAX_EXPONENT:
            raise BudgetExceededError(f"Exponent {k} exceeds LAB_MAX_EXPONENT={settings.LAB_MAX_EXPONENT}.")
        if k < 0:
            return self.inverse().power(-k)
        return Word(self.letters * k)

    def format(self):
        """Canonical expanded form, e.g. "x1^-1 x2^-1 x1 x2"."""
        return ' '.join(f"x{i}" if s == 1 else f"x{i}^-1" for i, s in self.letters)

    def __str__(self):
        return self.format() or '1'


# Group operations for evaluate(); the default reads them off the elements.
GroupOps = namedtuple('GroupOps', ['mul', 'inv', 'identity'])

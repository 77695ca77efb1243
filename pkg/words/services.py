import logging

from matrix_core.models import SquareIntMatrix
from wordwidth.exceptions import PreconditionError
from .models import GroupOps, Word
from .parser import WordParser

logger = logging.getLogger(__name__)

# Generate a free subgroup of SL_2(Z), so only the trivial word evaluates to I.
SANOV_A = SquareIntMatrix(((1, 2), (0, 1)))
SANOV_B = SquareIntMatrix(((1, 0), (2, 1)))


def element_ops(sample):
    return GroupOps(mul=lambda a, b: a * b, inv=lambda a: a.inverse(), identity=sample.identity_like())


class WordService:

    @staticmethod
    def parse_word(text: str) -> Word:
        word = WordParser(text).parse()
        if word.is_trivial():
            logger.debug(f"Word '{text}' reduces to the empty word.")
        return word

    @staticmethod
    def evaluate(w: Word, elements, ops: GroupOps = None):
        """
        Substitutes elements[i-1] for x_i. Elements need `*`, `inverse()` and
        `identity_like()` unless explicit `ops` are given. With no elements and
        no ops the identity has no dimension to take, so that case raises
        PreconditionError; pass ops to get ops.identity back.
        """
        elements = list(elements)
        if len(elements) < w.arity:
            raise PreconditionError(
                f"Word has arity {w.arity} but only {len(elements)} elements were supplied."
            )
        if ops is None:
            if not elements:
                raise PreconditionError("Cannot infer the identity from an empty tuple; pass ops.")
            ops = element_ops(elements[0])
        inverses = {}
        result = ops.identity
        for index, sign in w.letters:
            x = elements[index - 1]
            if sign < 0:
                if index not in inverses:
                    inverses[index] = ops.inv(x)
                x = inverses[index]
            result = ops.mul(result, x)
        return result

    @staticmethod
    def is_trivial_on_free(w: Word) -> bool:
        return w.is_trivial()

    @staticmethod
    def sanov_pair():
        return SANOV_A, SANOV_B

    @staticmethod
    def free_tuple(r):
        """
        r elements of SL_2(Z) generating a free group of rank r: the Sanov pair
        when r <= 2, otherwise A^k·B·A^-k for k = 0..r-1.
        """
        if r <= 2:
            return [SANOV_A, SANOV_B]
        a_inv = SANOV_A.inverse()
        result, left, right = [], SANOV_A.identity_like(), SANOV_A.identity_like()
        for _ in range(r):
            result.append(left * SANOV_B * right)
            left, right = left * SANOV_A, a_inv * right
        return result

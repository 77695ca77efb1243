"""
Recursive-descent parser for the word grammar:

    word   := factor*
    factor := atom ('^' ['-'] digits)?
    atom   := 'x' [1-9] | '[' word ',' word ']' | '(' word ')'

Whitespace separates factors but is otherwise ignored.
"""
import logging

from django.conf import settings

from wordwidth.exceptions import BudgetExceededError, WordSyntaxError
from .models import Word

logger = logging.getLogger(__name__)


class WordParser:

    def __init__(self, text):
        self.text = text
        self.pos = 0

    def parse(self):
        if not self.text.strip():
            raise WordSyntaxError("Empty word text.", position=0, text=self.text)
        word = self._word(stop=())
        self._skip()
        if self.pos != len(self.text):
            self._fail(f"Unexpected '{self.text[self.pos]}'")
        return word

    def _fail(self, message):
        raise WordSyntaxError(f"{message} at position {self.pos}.", position=self.pos, text=self.text)

    def _skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self):
        self._skip()
        return self.text[self.pos] if self.pos < len(self.text) else ''

    def _word(self, stop):
        word = Word()
        while True:
            ch = self._peek()
            if ch == '' or ch in stop:
                return word
            word = word * self._factor()

    def _factor(self):
        atom = self._atom()
        if self._peek() == '^':
            self.pos += 1
            self._skip()
            start = self.pos
            if self.pos < len(self.text) and self.text[self.pos] == '-':
                self.pos += 1
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            digits = self.text[start:self.pos]
            if digits in ('', '-'):
                self.pos = start
                self._fail("Expected an integer exponent")
            if len(digits.lstrip("-")) > len(str(settings.LAB_MAX_EXPONENT)):
                raise BudgetExceededError(
                    f"Exponent at position {start} has {len(digits.lstrip('-'))} digits; LAB_MAX_EXPONENT is {settings.LAB_MAX_EXPONENT}."
                )
            atom = atom.power(int(digits))
        return atom

    def _atom(self):
        ch = self._peek()
        if ch == 'x':
            self.pos += 1
            if self.pos >= len(self.text) or self.text[self.pos] not in '123456789':
                self._fail("Expected a generator index 1-9")
            index = int(self.text[self.pos])
            self.pos += 1
            if self.pos < len(self.text) and self.text[self.pos].isdigit():
                self._fail("Generator index must be a single digit")
            return Word.generator(index)
        if ch == '[':
            self.pos += 1
            u = self._word(stop=(',',))
            if self._peek() != ',':
                self._fail("Expected ',' inside commutator")
            self.pos += 1
            v = self._word(stop=(']',))
            if self._peek() != ']':
                self._fail("Expected ']'")
            self.pos += 1
            return Word.commutator(u, v)
        if ch == '(':
            self.pos += 1
            inner = self._word(stop=(')',))
            if self._peek() != ')':
                self._fail("Expected ')'")
            self.pos += 1
            return inner
        self._fail(f"Unexpected '{ch}'" if ch else "Unexpected end of input")

"""Alphabets of the two codings and their text/JSON forms.

Omega digits ``(k, xi)`` are the entries of an even-quotient continued
fraction ``1/(2k_1 + xi_1/(2k_2 + ...))``.  Sigma symbols ``h.m^pm`` are
the re-blocked form: ``h`` copies of ``(1,-1)`` followed by one digit
``(m, pm1)`` that is not ``(1,-1)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence


@dataclass(frozen=True)
class EcfDigit:
    k: int
    xi: int

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if self.xi not in (1, -1):
            raise ValueError(f"xi must be +1 or -1, got {self.xi!r}")

    @property
    def is_bar(self) -> bool:
        return self.k == 1 and self.xi == -1

    def __str__(self):
        return f"{self.k}{'+' if self.xi > 0 else '-'}"

    def to_json(self) -> dict:
        return {"k": self.k, "xi": self.xi}

    @classmethod
    def from_json(cls, obj) -> "EcfDigit":
        return cls(int(obj["k"]), int(obj["xi"]))


OMEGA_BAR = EcfDigit(1, -1)


@dataclass(frozen=True)
class SigmaSymbol:
    h: int
    m: int
    sign: int

    def __post_init__(self):
        if not isinstance(self.h, int) or self.h < 0:
            raise ValueError(f"h must be a nonnegative integer, got {self.h!r}")
        if not isinstance(self.m, int) or self.m < 1:
            raise ValueError(f"m must be a positive integer, got {self.m!r}")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign!r}")
        if self.m == 1 and self.sign == -1:
            raise ValueError(f"{self.h}x1- is not an allowed symbol")

    @property
    def length(self) -> int:
        """Number of Omega digits the symbol stands for."""
        return self.h + 1

    @property
    def last_digit(self) -> EcfDigit:
        return EcfDigit(self.m, self.sign)

    @property
    def first_digit(self) -> EcfDigit:
        return OMEGA_BAR if self.h else self.last_digit

    def digits(self) -> tuple:
        return (OMEGA_BAR,) * self.h + (self.last_digit,)

    def __str__(self):
        s = f"{self.m}{'+' if self.sign > 0 else '-'}"
        return f"{self.h}x{s}" if self.h else s

    def to_json(self) -> dict:
        return {"h": self.h, "m": self.m, "sign": self.sign}

    @classmethod
    def from_json(cls, obj) -> "SigmaSymbol":
        return cls(int(obj["h"]), int(obj["m"]), int(obj["sign"]))


@dataclass(frozen=True)
class Convergent:
    p: int
    q: int
    index: int

    def to_json(self) -> dict:
        # exact integers travel as decimal strings
        return {"index": self.index, "p": str(self.p), "q": str(self.q)}


_SIGMA_RE = re.compile(r"^(?:(\d+)[x·.])?(\d+)([+-])$")
_DIGIT_RE = re.compile(r"^\(?\s*(\d+)\s*,\s*([+-]?1)\s*\)?$")


def format_sigma(symbols: Iterable[SigmaSymbol]) -> str:
    return " ".join(str(s) for s in symbols)


def parse_sigma(text: str) -> list:
    """Parse the compact form ``"4- 14x1+ 146+"``."""
    out = []
    for tok in text.split():
        m = _SIGMA_RE.match(tok)
        if not m:
            raise ValueError(f"bad Sigma token {tok!r}")
        h = int(m.group(1) or 0)
        out.append(SigmaSymbol(h, int(m.group(2)), 1 if m.group(3) == "+" else -1))
    return out


def format_digits(digits: Iterable[EcfDigit], style: str = "compact") -> str:
    if style == "pairs":
        return "".join(f"({d.k},{'+1' if d.xi > 0 else '-1'})" for d in digits)
    return " ".join(str(d) for d in digits)


def parse_digits(text: str) -> list:
    """Parse ``"4- 1- 1+"`` or ``"(4,-1)(1,-1)(1,+1)"``."""
    text = text.strip()
    if "(" in text:
        toks = re.findall(r"\([^)]*\)", text)
    else:
        toks = text.split()
    out = []
    for tok in toks:
        m = _DIGIT_RE.match(tok)
        if m:
            out.append(EcfDigit(int(m.group(1)), int(m.group(2))))
            continue
        m = re.match(r"^(\d+)([+-])$", tok)
        if not m:
            raise ValueError(f"bad digit token {tok!r}")
        out.append(EcfDigit(int(m.group(1)), 1 if m.group(2) == "+" else -1))
    return out


def digits_to_json(digits: Sequence[EcfDigit]) -> list:
    return [d.to_json() for d in digits]


def digits_from_json(items) -> list:
    return [EcfDigit.from_json(o) for o in items]

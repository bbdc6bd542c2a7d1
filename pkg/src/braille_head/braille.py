"""Grade 1 (uncontracted) English Braille translation.

Cells are plain ints: bit ``i - 1`` is set when dot ``i`` is raised, with dots
1-3 running down the left column and 4-6 down the right one. That is the same
layout the Unicode Braille Patterns block uses, so ``chr(0x2800 + mask)``
renders a cell.

The head embosses one column at a time, so :func:`cell_to_columns` splits a
cell into two 3-bit row masks (bit 0 = top row).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

BRAILLE_BASE = 0x2800

CAPITAL = "CAPITAL"
NUMBER = "NUMBER"
LETTER = "LETTER"
_SIGNS = (CAPITAL, NUMBER, LETTER)

# <char or sign name> TAB <dot digits>[,<dot digits>...]; "0" is the blank cell.
DEFAULT_TABLE = """\
# English Grade 1
a\t1
b\t12
c\t14
d\t145
e\t15
f\t124
g\t1245
h\t125
i\t24
j\t245
k\t13
l\t123
m\t134
n\t1345
o\t135
p\t1234
q\t12345
r\t1235
s\t234
t\t2345
u\t136
v\t1236
w\t2456
x\t1346
y\t13456
z\t1356
1\t1
2\t12
3\t14
4\t145
5\t15
6\t124
7\t1245
8\t125
9\t24
0\t245
 \t0
.\t256
,\t2
?\t236
'\t3
-\t36
CAPITAL\t6
NUMBER\t3456
LETTER\t56
"""


class BrailleError(ValueError):
    pass


class UnsupportedCharacter(BrailleError):
    def __init__(self, position: int, char: str):
        self.position = position
        self.char = char
        super().__init__(f"unsupported character {char!r} (U+{ord(char):04X}) at position {position}")


class UndecodableSequence(BrailleError):
    def __init__(self, index: int, cell: int | None = None):
        self.index = index
        self.cell = cell
        where = "" if cell is None else f" (cell {cell:#08b})"
        super().__init__(f"no table entry matches the cells at index {index}{where}")


class TableError(BrailleError):
    pass


def dots_to_mask(dots: str) -> int:
    """Parse a dot string such as ``"1245"`` into a cell mask (``"0"`` is blank)."""
    mask = 0
    for ch in dots.strip():
        if ch == "0":
            continue
        if ch not in "123456":
            raise TableError(f"bad dot number {ch!r} in {dots!r}")
        mask |= 1 << (int(ch) - 1)
    return mask


def mask_to_dots(mask: int) -> str:
    check_cell(mask)
    return "".join(str(i + 1) for i in range(6) if mask >> i & 1)


def check_cell(mask: int) -> int:
    if not 0 <= mask <= 63:
        raise ValueError(f"cell mask {mask} outside 0..63")
    return mask


def cell_to_unicode(cell: int) -> str:
    return chr(BRAILLE_BASE + check_cell(cell))


def cells_to_unicode(cells: Iterable[int]) -> str:
    return "".join(cell_to_unicode(c) for c in cells)


def cell_to_columns(cell: int) -> tuple[int, int]:
    """Split a cell into (left, right) row masks."""
    check_cell(cell)
    return cell & 0b111, cell >> 3 & 0b111


def columns_to_cell(left: int, right: int) -> int:
    if not (0 <= left <= 7 and 0 <= right <= 7):
        raise ValueError(f"column masks must be in 0..7, got {left}, {right}")
    return left | right << 3


@dataclass(frozen=True)
class TranslationTable:
    """Character to cell-sequence mapping plus the three prefix signs.

    Digits are stored with their bare cells (a-j shapes); the encoder adds the
    number sign once per digit run.
    """

    chars: dict[str, tuple[int, ...]]
    capital: int
    number: int
    letter: int
    _decode: dict[tuple[int, ...], str] = field(init=False, repr=False, compare=False)
    _digits: dict[int, str] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        decode: dict[tuple[int, ...], str] = {}
        digits: dict[int, str] = {}
        for ch, seq in self.chars.items():
            if not seq:
                raise TableError(f"empty cell sequence for {ch!r}")
            if ch.isdigit():
                if len(seq) != 1:
                    raise TableError(f"digit {ch!r} must map to a single cell")
                if seq[0] in digits:
                    raise TableError(f"digits {digits[seq[0]]!r} and {ch!r} share a cell")
                digits[seq[0]] = ch
                continue
            if ch != ch.lower():
                raise TableError(f"table keys must be lowercase, got {ch!r}")
            if seq in decode:
                raise TableError(f"{decode[seq]!r} and {ch!r} share the cells {seq}")
            decode[seq] = ch
        signs = {self.capital, self.number, self.letter}
        if len(signs) != 3:
            raise TableError("capital, number and letter signs must differ")
        for seq in decode:
            if seq[0] in signs:
                raise TableError(f"{decode[seq]!r} starts with a prefix sign")
        object.__setattr__(self, "_decode", decode)
        object.__setattr__(self, "_digits", digits)

    @classmethod
    def parse(cls, text: str) -> "TranslationTable":
        chars: dict[str, tuple[int, ...]] = {}
        signs: dict[str, int] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            if not raw.strip() or raw.startswith("# ") or raw == "#":
                continue
            key, sep, value = raw.partition("\t")
            if not sep:
                raise TableError(f"line {lineno}: expected <char><TAB><dots>")
            try:
                cells = tuple(dots_to_mask(part) for part in value.split(","))
            except TableError as exc:
                raise TableError(f"line {lineno}: {exc}") from None
            if key in _SIGNS:
                if len(cells) != 1:
                    raise TableError(f"line {lineno}: {key} must be a single cell")
                signs[key] = cells[0]
            elif len(key) == 1:
                if key in chars:
                    raise TableError(f"line {lineno}: duplicate entry for {key!r}")
                chars[key] = cells
            else:
                raise TableError(f"line {lineno}: key {key!r} is not a single character")
        missing = [s for s in _SIGNS if s not in signs]
        if missing:
            raise TableError(f"table lacks sign entries: {', '.join(missing)}")
        return cls(chars, signs[CAPITAL], signs[NUMBER], signs[LETTER])

    @classmethod
    def load(cls, path: str | Path) -> "TranslationTable":
        return cls.parse(Path(path).read_text(encoding="utf-8"))

    def is_digit_cell(self, cell: int) -> bool:
        return cell in self._digits

    def encode(self, text: str) -> list[int]:
        cells: list[int] = []
        in_number = False
        for pos, ch in enumerate(text):
            if ch.isdigit() and ch in self.chars:
                if not in_number:
                    cells.append(self.number)
                    in_number = True
                cells.extend(self.chars[ch])
                continue
            lower = ch.lower()
            seq = self.chars.get(lower)
            if seq is None or lower.isdigit():
                raise UnsupportedCharacter(pos, ch)
            if lower != ch:
                cells.append(self.capital)
            elif in_number and seq[0] in self._digits:
                cells.append(self.letter)
            in_number = False
            cells.extend(seq)
        return cells

    def decode(self, cells: Sequence[int]) -> str:
        out: list[str] = []
        i = 0
        n = len(cells)
        in_number = False
        while i < n:
            cell = cells[i]
            if in_number and cell in self._digits:
                out.append(self._digits[cell])
                i += 1
                continue
            in_number = False
            if cell == self.number:
                if i + 1 >= n or cells[i + 1] not in self._digits:
                    raise UndecodableSequence(i, cell)
                in_number = True
                i += 1
                continue
            if cell == self.capital or cell == self.letter:
                ch, used = self._match(cells, i + 1)
                if ch is None or not ch.isalpha():
                    raise UndecodableSequence(i, cell)
                out.append(ch.upper() if cell == self.capital else ch)
                i += 1 + used
                continue
            ch, used = self._match(cells, i)
            if ch is None:
                raise UndecodableSequence(i, cell)
            out.append(ch)
            i += used
        return "".join(out)

    def _match(self, cells: Sequence[int], start: int) -> tuple[str | None, int]:
        longest = max(map(len, self._decode), default=0)
        for k in range(min(longest, len(cells) - start), 0, -1):
            ch = self._decode.get(tuple(cells[start:start + k]))
            if ch is not None:
                return ch, k
        return None, 0

DEFAULT = TranslationTable.parse(DEFAULT_TABLE)


def text_to_cells(text: str, table: TranslationTable = DEFAULT) -> list[int]:
    return table.encode(text)


def cells_to_text(cells: Sequence[int], table: TranslationTable = DEFAULT) -> str:
    return table.decode(cells)

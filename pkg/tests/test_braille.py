import pytest
from hypothesis import given, strategies as st

from braille_head.braille import (DEFAULT, TableError, TranslationTable, UndecodableSequence,
                                  UnsupportedCharacter, cell_to_columns, cell_to_unicode,
                                  cells_to_text, columns_to_cell, dots_to_mask, text_to_cells)
from conftest import ALPHABET
from oracles import unicode_cell


def test_empty():
    assert text_to_cells("") == []
    assert cells_to_text([]) == ""


def test_single_letters_match_unicode_patterns():
    # U+2801 is BRAILLE PATTERN DOTS-1, U+2803 DOTS-12
    assert text_to_cells("a") == [unicode_cell("⠁")]
    assert text_to_cells("ab") == [unicode_cell("⠁"), unicode_cell("⠃")]


def test_alphabet_against_unicode_names():
    import unicodedata
    dots = {"a": "1", "b": "12", "c": "14", "k": "13", "w": "2456", "z": "1356", "y": "13456"}
    for ch, expect in dots.items():
        (cell,) = text_to_cells(ch)
        assert unicodedata.name(cell_to_unicode(cell)) == f"BRAILLE PATTERN DOTS-{expect}"


def test_decode_single():
    assert cells_to_text([0b000001]) == "a"


def test_cat_9_round_trip():
    cells = text_to_cells("Cat 9")
    assert cells[0] == DEFAULT.capital
    assert DEFAULT.number in cells
    assert cells_to_text(cells) == "Cat 9"


def test_number_sign_once_per_run_and_letter_sign():
    cells = text_to_cells("a1a")
    assert cells.count(DEFAULT.number) == 1
    assert cells == [1, DEFAULT.number, 1, DEFAULT.letter, 1]
    assert cells_to_text(cells) == "a1a"
    assert text_to_cells("123").count(DEFAULT.number) == 1
    assert text_to_cells("1 2").count(DEFAULT.number) == 2


def test_letter_sign_only_for_a_to_j():
    assert DEFAULT.letter not in text_to_cells("1k")
    assert DEFAULT.letter not in text_to_cells("1A")
    assert DEFAULT.letter in text_to_cells("1j")


@pytest.mark.parametrize("text,pos", [("¤", 0), ("ab!", 2), ("x\ty", 1), ("é", 0)])
def test_unsupported(text, pos):
    with pytest.raises(UnsupportedCharacter) as exc:
        text_to_cells(text)
    assert exc.value.position == pos
    assert exc.value.char == text[pos]


@pytest.mark.parametrize("cells,index", [
    ([DEFAULT.number], 0),
    ([DEFAULT.capital, 2], 0),
    ([1, 63], 1),
])
def test_undecodable(cells, index):
    with pytest.raises(UndecodableSequence) as exc:
        cells_to_text(cells)
    assert exc.value.index == index


@pytest.mark.parametrize("cell,cols", [(0, (0, 0)), (0b001001, (0b001, 0b001)), (63, (7, 7))])
def test_column_split(cell, cols):
    assert cell_to_columns(cell) == cols


def test_column_split_join_exhaustive():
    for cell in range(64):
        assert columns_to_cell(*cell_to_columns(cell)) == cell


def test_unicode_bijection():
    chars = [cell_to_unicode(c) for c in range(64)]
    assert chars[0] == "⠀" and chars[1] == "⠁" and chars[63] == "⠿"
    assert sorted(map(ord, chars)) == list(range(0x2800, 0x2840))


def test_invalid_cell():
    with pytest.raises(ValueError):
        cell_to_unicode(64)


@given(st.text(alphabet=ALPHABET, max_size=60))
def test_round_trip(text):
    assert cells_to_text(text_to_cells(text)) == text


def test_table_file(tmp_path):
    path = tmp_path / "t.tsv"
    path.write_text("# tiny\na\t1\nb\t12\n!\t235\n \t0\nCAPITAL\t6\nNUMBER\t3456\nLETTER\t56\n",
                    encoding="utf-8")
    table = TranslationTable.load(path)
    assert text_to_cells("ab!", table) == [1, 3, dots_to_mask("235")]
    assert cells_to_text(text_to_cells("Ba !", table), table) == "Ba !"


def test_multi_cell_entries():
    table = TranslationTable.parse("a\t1\n%\t46,356\nCAPITAL\t6\nNUMBER\t3456\nLETTER\t56\n")
    cells = text_to_cells("a%a", table)
    assert cells == [1, dots_to_mask("46"), dots_to_mask("356"), 1]
    assert cells_to_text(cells, table) == "a%a"


@pytest.mark.parametrize("body", [
    "a\t1\nb\t1\nCAPITAL\t6\nNUMBER\t3456\nLETTER\t56\n",   # two chars share a cell
    "a\t1\n",                                               # no signs
    "a\t17\nCAPITAL\t6\nNUMBER\t3456\nLETTER\t56\n",        # bad dot number
    "ab\t1\nCAPITAL\t6\nNUMBER\t3456\nLETTER\t56\n",        # multi-char key
])
def test_bad_tables(body):
    with pytest.raises(TableError):
        TranslationTable.parse(body)

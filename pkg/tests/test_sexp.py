"""S-expression reader/printer round trips."""

from hypothesis import given, strategies as st

import pytest

from lctrs import sexp


def _nodes():
    atom = st.one_of(
        st.sampled_from(["f", "x", "->", "+", ":guard", "#b0101", "-2", "3.5"]),
        st.integers(-99, 99).map(str),
    )
    return st.recursive(atom, st.lists, max_leaves=15)


@given(_nodes())
def test_render_parse_roundtrip(node):
    assert sexp.parse_one(sexp.render(node)) == node


def test_parse_all_splits_toplevel_forms():
    forms = sexp.parse_all("(a b) c (d (e))")
    assert forms == [["a", "b"], "c", ["d", ["e"]]]


def test_comments_and_whitespace_are_ignored():
    text = "; header\n(rule  a\n  b) ; trailing\n"
    assert sexp.parse_all(text) == [["rule", "a", "b"]]


@pytest.mark.parametrize("bad", ["(a", "a)", "(a))", "", "( "])
def test_unbalanced_input_raises(bad):
    with pytest.raises(sexp.SexpError):
        if bad in ("", "( "):
            sexp.parse_one(bad)
        else:
            sexp.parse_all(bad)

import pytest
from hypothesis import given, strategies as st

from casim.errors import ValidationError
from casim.exprs import Expr


def test_arithmetic_and_names():
    e = Expr("x + y * 2 - 1")
    assert set(e.names) == {"x", "y"}
    assert e.eval({"x": 3, "y": 4}) == 10


def test_comparisons_and_boolean():
    assert Expr("x >= 0 and y < 10").eval({"x": 1, "y": 2})
    assert not Expr("not (x == 1)").eval({"x": 1})
    assert Expr("0 <= x <= 5").eval({"x": 3})


def test_floor_div_and_mod():
    assert Expr("x // 3").eval({"x": 10}) == 3
    assert Expr("x % 3").eval({"x": 10}) == 1


def test_unary_minus():
    assert Expr("-x + 5").eval({"x": 2}) == 3


@pytest.mark.parametrize("bad", [
    "x ** 2",
    "__import__('os')",
    "x.bit_length()",
    "[1, 2]",
    "x if y else 0",
    "1.5 + x",
    "f(x)",
])
def test_disallowed_constructs_rejected(bad):
    with pytest.raises(ValidationError):
        Expr(bad)


def test_syntax_error_rejected():
    with pytest.raises(ValidationError):
        Expr("x +")


@given(st.integers(-100, 100), st.integers(-100, 100))
def test_eval_agrees_with_python(x, y):
    text = "x * 2 - y % 7 + (x // 3) * (y + 1)"
    assert Expr(text).eval({"x": x, "y": y}) == eval(text)

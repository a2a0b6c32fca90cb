"""Expression front end and command-line surface: parse trees, error
positions, round-trips, golden invocations, exit codes."""

import io
import json
from contextlib import redirect_stdout
from fractions import Fraction

import pytest

from transseries import ParseError, PartialConstantError, X, make_monomial, parse
from transseries.cli import main
from transseries.parser import Binary, Num, Power, Unary, Var, parse_series
from transseries.series import equal_below, render_series
from transseries.monomial import mono_pow

from helpers import rand_finite_series, rng


# -- parsing ---------------------------------------------------------------------


def test_parse_division_tree():
    tree = parse("1/(1 - 1/x)")
    assert isinstance(tree, Binary) and tree.op == "/"
    assert isinstance(tree.left, Num) and tree.left.value == 1
    inner = tree.right
    assert isinstance(inner, Binary) and inner.op == "-"
    assert isinstance(inner.right, Binary) and inner.right.op == "/"
    assert isinstance(inner.right.right, Var)


def test_parse_function_applications():
    tree = parse("exp(x^2) * log(x)")
    assert isinstance(tree, Binary) and tree.op == "*"
    assert isinstance(tree.left, Unary) and tree.left.op == "exp"
    assert isinstance(tree.left.arg, Power)
    assert tree.left.arg.exponent == 2
    assert isinstance(tree.right, Unary) and tree.right.op == "log"


def test_parse_double_caret_position():
    with pytest.raises(ParseError) as exc:
        parse("x^^2")
    assert exc.value.position == 2


def test_parse_non_rational_exponent():
    with pytest.raises(ParseError):
        parse("x^y")
    with pytest.raises(ParseError):
        parse("x^(1/0)")


def test_parse_rational_exponents():
    s = parse_series("x^(3/2)")
    assert s.expand(mono_pow(X, Fraction(1))) == \
        {mono_pow(X, Fraction(3, 2)): Fraction(1)}
    s2 = parse_series("x^-1")
    assert s2.leading_term().mono is mono_pow(X, Fraction(-1))


def test_parse_decimal_literal_exact():
    s = parse_series("2.5*x")
    assert s.leading_term().coeff == Fraction(5, 2)


def test_parse_unknown_name_position():
    with pytest.raises(ParseError) as exc:
        parse("1 + sinh(x)")
    assert exc.value.position == 4


def test_elaborate_reports_spans():
    with pytest.raises(PartialConstantError) as exc:
        parse_series("x + exp(1)")
    assert "offset 4" in str(exc.value)


def test_parse_render_roundtrip_corpus():
    r = rng(2)
    done = 0
    while done < 100:
        s = rand_finite_series(r, 3, allow_exp=True)
        if s.leading_term() is None:
            continue
        text = render_series(s, 12)
        assert "O(" not in text
        back = parse_series(text)
        floor = min(s.expand(min(s.cert.bases)))
        assert equal_below(back, s, floor), f"round trip failed for {text}"
        done += 1


# -- CLI -------------------------------------------------------------------------


def run_cli(argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(argv)
    return code, buf.getvalue()


GOLDENS = [
    (["eval", "1/(1 - 1/x)"], 0,
     "1 + x^-1 + x^-2 + x^-3 + x^-4 + x^-5 + x^-6 + x^-7 + O(x^-8)\n"),
    (["eval", "exp(x^2) * log(x)", "--terms", "2"], 0,
     "log(x)*exp(x^2)\n"),
    (["eval", "log(exp(x))"], 0, "x\n"),
    (["eval", "(1 + 1/x)*(1 - 1/x)"], 0, "1 - x^-2\n"),
    (["eval", "exp(1/x)", "--terms", "4"], 0,
     "1 + x^-1 + 1/2*x^-2 + 1/6*x^-3 + O(x^-4)\n"),
    (["eval", "log(x^2 + x)", "--terms", "4"], 0,
     "2*log(x) + x^-1 - 1/2*x^-2 + 1/3*x^-3 + O(x^-4)\n"),
    (["eval", "x^(3/2)*log(x)^-1*exp(x^2)", "--terms", "3"], 0,
     "x^(3/2)*log(x)^-1*exp(x^2)\n"),
    (["eval", "2.5*x - 1/3"], 0, "5/2*x - 1/3\n"),
    (["derive", "exp(x^2)"], 0, "2*x*exp(x^2)\n"),
    (["derive", "x^2 + x"], 0, "2*x + 1\n"),
    (["derive", "1/(1 - 1/x)", "--terms", "4"], 0,
     "-x^-2 - 2*x^-3 - 3*x^-4 - 4*x^-5 + O(x^-6)\n"),
    (["compose", "log(x)", "exp(x)"], 0, "x\n"),
    (["compose", "1/x", "x^2"], 0, "x^-2\n"),
    # the composite is exactly 1 + 1/x; the O-marker records how far the
    # (sparse) certificate grid was searched
    (["compose", "1/(1 - 1/x)", "x + 1", "--terms", "4"], 0,
     "1 + x^-1 + O(x^-14)\n"),
    (["taylor", "1/x", "x", "1", "--terms", "6"], 0,
     "locus: certified_convergent\n"
     "lhs: x^-1 - x^-2 + x^-3 - x^-4 + x^-5 - x^-6 + O(x^-7)\n"
     "rhs: x^-1 - x^-2 + x^-3 - x^-4 + x^-5 - x^-6 + O(x^-7)\n"
     "EQUAL\n"),
    (["taylor", "log(x)", "x", "1", "--terms", "4"], 0,
     "locus: certified_convergent\n"
     "lhs: log(x) + x^-1 - 1/2*x^-2 + 1/3*x^-3 + O(x^-4)\n"
     "rhs: log(x) + x^-1 - 1/2*x^-2 + 1/3*x^-3 + O(x^-4)\n"
     "EQUAL\n"),
    (["taylor", "exp(x)", "x", "1"], 4,
     "locus: certified_divergent\n"
     "SKIPPED: locus certified_divergent: support monomial exp(x) has a "
     "non-shrinking transformed dagger\n"),
    (["taylor", "exp(x)", "x^2", "1/x", "--terms", "3"], 0,
     "locus: certified_convergent\n"
     "lhs: exp(x^2) + x^-1*exp(x^2) + 1/2*x^-2*exp(x^2) + O(x^-3*exp(x^2))\n"
     "rhs: exp(x^2) + x^-1*exp(x^2) + 1/2*x^-2*exp(x^2) + O(x^-3*exp(x^2))\n"
     "EQUAL\n"),
    (["locus", "exp(x)", "--op", "compose:x^2", "--delta", "1/x"], 0,
     "locus: certified_convergent\n"
     "detail: generator daggers shrink below 1 under the operator\n"
     "witness: exp(x) -> x^-1\n"),
    (["locus", "exp(x)", "--delta", "1"], 2,
     "locus: certified_divergent\n"
     "detail: support monomial exp(x) has a non-shrinking transformed dagger\n"
     "witness: exp(x) -> 1\n"),
    (["locus", "1/(1 - 1/x)", "--delta", "1"], 0,
     "locus: certified_convergent\n"
     "detail: generator daggers shrink below 1 under the operator\n"
     "witness: x^-1 -> x^-1\n"),
    (["cutcheck", "1/x", "--cut", "above:1/x^2"], 0,
     "series: sum (x^-1)^k * X^k\n"
     "cut: monomials > x^-2\n"
     "verdict: member\n"
     "witness: degree 0: 1\n"
     "witness: degree 1: x^-1\n"),
    (["cutcheck", "1/x", "--cut", "above:x"], 2,
     "series: sum (x^-1)^k * X^k\n"
     "cut: monomials > x\n"
     "verdict: non_member\n"
     "witness: (1, X^0) vs (x^-1, X^1)\n"
     "witness: (1, X^0) vs (x^-2, X^2)\n"),
    (["eval", "x^^2"], 3,
     "error: expected a rational exponent at offset 2\n"),
    (["eval", "exp(1)"], 3,
     "error: PartialConstantError: exp(1) is irrational; exact backend only "
     "knows exp(0) [at offset 0]\n"),
]


@pytest.mark.parametrize("argv,code,want", GOLDENS,
                         ids=[" ".join(g[0]) for g in GOLDENS])
def test_golden_invocations(argv, code, want):
    got_code, got = run_cli(argv)
    assert got == want
    assert got_code == code
    # byte-identity across repeated runs
    again_code, again = run_cli(argv)
    assert again == got and again_code == got_code


def test_golden_count_meets_acceptance():
    assert len(GOLDENS) >= 25


def test_json_schema():
    code, out = run_cli(["taylor", "1/x", "x", "1", "--terms", "4", "--json"])
    assert code == 0
    payload = json.loads(out)
    assert set(payload) == {"command", "verdict", "terms", "witnesses"}
    assert payload["verdict"] == "EQUAL"
    assert payload["terms"][0] == {"coeff": "1", "monomial": "x^-1"}
    # stable across runs
    _, out2 = run_cli(["taylor", "1/x", "x", "1", "--terms", "4", "--json"])
    assert out2 == out


def test_stdin_input(monkeypatch):
    import sys
    monkeypatch.setattr(sys, "stdin", io.StringIO("1/(1 - 1/x)"))
    code, out = run_cli(["eval", "-", "--terms", "3"])
    assert code == 0
    assert out == "1 + x^-1 + x^-2 + O(x^-3)\n"


def test_float_backend():
    code, out = run_cli(["eval", "exp(1)", "--backend", "float", "--terms", "2"])
    assert code == 0
    assert out.startswith("2.71828182846")


def test_exit_codes_match_verdicts():
    assert run_cli(["taylor", "1/x", "x", "1"])[0] == 0
    assert run_cli(["taylor", "exp(x)", "x", "1"])[0] == 4
    assert run_cli(["locus", "exp(x)", "--delta", "1"])[0] == 2
    assert run_cli(["cutcheck", "1/x", "--cut", "above:x"])[0] == 2
    assert run_cli(["eval", "x^^2"])[0] == 3

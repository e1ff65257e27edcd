import math

import numpy as np
import pytest

from mrseq import expr as ex
from mrseq.constants import GAMMA_BAR


def scope(**kwargs):
    return ex.VariableScope.from_strings({k: str(v) for k, v in kwargs.items()})


class TestParse:
    def test_two_token_sum(self):
        e = ex.parse("A+B")
        assert e.ast == ex.BinOp("+", ex.Ident("A"), ex.Ident("B"))

    def test_unary_minus_binds_below_power(self):
        e = ex.parse("-2^2")
        assert e.ast == ex.Neg(ex.BinOp("^", ex.Num(2.0), ex.Num(2.0)))
        assert ex.evaluate(e) == -4.0

    def test_dangling_operator_offset(self):
        with pytest.raises(ex.ExprSyntaxError) as err:
            ex.parse("1+")
        assert err.value.offset == 2

    def test_left_associativity(self):
        assert ex.evaluate("10-4-3") == 3.0
        assert ex.evaluate("24/4/2") == 3.0

    def test_power_right_associative(self):
        assert ex.evaluate("2^3^2") == 512.0

    def test_precedence(self):
        assert ex.evaluate("2+3*4") == 14.0
        assert ex.evaluate("(2+3)*4") == 20.0
        assert ex.evaluate("2*3^2") == 18.0

    def test_numbers(self):
        assert ex.evaluate("1.5e3") == 1500.0
        assert ex.evaluate(".5") == 0.5
        assert ex.evaluate("2E-3") == 0.002

    def test_whitespace(self):
        assert ex.evaluate("  1 +  2\t* 3 ") == 7.0

    @pytest.mark.parametrize("bad", ["", "   ", ")", "1+*2", "sin(", "f(1,)", "1..2", "@"])
    def test_rejects_malformed(self, bad):
        with pytest.raises(ex.ExprSyntaxError):
            ex.parse(bad)

    def test_error_carries_expectation(self):
        with pytest.raises(ex.ExprSyntaxError) as err:
            ex.parse("(1+2")
        assert "')'" in err.value.expected


class TestEvaluate:
    def test_paper_values(self):
        assert ex.evaluate("A+B", scope(A=45, B=30)) == 75.0

    def test_gamma_builtin(self):
        assert ex.evaluate("2*gamma") == 2 * GAMMA_BAR

    def test_minimal_cycle_lists_members(self):
        sc = ex.VariableScope.from_strings({"A": "B", "B": "A"})
        with pytest.raises(ex.CyclicDependencyError) as err:
            ex.evaluate("A", sc)
        assert set(err.value.cycle) == {"A", "B"}

    def test_division_by_zero(self):
        with pytest.raises(ex.DomainError):
            ex.evaluate("1/0")

    def test_sqrt_negative(self):
        with pytest.raises(ex.DomainError):
            ex.evaluate("sqrt(-1)")

    def test_log_nonpositive(self):
        with pytest.raises(ex.DomainError):
            ex.evaluate("log(0)")

    def test_nonfinite_overflow(self):
        with pytest.raises(ex.NonFiniteError):
            ex.evaluate("10^400")

    def test_unknown_identifier(self):
        with pytest.raises(ex.UnknownIdentifierError):
            ex.evaluate("A+missing", scope(A=1))

    def test_unknown_function(self):
        with pytest.raises(ex.UnknownIdentifierError):
            ex.evaluate("frob(1)")

    def test_functions(self):
        assert ex.evaluate("sin(0)") == 0.0
        assert ex.evaluate("cos(0)") == 1.0
        assert abs(ex.evaluate("tan(1)") - math.tan(1)) < 1e-15
        assert ex.evaluate("sqrt(9)") == 3.0
        assert ex.evaluate("exp(0)") == 1.0
        assert ex.evaluate("log(exp(2))") == 2.0
        assert ex.evaluate("abs(-3)") == 3.0
        assert ex.evaluate("floor(2.7)") == 2.0
        assert ex.evaluate("ceil(2.2)") == 3.0
        assert ex.evaluate("min(3, 5)") == 3.0
        assert ex.evaluate("max(3, 5)") == 5.0

    def test_min_max_are_binary(self):
        with pytest.raises(ex.EvalError):
            ex.evaluate("min(1)")
        with pytest.raises(ex.EvalError):
            ex.evaluate("max(1, 2, 3)")

    def test_transitive_references(self):
        sc = ex.VariableScope.from_strings({"a": "2", "b": "a*3", "c": "b+a"})
        assert ex.evaluate("c", sc) == 8.0

    def test_forward_references(self):
        # declaration order does not matter, only the dependency graph
        sc = ex.VariableScope.from_strings({"c": "b+a", "b": "a*3", "a": "2"})
        assert ex.evaluate("c", sc) == 8.0

    def test_bindings_layer(self):
        sc = scope(step="rep*2")
        derived = sc.with_bindings({"rep": 3.0})
        assert ex.evaluate("step", derived) == 6.0
        with pytest.raises(ex.UnknownIdentifierError):
            ex.evaluate("step", sc)

    def test_deterministic(self):
        sc = scope(a="sin(1.234)*exp(0.5)")
        v1 = ex.evaluate("a*a", sc)
        v2 = ex.evaluate("a*a", scope(a="sin(1.234)*exp(0.5)"))
        assert v1 == v2

    def test_reserved_names_rejected(self):
        with pytest.raises(ValueError):
            ex.VariableScope.from_strings({"gamma": "1"})
        with pytest.raises(ValueError):
            ex.VariableScope.from_strings({"rep": "1"})

    def test_invalid_names_rejected(self):
        with pytest.raises(ValueError):
            ex.VariableScope({"1bad": ex.parse("1")})


class TestFreeIdentifiers:
    def test_sum(self):
        assert ex.free_identifiers(ex.parse("A+B")) == {"A", "B"}

    def test_function_names_excluded(self):
        assert ex.free_identifiers(ex.parse("sin(x)*x")) == {"x"}

    def test_literal(self):
        assert ex.free_identifiers(ex.parse("3.5")) == set()


def random_ast(rng, depth=0):
    choice = rng.integers(0, 10)
    if depth > 5 or choice < 3:
        return ex.Num(float(round(rng.uniform(0, 100), 4)))
    if choice < 5:
        return ex.Ident(rng.choice(["a", "b2", "x_y", "gamma", "N_matrix"]))
    if choice < 6:
        return ex.Neg(random_ast(rng, depth + 1))
    if choice < 9:
        op = rng.choice(["+", "-", "*", "/", "^"])
        return ex.BinOp(op, random_ast(rng, depth + 1), random_ast(rng, depth + 1))
    fn = rng.choice(["sin", "cos", "sqrt", "exp", "abs", "floor", "ceil", "min", "max"])
    n_args = 2 if fn in ("min", "max") else 1
    return ex.Call(fn, tuple(random_ast(rng, depth + 1) for _ in range(n_args)))


class TestRoundTrip:
    def test_print_parse_identity_fuzz(self):
        rng = np.random.default_rng(20240811)
        for _ in range(1000):
            ast = random_ast(rng)
            printed = ex.to_source(ast)
            assert ex.parse(printed).ast == ast, printed

    def test_evaluation_preserved(self):
        rng = np.random.default_rng(7)
        sc = scope(a=1.5, b2=2.5, x_y=-0.25, N_matrix=64)
        checked = 0
        for _ in range(300):
            ast = random_ast(rng)
            try:
                v1 = ex.evaluate(ast, sc)
            except ex.EvalError:
                continue
            v2 = ex.evaluate(ex.parse(ex.to_source(ast)), sc)
            assert v1 == v2  # bit identical
            checked += 1
        assert checked > 100

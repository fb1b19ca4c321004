from __future__ import annotations

import pytest

from miniastree.alarms import AlarmKind, AlarmSink
from miniastree.analyzer import load_program
from miniastree.errors import ParseError, TypeCheckError, UnsupportedConstructError
from miniastree.frontend.parser import parse
from miniastree.frontend.simplify import simplify
from miniastree.frontend.typecheck import check
from miniastree.numeric.intervals import IntInterval


class TestParser:
    def test_corpus_parses(self, corpus):
        for name, text in corpus.items():
            decls, funs = parse(text, f"{name}.mc")
            assert funs, name

    def test_syntax_error_location(self):
        with pytest.raises(ParseError) as info:
            parse("int x;\nvoid main() {\n  x = ;\n}\n", "bad.mc")
        assert info.value.location.file == "bad.mc"
        assert info.value.location.line == 3

    def test_declarations_and_functions_share_type_rule(self):
        decls, funs = parse(
            "int x;\nfloat y[2];\nint f(int p) { return p; }\nvoid main() { int t; x = f(1); }\n"
        )
        assert [d.name for d in decls] == ["x", "y"]
        assert [(f.name, f.ret) for f in funs] == [("f", "int"), ("main", None)]

    def test_void_variable_rejected(self):
        with pytest.raises(ParseError, match="void"):
            parse("void v;\nvoid main() { }\n")

    def test_record_return_type_unsupported(self):
        with pytest.raises(UnsupportedConstructError):
            parse("struct { a: int; } f() { }\nvoid main() { }\n")

    def test_volatile_needs_range(self):
        with pytest.raises(ParseError):
            parse("volatile int I;\nvoid main() { }\n")


class TestTypeCheck:
    """型検査で弾くプログラム。"""

    @pytest.mark.parametrize(
        "source",
        [
            "void main() { y = 1; }",
            "volatile int I range [0, 1];\nvoid main() { I = 0; }",
            "int a[4];\nvoid main() { a[1.5] = 0; }",
            "void f(int x) { }\nvoid main() { f(); }",
            "void main(int x) { }",
            "bool b;\nvoid main() { b = 1.0; }",
        ],
    )
    def test_rejected(self, source):
        decls, funs = parse(source)
        with pytest.raises(TypeCheckError):
            check(decls, funs)

    def test_recursion_is_unsupported(self):
        decls, funs = parse("int x;\nint f() { int r; r = f(); return r; }\nvoid main() { x = f(); }")
        with pytest.raises(UnsupportedConstructError, match="recursion"):
            check(decls, funs)

    def test_call_in_condition_is_unsupported(self):
        decls, funs = parse("int x;\nint f() { return 1; }\nvoid main() { if (f() > 0) { x = 1; } }")
        with pytest.raises(UnsupportedConstructError):
            check(decls, funs)


class TestSimplify:
    def test_unused_input_is_pruned(self):
        program = load_program("volatile int U range [0, 1];\nint x;\nvoid main() { x = 1; }\n")
        assert list(program.pruned_inputs) == ["U"]
        assert [d.name for d in program.globals] == ["x"]

    def test_constant_folding(self, analyze_source):
        a = analyze_source("int x;\nvoid main() { x = 2 + 3 * 4; }\n")
        assert a.interval("x") == IntInterval.const(14)

    def test_certain_fault_is_kept(self, analyze_source):
        decls, funs = parse("int x;\nvoid main() { x = 1 / 0; }\n")
        _, faults = simplify(check(decls, funs))
        assert len(faults) == 1
        a = analyze_source("int x;\nvoid main() { x = 1 / 0; }\n")
        assert [al.kind for al in a.alarms] == [AlarmKind.DIV_ZERO]

    def test_fault_in_untaken_branch_is_reported(self, analyze_source):
        """畳み込みで見つけた確実なエラーは、分岐が通らなくても警告に残る。"""
        source = "int x;\nint y;\nvoid main() {\n  if (y > 0) {\n    x = 1 / 0;\n  }\n}\n"
        sink = AlarmSink()
        load_program(source, alarms=sink)
        assert [(al.kind, al.point.line) for al in sink.sorted()] == [(AlarmKind.DIV_ZERO, 5)]
        a = analyze_source(source)
        assert [al.kind for al in a.alarms] == [AlarmKind.DIV_ZERO]

    def test_fault_in_uncalled_function_is_dropped(self):
        sink = AlarmSink()
        load_program("int x;\nvoid dead() { x = 1 / 0; }\nvoid main() { x = 1; }\n", alarms=sink)
        assert len(sink) == 0

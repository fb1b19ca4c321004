from __future__ import annotations

from miniastree.alarms import AlarmKind
from miniastree.analyzer import build_layout, load_program
from miniastree.concrete import Interpreter, run


def _compile(text):
    program = load_program(text)
    return program, build_layout(program)


class TestInterpreter:
    """具体意味論の実行。"""

    def test_loop_result(self, corpus):
        program, layout = _compile(corpus["narrowing"])
        interp = Interpreter(program, layout)
        result = interp.run()
        assert result.fault is None
        assert interp.state.memory[("x", None)] == 100

    def test_overflow(self):
        program, layout = _compile("int x;\nvoid main() {\n  x = 2147483647;\n  x = x + 1;\n}\n")
        result = run(program, layout)
        assert result.fault is not None
        assert result.fault.kind is AlarmKind.OVERFLOW
        assert result.fault.point.line == 4

    def test_array_bounds(self):
        program, layout = _compile("int a[4];\nint i;\nvoid main() {\n  i = 5;\n  a[i] = 1;\n}\n")
        assert run(program, layout).fault.kind is AlarmKind.ARRAY_BOUNDS

    def test_c_division(self):
        program, layout = _compile("int q;\nint r;\nint n;\nvoid main() {\n  n = -7;\n  q = n / 2;\n  r = n % 2;\n}\n")
        interp = Interpreter(program, layout)
        interp.run()
        assert interp.state.memory[("q", None)] == -3
        assert interp.state.memory[("r", None)] == -1

    def test_ticks_and_truncation(self, corpus):
        program, layout = _compile(corpus["counter"])
        result = run(program, layout, seed=1, max_ticks=50)
        assert result.truncated
        assert result.ticks == 50
        assert result.fault is None

    def test_same_seed_same_trace(self, corpus):
        program, layout = _compile(corpus["filter"])
        first = run(program, layout, seed=7, max_ticks=30)
        second = run(program, layout, seed=7, max_ticks=30)
        assert first.trace == second.trace

    def test_observer_sees_heads_and_statements(self, corpus):
        program, layout = _compile(corpus["narrowing"])
        keys = set()
        run(program, layout, observer=lambda key, state: keys.add(key[1]))
        assert keys == {"head", "post"}

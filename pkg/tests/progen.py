"""
テスト用の小さなランダムプログラム生成器。

ループは専用のカウンタで回数を抑え、値も小さく保つ。
ゼロ除算や配列の範囲外アクセスはわざと起こりうるようにしてある。
"""
from __future__ import annotations

import random
from typing import List

INTS = ("g0", "g1", "g2")
FLOATS = ("f0", "f1")

HEADER = """\
volatile int VI range [-4, 4];
volatile float VF range [-2.0, 2.0];
volatile bool VB;

int g0;
int g1;
int g2;
float f0;
float f1;
bool b0;
int arr[4];
"""

HELPERS = """\
int h(int p) {
  int t;
  t = p * 2;
  if (t > 3) {
    t = t - 1;
  }
  return t;
}

void bump(inout float v, float d) {
  v = v + d;
}
"""


class ProgramGenerator:
    def __init__(self, rng: random.Random, max_stmts: int = 6, max_depth: int = 2) -> None:
        self.rng = rng
        self.max_stmts = max_stmts
        self.max_depth = max_depth
        self.counters: List[str] = []

    # --- 式 ---

    def int_leaf(self) -> str:
        r = self.rng.random()
        if r < 0.3:
            return str(self.rng.randint(-5, 5))
        if r < 0.7:
            return self.rng.choice(INTS)
        if r < 0.9:
            return "VI"
        return f"arr[{self.rng.randint(0, 3)}]"

    def int_expr(self, depth: int = 0) -> str:
        if depth >= 2 or self.rng.random() < 0.4:
            return self.int_leaf()
        op = self.rng.choice(["+", "-", "*", "/", "%", "<<"])
        left = self.int_expr(depth + 1)
        if op == "<<":
            return f"({left} << {self.rng.randint(0, 3)})"
        return f"({left} {op} {self.int_expr(depth + 1)})"

    def float_leaf(self) -> str:
        r = self.rng.random()
        if r < 0.3:
            return self.rng.choice(["0.5", "1.25", "-0.75", "2.0"])
        if r < 0.7:
            return self.rng.choice(FLOATS)
        if r < 0.9:
            return "VF"
        return f"(float) {self.int_leaf()}"

    def float_expr(self, depth: int = 0) -> str:
        if depth >= 2 or self.rng.random() < 0.4:
            return self.float_leaf()
        op = self.rng.choice(["+", "-", "*", "*", "/"])
        return f"({self.float_expr(depth + 1)} {op} {self.float_expr(depth + 1)})"

    def cond(self) -> str:
        r = self.rng.random()
        if r < 0.35:
            return f"{self.int_expr(1)} {self.rng.choice(['<', '<=', '==', '!=', '>'])} {self.int_expr(1)}"
        if r < 0.6:
            return f"{self.rng.choice(FLOATS)} {self.rng.choice(['<', '>'])} {self.float_leaf()}"
        if r < 0.75:
            return self.rng.choice(["b0", "!b0", "VB", "!VB"])
        return f"{self.rng.choice(INTS)} > 0 && VB"

    # --- 文 ---

    def stmt(self, depth: int, indent: str) -> List[str]:
        r = self.rng.random()
        if r < 0.25:
            return [f"{indent}{self.rng.choice(INTS)} = {self.int_expr()};"]
        if r < 0.45:
            return [f"{indent}{self.rng.choice(FLOATS)} = {self.float_expr()};"]
        if r < 0.5:
            return [f"{indent}b0 = {self.cond()};"]
        if r < 0.57:
            index = self.rng.choice(["VI", "g0 % 4", str(self.rng.randint(0, 3))])
            return [f"{indent}arr[{index}] = {self.int_expr(1)};"]
        if r < 0.62:
            return [f"{indent}{self.rng.choice(INTS)} = h({self.int_expr(1)});"]
        if r < 0.67:
            return [f"{indent}bump({self.rng.choice(FLOATS)}, {self.float_leaf()});"]
        if r < 0.85 and depth < self.max_depth:
            lines = [f"{indent}if ({self.cond()}) {{"]
            lines += self.block(depth + 1, indent + "  ")
            if self.rng.random() < 0.5:
                lines.append(f"{indent}}} else {{")
                lines += self.block(depth + 1, indent + "  ")
            lines.append(f"{indent}}}")
            return lines
        if depth < self.max_depth:
            k = f"k{len(self.counters)}"
            self.counters.append(k)
            lines = [f"{indent}{k} = 0;", f"{indent}while ({k} < {self.rng.randint(1, 4)}) {{"]
            lines += self.block(depth + 1, indent + "  ")
            if self.rng.random() < 0.3:
                lines.append(f"{indent}  wait_tick;")
            lines += [f"{indent}  {k} = {k} + 1;", f"{indent}}}"]
            return lines
        return [f"{indent}{self.rng.choice(INTS)} = {self.int_leaf()};"]

    def block(self, depth: int, indent: str) -> List[str]:
        lines: List[str] = []
        for _ in range(self.rng.randint(1, max(1, self.max_stmts - 2 * depth))):
            lines += self.stmt(depth, indent)
        return lines

    def program(self) -> str:
        body = self.block(0, "  ")
        counters = "".join(f"int {k};\n" for k in self.counters)
        return HEADER + counters + "\n" + HELPERS + "\nvoid main() {\n" + "\n".join(body) + "\n}\n"


def generate(rng: random.Random, **kwargs) -> str:
    return ProgramGenerator(rng, **kwargs).program()

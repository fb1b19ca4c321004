from __future__ import annotations

import re

from miniastree.analyzer import analyze, build_layout, load_program
from miniastree.config import DEFAULT_CONFIG
from miniastree.packing import compute_packing, read_pack_ids

PACK_ID = re.compile(r"^(octagon|tree|ellipsoid)-[0-9a-f]{12}$")


def _packing(text):
    program = load_program(text)
    layout = build_layout(program)
    return compute_packing(program, layout), layout


class TestPackInference:
    """構文から作るパック。"""

    def test_octagon_packs(self, corpus):
        packing, layout = _packing(corpus["octagon"])
        assert packing.octagon_packs
        assert all(PACK_ID.match(p.id) for p in packing.all_packs())
        assert any(layout.scalar_cell("L") in p.cells for p in packing.octagon_packs)

    def test_filter_pack(self, corpus):
        packing, layout = _packing(corpus["filter"])
        assert len(packing.filter_packs) == 1
        pack = packing.filter_packs[0]
        # 代入先 P も同じパックに入る
        assert set(pack.cells) == {layout.scalar_cell(n) for n in ("X", "Y", "P")}
        assert packing.stats.filters == 1

    def test_tree_pack(self, corpus):
        packing, layout = _packing(corpus["decision_tree"])
        assert any(layout.scalar_cell("B") in p.bools for p in packing.tree_packs)

    def test_ids_are_stable(self, corpus):
        first, _ = _packing(corpus["octagon"])
        second, _ = _packing(corpus["octagon"])
        assert [p.id for p in first.all_packs()] == [p.id for p in second.all_packs()]


REUSE_SOURCE = """\
volatile float IX range [0.0, 100.0];
volatile float IZ range [0.0, 100.0];
volatile float IV range [0.0, 100.0];
volatile bool VB;

float X;
float Z;
float V;
float R;
float L;
float W;

void main() {
  X = IX;
  Z = IZ;
  V = IV;
  R = X - Z;
  L = X;
  if (R > V) {
    L = Z + V;
  }
  if (VB) {
    W = X + 1.0;
  }
}
"""


class TestUsefulPacks:
    """有用だったオクタゴンだけで再解析しても結果は変わらない。"""

    def test_reuse_round(self, tmp_path):
        src = tmp_path / "octagon.mc"
        src.write_text(REUSE_SOURCE, encoding="utf-8")
        useful = tmp_path / "useful.txt"

        first = analyze(str(src), DEFAULT_CONFIG.replace(emit_useful_packs=str(useful)))
        ids = read_pack_ids(useful)
        assert ids == first.useful_packs
        assert ids

        second = analyze(str(src), DEFAULT_CONFIG.replace(packs_file=str(useful)))
        instantiated = second.stats["instantiated_packs"].get("octagon", 0)
        assert instantiated == len(ids)
        assert instantiated < first.stats["instantiated_packs"]["octagon"]
        assert [a.format() for a in second.alarms] == [a.format() for a in first.alarms]

    def test_unknown_ids_are_ignored(self, tmp_path, corpus):
        src = tmp_path / "octagon.mc"
        src.write_text(corpus["octagon"], encoding="utf-8")
        packs = tmp_path / "packs.txt"
        packs.write_text("octagon-000000000000\n", encoding="utf-8")
        report = analyze(str(src), DEFAULT_CONFIG.replace(packs_file=str(packs)))
        assert report.stats["instantiated_packs"].get("octagon", 0) == 0

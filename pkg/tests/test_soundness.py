from __future__ import annotations

import random

import pytest

from miniastree.concrete import run
from progen import generate

PROGRAMS = 60
RUNS = 6
# `pytest -m campaign` で回す大きな突き合わせ
CAMPAIGN_PROGRAMS = 1000
CAMPAIGN_RUNS = 100


def _check_runs(analysis, seeds, max_ticks=50, max_steps=5000):
    """具体実行の各状態が不変条件に含まれ、エラーには必ず警告があること。"""
    ctx, layout, invariants = analysis.ctx, analysis.layout, analysis.invariants
    alarms = {(a.point.uid, a.kind) for a in analysis.alarms}
    escaped = []

    def observer(key, state):
        env = invariants.get(key)
        if env is None or not env.contains(ctx, state.cell_values(layout)):
            escaped.append(key)

    for seed in seeds:
        result = run(
            analysis.program,
            layout,
            seed=seed,
            max_ticks=max_ticks,
            max_steps=max_steps,
            machine=analysis.config.machine(),
            observer=observer,
        )
        assert not escaped, f"seed {seed}: states outside the invariant at {escaped[:3]}"
        if result.fault is not None:
            assert (result.fault.point.uid, result.fault.kind) in alarms, f"seed {seed}: unreported {result.fault}"


class TestGeneratedPrograms:
    """ランダムなプログラムでの具体実行との突き合わせ。"""

    @pytest.mark.parametrize("seed", range(PROGRAMS))
    def test_concrete_runs_are_covered(self, seed, analyze_source):
        text = generate(random.Random(seed))
        analysis = analyze_source(text)
        _check_runs(analysis, range(RUNS))

    @pytest.mark.campaign
    @pytest.mark.parametrize("seed", range(PROGRAMS, PROGRAMS + CAMPAIGN_PROGRAMS))
    def test_campaign(self, seed, analyze_source):
        text = generate(random.Random(seed))
        _check_runs(analyze_source(text), range(CAMPAIGN_RUNS))

    def test_generator_is_deterministic(self):
        assert generate(random.Random(5)) == generate(random.Random(5))


class TestCorpusPrograms:
    @pytest.mark.parametrize(
        "name",
        ["octagon", "filter", "decision_tree", "counter", "narrowing", "partition", "linearization", "delayed", "div_zero", "clean", "features"],
    )
    def test_concrete_runs_are_covered(self, name, corpus, analyze_source):
        _check_runs(analyze_source(corpus[name]), range(3), max_ticks=200)

    def test_clean_program_never_faults(self, corpus, analyze_source):
        analysis = analyze_source(corpus["clean"])
        assert analysis.alarms == []
        for seed in range(10):
            assert run(analysis.program, analysis.layout, seed=seed).fault is None

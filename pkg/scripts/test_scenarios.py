#!/usr/bin/env python3
"""
Testes da enumeração de cenários de falha

Uso:
    python scripts/test_scenarios.py
    pytest scripts/test_scenarios.py -v
"""

import itertools
import math
import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), ".."))

from core.errors import ScenarioLimitError
from core.scenarios import (
    KIND_COMPLETE,
    KIND_PARTIAL,
    NO_FAILURE,
    FailureScenario,
    ScenarioSet,
    count_scenarios,
    enumerate_scenarios,
)


def test_sixteen_dampers_singles_and_pairs():
    scenarios = enumerate_scenarios(16, complete_k=1, partial_k=2, nu=0.5)
    assert scenarios.n_c == 16
    assert scenarios.n_p == 120
    assert scenarios.n_fs == 137
    assert count_scenarios(16, 1, 2) == 137


def test_ids_are_dense_and_no_failure_first():
    scenarios = enumerate_scenarios(16, complete_k=1, partial_k=2, nu=0.5)
    assert scenarios.ids == tuple(range(137))
    assert scenarios[0].is_no_failure
    assert scenarios[1].damaged == (0,) and scenarios[1].kind == KIND_COMPLETE
    assert scenarios[16].damaged == (15,)
    assert scenarios[17].damaged == (0, 1) and scenarios[17].kind == KIND_PARTIAL
    assert scenarios[136].damaged == (14, 15)


def test_lexicographic_subsets():
    scenarios = enumerate_scenarios(5, complete_k=2)
    assert [s.damaged for s in scenarios][1:] == list(itertools.combinations(range(5), 2))


@pytest.mark.parametrize("n_d,ck,pk", [(4, 1, 2), (6, 2, None), (7, None, 3), (3, 0, 1), (5, 5, 5)])
def test_count_matches_binomials(n_d, ck, pk):
    scenarios = enumerate_scenarios(n_d, ck, pk, nu=0.3)
    expected = 1 + (math.comb(n_d, ck) if ck else 0) + (math.comb(n_d, pk) if pk else 0)
    assert len(scenarios) == expected == count_scenarios(n_d, ck, pk)
    assert len({(s.damaged, s.kind) for s in scenarios}) == expected


def test_disabled_groups_leave_only_no_failure():
    scenarios = enumerate_scenarios(4, complete_k=0, partial_k=None)
    assert len(scenarios) == 1
    assert scenarios[0] is NO_FAILURE


def test_retention_vectors():
    scenarios = enumerate_scenarios(4, complete_k=1, partial_k=2, nu=0.5)
    np.testing.assert_array_equal(scenarios[0].retention(4), np.ones(4))
    np.testing.assert_array_equal(scenarios[3].retention(4), [1.0, 1.0, 0.0, 1.0])
    partial = next(s for s in scenarios if s.damaged == (1, 3))
    np.testing.assert_array_equal(partial.retention(4), [1.0, 0.5, 1.0, 0.5])


def test_per_damper_factors_override_group_factor():
    scenario = FailureScenario(id=1, damaged=(0, 2), factor=0.5, kind=KIND_PARTIAL, per_damper=((2, 0.25),))
    np.testing.assert_array_equal(scenario.retention(3), [0.5, 1.0, 0.25])


def test_labels_are_one_based():
    scenarios = enumerate_scenarios(5, complete_k=1, partial_k=2, nu=0.5)
    assert scenarios.describe(0) == "no-failure"
    assert scenarios.describe(3) == "complete{3}"
    partial = next(s for s in scenarios if s.damaged == (1, 4))
    assert partial.label() == "partial{2,5}@0.5"


def test_cap_is_enforced():
    with pytest.raises(ScenarioLimitError):
        enumerate_scenarios(30, complete_k=10, cap=1000)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        enumerate_scenarios(4, complete_k=5)
    with pytest.raises(ValueError):
        enumerate_scenarios(4, partial_k=1, nu=1.0)
    with pytest.raises(ValueError):
        FailureScenario(id=1, damaged=(0, 0))
    with pytest.raises(ValueError):
        ScenarioSet(scenarios=(FailureScenario(id=0, damaged=(1,)),), n_dampers=2)


def test_subset_and_records():
    scenarios = enumerate_scenarios(3, complete_k=1)
    picked = scenarios.subset([0, 2])
    assert [s.id for s in picked] == [0, 2]
    records = scenarios.to_records()
    assert records[2] == {"id": 2, "label": "complete{2}", "damaged": [2], "factor": 0.0}
    assert len(ScenarioSet.no_failure_only(3)) == 1


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))

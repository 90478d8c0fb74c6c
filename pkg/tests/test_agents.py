from __future__ import annotations

import pytest

import stackpilot as sp
from stackpilot.agents import RUNNING, SUSPENDED
from stackpilot.errors import ArityMismatch, MalformedTrace, NoPendingCall


def _fn(src: str):
    return sp.extract_functions(src, "minilang")[0]


IDENTITY = _fn("def f(x):\n    return x\n")
FIND = _fn("def find(parent, x):\n    return parent[x]\n")


class TestInstantiate:
    def test_identity_binding(self):
        agent = sp.instantiate_agent(IDENTITY, [7], 1)
        assert agent.locals == {"x": 7}
        assert agent.pointer == "L1"
        assert agent.status == "ready"
        assert agent.logs == []

    def test_positional_binding(self):
        agent = sp.instantiate_agent(FIND, [[0, 1, 1], 2], 1)
        assert agent.locals == {"parent": [0, 1, 1], "x": 2}

    def test_arity_mismatch(self):
        with pytest.raises(ArityMismatch):
            sp.instantiate_agent(IDENTITY, [], 1)

    def test_args_are_copied(self):
        parent = [0, 1]
        agent = sp.instantiate_agent(FIND, [parent, 0], 1)
        parent.append(99)
        assert agent.locals["parent"] == [0, 1]


class TestBindReturn:
    def _suspended(self, binding):
        agent = sp.instantiate_agent(IDENTITY, [1], 1)
        agent.status = SUSPENDED
        agent.has_pending_call = True
        agent.pending_result_binding = binding
        return agent

    def test_named_binding(self):
        agent = self._suspended("r")
        sp.bind_return(agent, 5)
        assert agent.locals["r"] == 5
        assert agent.status == RUNNING
        assert agent.just_returned == 5

    def test_discarded_return_goes_to_log(self):
        agent = self._suspended(None)
        before = dict(agent.locals)
        sp.bind_return(agent, 5)
        assert agent.locals == before
        assert agent.logs == ["discarded return: 5"]

    def test_bind_on_running_agent(self):
        agent = sp.instantiate_agent(IDENTITY, [1], 1)
        agent.status = RUNNING
        with pytest.raises(NoPendingCall):
            sp.bind_return(agent, 5)


class TestIsolation:
    def test_two_invocations_never_share_locals(self):
        a = sp.instantiate_agent(FIND, [[1, 2], 0], 1)
        b = sp.instantiate_agent(FIND, [[3, 4], 1], 2)
        a.locals["parent"][0] = 99
        a.locals["scratch"] = "private"
        assert b.locals == {"parent": [3, 4], "x": 1}
        assert (a.appearance_index, b.appearance_index) == (1, 2)

    def test_recursive_appearance_indices_distinct(self, factorial_program):
        result = sp.run(factorial_program, [4], sp.ReferenceExecutor())
        pushes = [e.agent for e in result.trace if e.kind == "push"]
        assert pushes == [("factorial", i) for i in range(1, 6)]


class TestCollaborationGraph:
    def test_single_call_two_edges(self):
        program = sp.parse_bundle(
            "def main():\n    r = g(2)\n    return r\n\ndef g(x):\n    return x\n"
        )
        result = sp.run(program, [], sp.ReferenceExecutor())
        graph = sp.derive_collaboration_graph(result.trace)
        assert graph.nodes == (("main", 1), ("g", 1))
        assert [(e.src, e.dst, e.role) for e in graph.edges] == [
            (("main", 1), ("g", 1), "call_args"),
            (("g", 1), ("main", 1), "return_value"),
        ]

    def test_union_find_edge_counts_match_oracle(self, union_find_program):
        from oracle import run_oracle

        args = [[2, 3, 6]]
        result = sp.run(
            union_find_program, args, sp.ReferenceExecutor(), sp.Limits(max_steps=100_000)
        )
        graph = sp.derive_collaboration_graph(result.trace)
        oracle = run_oracle(union_find_program, args)
        cross_calls = [c for c in oracle.calls if c[0] is not None]
        call_edges = [e for e in graph.edges if e.role == "call_args"]
        return_edges = [e for e in graph.edges if e.role == "return_value"]
        assert len(call_edges) == len(cross_calls)
        assert len(return_edges) == len(cross_calls)
        # edge multiset by function names matches the oracle's dynamic calls
        assert sorted((e.src[0], e.dst[0]) for e in call_edges) == sorted(cross_calls)

    def test_empty_trace(self):
        graph = sp.derive_collaboration_graph([])
        assert graph.nodes == ()
        assert graph.edges == ()

    def test_unbalanced_trace_rejected(self):
        with pytest.raises(MalformedTrace):
            sp.derive_collaboration_graph(
                [{"kind": "push", "agent": {"name": "f", "idx": 1}}]
            )

    def test_accepts_record_dicts(self):
        records = [
            {"kind": "push", "agent": {"name": "main", "idx": 1}},
            {"kind": "call", "agent": {"name": "main", "idx": 1}},
            {"kind": "push", "agent": {"name": "g", "idx": 1}},
            {"kind": "return", "agent": {"name": "g", "idx": 1}},
            {"kind": "pop", "agent": {"name": "g", "idx": 1}},
            {"kind": "return", "agent": {"name": "main", "idx": 1}},
            {"kind": "pop", "agent": {"name": "main", "idx": 1}},
        ]
        graph = sp.derive_collaboration_graph(records)
        assert len(graph.edges) == 2

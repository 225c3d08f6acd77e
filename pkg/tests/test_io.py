import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphchannel.engine import PlantedInstance, count_solutions, sample_instance
from graphchannel.hypergraphs import EnsembleParams, Hypergraph, sample_poisson
from graphchannel.io import (
    FormatError,
    check_assignment,
    content_hash,
    dumps,
    instance_from_dict,
    instance_to_dict,
    manifest,
    parse_dimacs,
    rows_to_csv,
    to_dimacs,
)
from graphchannel.kernels import bsc, make_encoded_kernel, make_ksat_kernel, make_nae_kernel, make_xor_kernel
from graphchannel.rng import stream

CSP = {"ksat": make_ksat_kernel, "nae": make_nae_kernel, "xor": make_xor_kernel}


def single_clause(y=0b000):
    return PlantedInstance(Hypergraph(3, 3, (((0, 1, 2), 1),)), make_ksat_kernel(3), 0b000, ((y,),))


class TestDimacs:
    def test_ksat_clause_forbids_complement(self):
        text = to_dimacs(single_clause(0b101))
        assert text.splitlines() == ["c planted 0", "c kernel ksat:3", "p cnf 3 1", "1 -2 3 0"]
        # only x = complement(y) = 010 violates the clause
        bad = [x for x in range(8) if not check_assignment(text, x)]
        assert bad == [0b010]

    def test_nae_pair(self):
        inst = PlantedInstance(Hypergraph(3, 3, (((0, 1, 2), 1),)), make_nae_kernel(3), 0b000, ((0b011,),))
        text = to_dimacs(inst)
        assert [x for x in range(8) if not check_assignment(text, x)] == [0b011, 0b100]

    def test_xor_line(self):
        for y in (0, 1):
            inst = PlantedInstance(Hypergraph(2, 2, (((0, 1), 1),)), make_xor_kernel(2), y, ((y,),))
            text = to_dimacs(inst)
            assert text.splitlines()[-1].startswith("x")
            assert [x for x in range(4) if check_assignment(text, x)] == [x for x in range(4) if bin(x).count("1") % 2 == y]

    def test_non_csp_rejected(self):
        inst = sample_instance(Hypergraph.empty(3, 2), make_encoded_kernel(bsc(0.1), 2), stream(0))
        with pytest.raises(FormatError):
            to_dimacs(inst)

    def test_parse_errors(self):
        with pytest.raises(FormatError):
            parse_dimacs("1 2 0\n")
        with pytest.raises(FormatError):
            parse_dimacs("p cnf 2 1\n1 2\n")
        with pytest.raises(FormatError):
            check_assignment("p cnf 2 1\n1 2 0\n")

    @settings(max_examples=50, deadline=None)
    @given(tag=st.sampled_from(sorted(CSP)), k=st.integers(2, 3), n=st.integers(3, 9), alpha=st.floats(0, 3),
           seed=st.integers(0, 2**32))
    def test_planted_satisfies_and_counts_agree(self, tag, k, n, alpha, seed):
        kernel = CSP[tag](k)
        g = sample_poisson(EnsembleParams(n, k, alpha), stream(seed, "g"))
        inst = sample_instance(g, kernel, stream(seed, "y"))
        text = to_dimacs(inst)
        assert check_assignment(text)
        nvars, constraints, planted = parse_dimacs(text)
        assert (nvars, planted) == (n, inst.x)
        per_copy = 2 if tag == "nae" else 1
        assert len(constraints) == per_copy * g.n_copies
        # the formula's model count is the engine's count of consistent assignments
        assert sum(check_assignment(text, x) for x in range(2**n)) == count_solutions(g, kernel, inst.y)


class TestJson:
    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32), n=st.integers(2, 8))
    def test_instance_round_trip(self, seed, n):
        kernel = make_encoded_kernel(bsc(0.2), 2)
        inst = sample_instance(sample_poisson(EnsembleParams(n, 2, 1.5), stream(seed)), kernel, stream(seed, 1))
        back = instance_from_dict(json.loads(dumps(instance_to_dict(inst))))
        assert (back.graph, back.kernel, back.x, back.y) == (inst.graph, inst.kernel, inst.x, inst.y)

    def test_spec_recorded(self):
        d = instance_to_dict(single_clause(), "ksat:3")
        assert d["kernel"]["spec"] == "ksat:3" and d["x"] == "0x0"

    def test_malformed(self):
        with pytest.raises(FormatError):
            instance_from_dict({"graph": {}})

    def test_dumps_is_canonical(self):
        assert dumps({"b": 1, "a": [1, 2]}) == '{\n  "a": [\n    1,\n    2\n  ],\n  "b": 1\n}\n'


class TestCsvAndManifest:
    def test_csv(self):
        text = rows_to_csv([{"a": 1, "b": 0.1}, {"a": 2, "c": "x"}])
        assert text == "a,b,c\n1,0.1,\n2,,x\n"
        assert rows_to_csv([]) == ""

    def test_float_round_trip(self):
        v = 1 / 3
        assert float(rows_to_csv([{"v": v}]).splitlines()[1]) == v

    def test_manifest_hash_ignores_threads_and_out(self):
        a = manifest("subadd", {"seed": 1, "threads": 1, "out": "a", "alpha": 0.5}, 1)
        b = manifest("subadd", {"seed": 1, "threads": 4, "out": "b", "alpha": 0.5}, 1)
        c = manifest("subadd", {"seed": 1, "threads": 1, "out": "a", "alpha": 1.0}, 1)
        assert a["input_hash"] == b["input_hash"] != c["input_hash"]
        assert a["config"]["threads"] == 1  # still echoed
        assert content_hash({"x": 1}).startswith("sha256:")

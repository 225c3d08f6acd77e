import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphchannel.engine import (
    BudgetExceeded,
    EngineError,
    EntropyEstimate,
    Infeasible,
    PlantedInstance,
    ZeroMarginal,
    components,
    count_solutions,
    draw_observations,
    edge_derivative_check,
    ensemble_entropy,
    entropy_given_y,
    exact_conditional_entropy,
    exact_output_entropy,
    graph_entropy,
    mc_conditional_entropy,
    mutual_information,
    posterior,
    predictive_entropy,
    sample_instance,
)
from graphchannel.hypergraphs import EnsembleParams, Hypergraph, sample_poisson
from graphchannel.kernels import (
    KernelError,
    SbmParams,
    bec,
    bsc,
    kernel_entropy,
    make_encoded_kernel,
    make_ksat_kernel,
    make_nae_kernel,
    make_sbm_kernel,
    make_xor_kernel,
)
from graphchannel.rng import stream

from oracles import brute_conditional_entropy, brute_count, brute_output_entropy, brute_posterior_entropy

LOG7 = math.log2(7)

KERNELS = {
    "xor2": make_xor_kernel(2),
    "ksat2": make_ksat_kernel(2),
    "nae2": make_nae_kernel(2),
    "bsc2": make_encoded_kernel(bsc(0.1), 2),
    "bec2": make_encoded_kernel(bec(0.3), 2),
    "sbm": make_sbm_kernel(SbmParams(2, 5, 8)),
    "xor3": make_xor_kernel(3),
    "ksat3": make_ksat_kernel(3),
}


def clause(n=3):
    return Hypergraph(n, 3, (((0, 1, 2), 1),))


class TestSampling:
    def test_empty_graph(self):
        inst = sample_instance(Hypergraph.empty(4, 2), make_xor_kernel(2), stream(0))
        assert inst.y == ()

    def test_planted_x_uniform(self):
        xs = [sample_instance(Hypergraph.empty(2, 1), make_xor_kernel(1), stream(1, i)).x for i in range(8000)]
        counts = np.bincount(xs, minlength=4)
        assert ((counts - 2000) ** 2 / 2000).sum() < 11.345  # chi-square df 3 at 1%

    def test_xor_symbols_are_parities(self):
        g = sample_poisson(EnsembleParams(8, 3, 2.0), stream(2))
        inst = sample_instance(g, make_xor_kernel(3), stream(3))
        for (s, _), ys in zip(g.edges, inst.y):
            assert all(y == sum(inst.x_bits()[v] for v in s) % 2 for y in ys)

    def test_ksat_symbol_frequencies(self):
        g = Hypergraph(3, 3, (((0, 1, 2), 100_000),))
        kernel = make_ksat_kernel(3)
        x = 0b010
        ys = np.array(draw_observations(g, kernel, x, stream(4))[0])
        counts = np.bincount(ys, minlength=8)
        assert counts[x ^ 7] == 0
        expected = 100_000 / 7
        allowed = np.delete(counts, x ^ 7)
        assert ((allowed - expected) ** 2 / expected).sum() < 16.812  # df 6 at 1%

    def test_arity_mismatch(self):
        with pytest.raises(EngineError):
            sample_instance(Hypergraph.empty(4, 3), make_xor_kernel(2), stream(0))

    def test_instance_validation(self):
        g = Hypergraph(2, 2, (((0, 1), 1),))
        k = make_xor_kernel(2)
        with pytest.raises(EngineError):
            PlantedInstance(g, k, 0b11, ((1,),))
        with pytest.raises(EngineError):
            PlantedInstance(g, k, 0, ((0, 0),))
        with pytest.raises(EngineError):
            PlantedInstance(g, k, 0, ((2,),))
        with pytest.raises(EngineError):
            PlantedInstance(g, k, 4, ((0,),))


class TestPosterior:
    def test_empty(self):
        post = posterior(Hypergraph.empty(3, 2), make_xor_kernel(2), ())
        assert np.allclose(post.weights, 1 / 8)
        assert post.log_marginal == 0.0
        assert post.entropy() == 3.0

    def test_xor_edge(self):
        post = posterior(Hypergraph(2, 2, (((0, 1), 1),)), make_xor_kernel(2), ((0,),))
        assert np.allclose(post.weights, [0.5, 0, 0, 0.5])
        assert entropy_given_y(Hypergraph(2, 2, (((0, 1), 1),)), make_xor_kernel(2), ((0,),)) == 1.0

    def test_single_clause(self):
        kernel = make_ksat_kernel(3)
        for y in range(8):
            if y == 7:  # complement of x = 000 is forbidden
                continue
            post = posterior(clause(), kernel, ((y,),))
            support = set(np.flatnonzero(post.weights))
            assert support == set(range(8)) - {y ^ 7}
            assert entropy_given_y(clause(), kernel, ((y,),)) == pytest.approx(LOG7, abs=1e-12)

    def test_zero_marginal(self):
        g = Hypergraph(2, 2, (((0, 1), 2),))
        with pytest.raises(ZeroMarginal):
            posterior(g, make_xor_kernel(2), ((0, 1),))

    def test_many_copies_no_underflow(self):
        g = Hypergraph(4, 2, (((0, 1), 60), ((1, 2), 60), ((2, 3), 60)))
        kernel = make_encoded_kernel(bsc(0.1), 2)
        inst = sample_instance(g, kernel, stream(5))
        post = posterior(g, kernel, inst.y)
        assert post.weights.sum() == pytest.approx(1.0, abs=1e-10)
        assert np.isfinite(post.log_marginal) and post.log_marginal < -60

    def test_log_marginal_matches_direct_sum(self):
        g = Hypergraph(3, 2, (((0, 1), 1), ((1, 2), 2)))
        kernel = KERNELS["bec2"]
        inst = sample_instance(g, kernel, stream(6))
        direct = 0.0
        for x in range(8):
            p = 1 / 8
            for (s, _), ys in zip(g.edges, inst.y):
                u = ((x >> s[0]) & 1) | (((x >> s[1]) & 1) << 1)
                for y in ys:
                    p *= kernel.table[u, y]
            direct += p
        assert posterior(g, kernel, inst.y).log_marginal == pytest.approx(math.log2(direct), abs=1e-12)

    def test_size_guard(self):
        with pytest.raises(Infeasible):
            posterior(Hypergraph.empty(27, 2), make_xor_kernel(2), ())


class TestCount:
    def test_examples(self):
        assert count_solutions(Hypergraph.empty(5, 2), make_xor_kernel(2), ()) == 32
        assert count_solutions(clause(), make_ksat_kernel(3), ((0,),)) == 7
        assert count_solutions(Hypergraph(2, 2, (((0, 1), 2),)), make_xor_kernel(2), ((0, 1),)) == 0

    def test_rejects_non_csp(self):
        with pytest.raises(KernelError):
            count_solutions(Hypergraph.empty(3, 2), KERNELS["bsc2"], ())

    @settings(max_examples=60, deadline=None)
    @given(name=st.sampled_from(["xor2", "ksat2", "nae2", "xor3", "ksat3"]), n=st.integers(3, 9),
           alpha=st.floats(0, 2.5), seed=st.integers(0, 2**32))
    def test_matches_loop_oracle_and_counting_identity(self, name, n, alpha, seed):
        kernel = KERNELS[name]
        g = sample_poisson(EnsembleParams(n, kernel.k, alpha), stream(seed, "g"))
        inst = sample_instance(g, kernel, stream(seed, "i"))
        z = count_solutions(g, kernel, inst.y)
        assert z == brute_count(g, kernel, inst.y) >= 1
        assert entropy_given_y(g, kernel, inst.y) == pytest.approx(math.log2(z), abs=1e-9)


class TestExact:
    def test_examples(self):
        assert exact_conditional_entropy(Hypergraph.empty(5, 2), make_xor_kernel(2)).value == 5.0
        assert exact_conditional_entropy(Hypergraph(2, 2, (((0, 1), 1),)), make_xor_kernel(2)).value == 1.0
        est = exact_conditional_entropy(clause(), make_ksat_kernel(3))
        assert est.value == pytest.approx(LOG7, abs=1e-12) and est.stderr == 0

    def test_2sat_path_against_count_average(self):
        g = Hypergraph(3, 2, (((0, 1), 1), ((1, 2), 1)))
        kernel = make_ksat_kernel(2)
        # average of log2 Z(y) weighted by S(y), enumerated directly
        total = 0.0
        for x in range(8):
            for y1 in range(4):
                for y2 in range(4):
                    p = kernel.table[x & 3, y1] * kernel.table[(x >> 1) & 3, y2] / 8
                    if p:
                        total += p * math.log2(count_solutions(g, kernel, ((y1,), (y2,))))
        assert exact_conditional_entropy(g, kernel).value == pytest.approx(total, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(name=st.sampled_from(sorted(KERNELS)), n=st.integers(2, 5), alpha=st.floats(0, 1.2),
           seed=st.integers(0, 2**32))
    def test_matches_full_enumeration(self, name, n, alpha, seed):
        kernel = KERNELS[name]
        if n < kernel.k:
            return
        g = sample_poisson(EnsembleParams(n, kernel.k, alpha), stream(seed))
        if kernel.q ** g.n_copies * 2**n > 2**14:
            return
        exact = exact_conditional_entropy(g, kernel).value
        assert exact == pytest.approx(brute_conditional_entropy(g, kernel), abs=1e-9)
        assert 0.0 <= exact <= n + 1e-12

    @settings(max_examples=40, deadline=None)
    @given(name=st.sampled_from(sorted(KERNELS)), n=st.integers(3, 6), alpha=st.floats(0, 1.0),
           seed=st.integers(0, 2**32))
    def test_chain_rule(self, name, n, alpha, seed):
        kernel = KERNELS[name]
        g = sample_poisson(EnsembleParams(n, kernel.k, alpha), stream(seed))
        if kernel.q ** g.n_copies > 2**12:
            return
        h_y_given_x = g.n_copies * kernel_entropy(kernel)
        h_y = exact_output_entropy(g, kernel)
        assert exact_conditional_entropy(g, kernel).value == pytest.approx(n + h_y_given_x - h_y, abs=1e-9)

    def test_output_entropy_oracle(self):
        g = Hypergraph(3, 2, (((0, 1), 2), ((1, 2), 1)))
        for kernel in (KERNELS["bec2"], KERNELS["ksat2"]):
            assert exact_output_entropy(g, kernel) == pytest.approx(brute_output_entropy(g, kernel), abs=1e-10)

    def test_components(self):
        g = Hypergraph(6, 2, (((0, 1), 1), ((1, 2), 1), ((4, 5), 3)))
        comps, isolated = components(g)
        assert comps == [[0, 1, 2], [4, 5]] and isolated == 1

    def test_budget(self):
        g = sample_poisson(EnsembleParams(10, 3, 2.0), stream(1))
        with pytest.raises(BudgetExceeded):
            exact_conditional_entropy(g, make_ksat_kernel(3), budget=1000)

    def test_budget_is_infeasible(self):
        assert issubclass(BudgetExceeded, Infeasible)


class TestMonteCarlo:
    def test_empty_graph_exact(self):
        est = mc_conditional_entropy(Hypergraph.empty(4, 2), KERNELS["bsc2"], 50, 1)
        assert (est.value, est.stderr) == (4.0, 0.0)

    def test_single_clause_zero_spread(self):
        for method in ("csp-count", "mc-posterior"):
            est = mc_conditional_entropy(clause(), make_ksat_kernel(3), 100, 2, method=method)
            assert est.value == pytest.approx(LOG7, abs=1e-12)
            assert est.stderr == 0.0

    @pytest.mark.parametrize("name,method", [("bsc2", "mc-joint"), ("sbm", "mc-joint"), ("ksat2", "csp-count"),
                                             ("nae2", "auto"), ("bec2", "mc-posterior")])
    def test_agrees_with_exact(self, name, method):
        kernel = KERNELS[name]
        g = sample_poisson(EnsembleParams(6, 2, 0.8), stream(11))
        exact = exact_conditional_entropy(g, kernel).value
        est = mc_conditional_entropy(g, kernel, 4000, 12, method=method)
        assert abs(est.value - exact) <= 4 * est.stderr + 1e-12

    def test_threads_do_not_change_result(self):
        g = sample_poisson(EnsembleParams(8, 2, 1.0), stream(3))
        a = mc_conditional_entropy(g, KERNELS["bsc2"], 300, 9, threads=1)
        b = mc_conditional_entropy(g, KERNELS["bsc2"], 300, 9, threads=4)
        assert a == b

    def test_bad_method(self):
        with pytest.raises(EngineError):
            mc_conditional_entropy(Hypergraph.empty(3, 2), KERNELS["xor2"], 10, 0, method="nope")

    def test_posterior_entropy_oracle(self):
        g = sample_poisson(EnsembleParams(6, 2, 1.0), stream(8))
        inst = sample_instance(g, KERNELS["sbm"], stream(9))
        assert entropy_given_y(g, KERNELS["sbm"], inst.y) == pytest.approx(
            brute_posterior_entropy(g, KERNELS["sbm"], inst.y), abs=1e-10)


class TestEnsemble:
    def test_zero_density(self):
        est = ensemble_entropy(EnsembleParams(6, 2, 0.0), KERNELS["xor2"], 20, 8, 0)
        assert (est.value, est.stderr) == (6.0, 0.0)

    def test_matches_flat_average(self):
        params = EnsembleParams(8, 2, 0.25)
        kernel = KERNELS["xor2"]
        est = ensemble_entropy(params, kernel, 200, 8, 5)
        flat = np.mean([exact_conditional_entropy(sample_poisson(params, stream(77, i)), kernel).value
                        for i in range(200)])
        assert abs(est.value - flat) <= 3 * math.hypot(est.stderr, est.stderr)

    def test_more_observations_lower_entropy(self):
        kernel = KERNELS["xor2"]
        lo = ensemble_entropy(EnsembleParams(8, 2, 1.0), kernel, 200, 8, 1)
        hi = ensemble_entropy(EnsembleParams(8, 2, 0.25), kernel, 200, 8, 2)
        assert lo.value <= hi.value + 3 * math.hypot(lo.stderr, hi.stderr)

    def test_graph_entropy_falls_back(self):
        g = sample_poisson(EnsembleParams(10, 3, 2.0), stream(1))
        est = graph_entropy(g, make_ksat_kernel(3), 4, inner_samples=32, budget=1000)
        assert est.method == "csp-count" and est.nsamples == 32


class TestMutualInformation:
    def test_examples(self):
        assert mutual_information(EntropyEstimate(5.0), 5).value == 0.0
        est = exact_conditional_entropy(clause(), make_ksat_kernel(3))
        assert mutual_information(est, 3).value == pytest.approx(3 - LOG7, abs=1e-12)
        est = exact_conditional_entropy(Hypergraph(2, 2, (((0, 1), 1),)), make_xor_kernel(2))
        assert mutual_information(est, 2).value == 1.0

    def test_stderr_preserved(self):
        assert mutual_information(EntropyEstimate(2.0, 0.3, 10, "mc-joint"), 4).stderr == 0.3

    def test_negative_stderr_rejected(self):
        with pytest.raises(ValueError):
            EntropyEstimate(1.0, -0.1)


class TestDerivative:
    def test_redundant_xor_probe(self):
        g = Hypergraph(3, 2, (((0, 1), 1), ((1, 2), 1)))
        lhs, rhs = edge_derivative_check(g, make_xor_kernel(2), (0, 2))
        assert lhs == pytest.approx(0.0, abs=1e-12) and rhs == pytest.approx(0.0, abs=1e-12)

    def test_single_clause_probe(self):
        lhs, rhs = edge_derivative_check(Hypergraph.empty(5, 3), make_ksat_kernel(3), (1, 2, 4))
        assert lhs == pytest.approx(LOG7 - 3, abs=1e-12)
        assert rhs == pytest.approx(LOG7 - 3, abs=1e-12)
        assert lhs == pytest.approx(-0.192645, abs=1e-6)

    def test_bsc_fixed_graph(self):
        g = Hypergraph(4, 2, (((0, 1), 1), ((1, 2), 2), ((2, 3), 1)))
        lhs, rhs = edge_derivative_check(g, KERNELS["bsc2"], (0, 3))
        assert lhs == pytest.approx(rhs, abs=1e-10)

    def test_monte_carlo_mode(self):
        g = Hypergraph(4, 2, (((0, 1), 1), ((1, 2), 1)))
        exact_lhs, _ = edge_derivative_check(g, KERNELS["bsc2"], (0, 3))
        lhs, rhs = edge_derivative_check(g, KERNELS["bsc2"], (0, 3), rng=3, nsamples=4000)
        assert lhs == pytest.approx(exact_lhs, abs=0.03)
        assert rhs == pytest.approx(exact_lhs, abs=0.03)

    def test_predictive_entropy_of_empty_graph(self):
        # with no observations Y_I is the kernel output on uniform inputs
        kernel = make_ksat_kernel(2)
        assert predictive_entropy(Hypergraph.empty(3, 2), kernel, (0, 2)) == pytest.approx(2.0, abs=1e-12)

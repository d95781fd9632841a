import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from defense_depth import models, solvers
from defense_depth.errors import NoBracketError
from defense_depth.solvers import SolveRequest, approximation_report, solve


def blockade(p, n, N):
    return models.blockade_likelihood(models.BlockadeParams(p, n, N))


class TestSolve:
    def test_hardness_matches_closed_form(self):
        p = solve(SolveRequest("blockade", "p", 0.001, {"N": 5, "n": 10}))
        assert p == pytest.approx(0.42669777504517283, rel=1e-9)
        assert p == pytest.approx(models.blockade_hardness(0.001, 5, 10), rel=1e-8)

    def test_integer_layer_count_is_defender_safe(self):
        # the real-valued solution is 10.09, so ten layers leave L = 1.08e-3
        req = SolveRequest("blockade", "n", 0.001, {"p": 0.43, "N": 5}, integer_constraint=True)
        n = solve(req)
        assert n == 11
        assert req.likelihood_at(n) <= 0.001 < req.likelihood_at(n - 1)

    def test_integer_on_exact_integer_solution(self):
        p = models.blockade_hardness(0.001, 5, 10)
        n = solve(SolveRequest("blockade", "n", 0.001, {"p": p, "N": 5}, integer_constraint=True))
        assert n == 10

    def test_worked_example_layer_count(self):
        req = SolveRequest("combined", "n", 0.05, {"p": 0.05, "d": 0.05, "N_A": 1e5}, integer_constraint=True)
        assert solve(req) == 15

    def test_integer_attack_count(self):
        req = SolveRequest("blockade", "N", 0.001, {"p": 0.43, "n": 10}, integer_constraint=True)
        N = solve(req)
        assert N == 4
        assert req.likelihood_at(N) <= 0.001 < req.likelihood_at(N + 1)

    def test_delay_horizon_route(self):
        n = solve(SolveRequest("delay", "n", 0.001, {"lambda": 1, "tau": 1, "N_a": 1000, "T": 1e5, "s": 1}))
        assert n == pytest.approx(24.32793581448968, rel=1e-9)

    def test_exact_variant(self):
        req = SolveRequest("combined", "N_A", 0.5, {"p": 0.05, "d": 0.05, "n": 15}, variant="exact")
        N_A = solve(req)
        assert models.combined_likelihood_exact(models.CombinedParams(0.05, 0.05, 15, N_A)) == pytest.approx(0.5, rel=1e-9)

    def test_no_bracket(self):
        # a single layer can never push L below p for one attack
        with pytest.raises(NoBracketError) as info:
            solve(SolveRequest("blockade", "N", 0.5, {"p": 1e-30, "n": 1}))
        low, high = info.value.attainable
        assert high < 0.5

    @pytest.mark.parametrize("kwargs", [
        dict(model="blockade", unknown="p", target_L=0.1, fixed={"N": 5}),
        dict(model="blockade", unknown="p", target_L=0.1, fixed={"N": 5, "n": 2, "x": 1}),
        dict(model="blockade", unknown="p", target_L=1.0, fixed={"N": 5, "n": 2}),
        dict(model="blockade", unknown="p", target_L=0.1, fixed={"N": 5, "n": 2}, integer_constraint=True),
        dict(model="nope", unknown="p", target_L=0.1),
        dict(model="blockade", unknown="p", target_L=0.1, fixed={"p": 0.2, "N": 5, "n": 2}),
    ])
    def test_request_validation(self, kwargs):
        with pytest.raises(ValueError):
            SolveRequest(**kwargs)

    @settings(max_examples=150, deadline=None)
    @given(
        model=st.sampled_from(["blockade", "delay", "combined"]),
        target=st.floats(1e-6, 0.5),
        data=st.data(),
    )
    def test_round_trip(self, model, target, data):
        if model == "blockade":
            fixed = {"p": data.draw(st.floats(0.05, 0.95)), "n": data.draw(st.floats(1, 30)), "N": data.draw(st.floats(1, 1e6))}
        elif model == "delay":
            fixed = {"lambda": data.draw(st.floats(0.2, 3)), "tau": 1.0, "n": data.draw(st.floats(1, 20)), "N": data.draw(st.floats(1, 1e6))}
        else:
            fixed = {"p": data.draw(st.floats(0.01, 0.5)), "d": data.draw(st.floats(0.01, 0.3)), "n": data.draw(st.floats(1, 20)), "N_A": data.draw(st.floats(1, 1e6))}
        unknown = data.draw(st.sampled_from(sorted(fixed)))
        if unknown == "tau":
            return
        fixed.pop(unknown)
        req = SolveRequest(model, unknown, target, fixed)
        try:
            x = solve(req)
        except NoBracketError:
            return
        assert req.likelihood_at(x) == pytest.approx(target, rel=1e-8)

    @settings(max_examples=100, deadline=None)
    @given(L=st.floats(1e-6, 0.5), N=st.floats(1.0, 1e9), n=st.floats(1.0, 100.0))
    def test_bisection_agrees_with_hardness_closed_form(self, L, N, n):
        p = solve(SolveRequest("blockade", "p", L, {"N": N, "n": n}))
        assert p == pytest.approx(models.blockade_hardness(L, N, n), rel=1e-8)

    @settings(max_examples=100, deadline=None)
    @given(L=st.floats(1e-6, 0.5), p=st.floats(0.05, 0.95), n=st.floats(1.0, 20.0))
    def test_bisection_agrees_with_attack_count_closed_form(self, L, p, n):
        exact = models.blockade_attacks_exact(L, p, n)
        if not 1e-12 <= exact <= 1e12:
            return
        N = solve(SolveRequest("blockade", "N", L, {"p": p, "n": n}))
        assert N == pytest.approx(exact, rel=1e-8)

    @settings(max_examples=60, deadline=None)
    @given(target=st.floats(1e-5, 0.3), p=st.floats(0.1, 0.9), N=st.floats(1, 1e6))
    def test_integer_bracket_defenses(self, target, p, N):
        req = SolveRequest("blockade", "n", target, {"p": p, "N": N}, integer_constraint=True)
        try:
            n = solve(req)
        except NoBracketError:
            return
        assert req.likelihood_at(n) <= target * (1 + 1e-12)
        if n >= 1:
            assert req.likelihood_at(n - 1) > target

    @settings(max_examples=60, deadline=None)
    @given(target=st.floats(1e-5, 0.3), p=st.floats(0.1, 0.9), n=st.floats(1, 30))
    def test_integer_bracket_attacks(self, target, p, n):
        req = SolveRequest("blockade", "N", target, {"p": p, "n": n}, integer_constraint=True)
        try:
            N = solve(req)
        except NoBracketError:
            return
        assert req.likelihood_at(N) <= target * (1 + 1e-12)
        assert req.likelihood_at(N + 1) > target


class TestMinimalDefenses:
    def test_blockade_decade_spacing(self):
        curve = solvers.minimal_defenses_curve("blockade", 0.43, [5 * 10.0 ** k for k in range(10)])
        expected = math.log(10) / math.log(1 / 0.43)
        assert expected == pytest.approx(2.7282781392, rel=1e-9)
        for gap in solvers.decade_spacing(curve):
            assert gap == pytest.approx(expected, rel=0.01)

    def test_delay_decade_spacing(self):
        curve = solvers.minimal_defenses_curve("delay", 1.0, [10.0 ** k for k in range(1, 12)])
        for gap in solvers.decade_spacing(curve):
            assert gap == pytest.approx(math.log(10), rel=0.01)

    def test_single_count_matches_solve(self):
        [(N, n)] = solvers.minimal_defenses_curve("blockade", 0.43, [5.0])
        assert n == solve(SolveRequest("blockade", "n", 0.001, {"p": 0.43, "N": 5.0}))

    def test_rejects_descending_counts(self):
        with pytest.raises(ValueError):
            solvers.minimal_defenses_curve("blockade", 0.43, [10, 5])


class TestApproximationReport:
    def test_eq3_operating_point(self):
        r = approximation_report("eq3_vs_eq2", L=0.001, p=0.43, n=10)
        assert r.exact == pytest.approx(4.628984739273466, rel=1e-12)
        assert r.approximate == pytest.approx(4.62716987897362, rel=1e-12)
        assert r.relative_error == pytest.approx(3.920644378987e-4, rel=1e-6)
        assert r.relative_error <= (0.001 + 0.43 ** 10) / 2
        assert r.flag("L small") == 0.001
        assert r.flag("p^n small") == pytest.approx(2.1611482313284246e-4, rel=1e-12)

    def test_eq3_regime_violated(self):
        r = approximation_report("eq3_vs_eq2", L=0.5, p=0.9, n=1)
        assert r.relative_error > 0.5

    def test_relation11_worked_example(self):
        r = approximation_report("relation11_vs_eq10", n=15, d=0.05, p=0.05, N_A=1e5)
        assert r.approximate == pytest.approx(3.4870745350297716, rel=1e-12)
        assert r.extras["margin"] == r.approximate
        assert r.extras["L_N"] == pytest.approx(0.04380632762151005, rel=1e-11)
        assert r.flag("b small") == pytest.approx(4.479479024570513e-7, rel=1e-12)
        # exact -ln(b) - ln(N_A) = 285 * -ln(0.95) - ln(1e5)
        assert r.exact == pytest.approx(-285 * math.log(0.95) - math.log(1e5), rel=1e-12)

    def test_eq7_small_regime(self):
        r = approximation_report("eq7_vs_exact", L=0.001, tau=1.0, N_a=1000, T=1e5, lam=1.0, n=24)
        assert r.approximate == pytest.approx(0.7200489933738587, rel=1e-12)
        assert r.relative_error < 1e-3

    def test_relative_error_definition(self):
        r = approximation_report("eq3_vs_eq2", L=0.05, p=0.3, n=2)
        assert r.relative_error == abs(r.approximate - r.exact) / abs(r.exact)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            approximation_report("eq99", L=0.1)

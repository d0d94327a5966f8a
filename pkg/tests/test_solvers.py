import numpy as np
import pytest

from bayesgame.game import (
    ActionSet,
    FinitePrior,
    GameSpec,
    StrategyProfile,
    grad_adversary_X,
    grad_learner_w,
    origin_profile,
    project,
)
from bayesgame.solvers import (
    ConfigurationError,
    SolverConfig,
    SolverError,
    _extragradient_on_map,
    assumption_probe,
    epsilon_distance,
    equilibrium_residual,
    extragradient_reference,
    pg_rbc,
    prg_ie,
    stacked_map,
)
from conftest import (
    monotone_ball_game,
    random_finite_prior,
    random_profile,
    random_quadratic_game,
)


def zero_game(n=3, m=2, K=2, bounded=True):
    kwargs = {}
    if bounded:
        kwargs = dict(learner_set=ActionSet.l2_ball(1.0), adversary_set=ActionSet.l2_ball(1.0))
    spec = GameSpec(X=np.zeros((n, m)), y=np.zeros(n), z=np.zeros(n), c_l=np.ones(n), **kwargs)
    prior = FinitePrior(atoms=np.zeros((K, n)), probs=np.full(K, 1.0 / K))
    return spec, prior


class TestStackedMap:
    def test_single_atom_learner_block(self, rng):
        spec = random_quadratic_game(rng, 5, 3)
        prior = FinitePrior(atoms=rng.random((1, 5)), probs=np.array([1.0]))
        profile = random_profile(rng, spec, 1)
        learner, adversary = stacked_map(profile, prior, spec)
        assert learner == pytest.approx(grad_learner_w(profile.w, profile.sigma[0], spec))
        assert adversary[0] == pytest.approx(
            grad_adversary_X(profile.w, profile.sigma[0], prior.atoms[0], spec)
        )

    def test_zero_game_origin_is_stationary(self):
        spec, prior = zero_game()
        profile = origin_profile(spec, prior.num_atoms)
        learner, adversary = stacked_map(profile, prior, spec)
        assert np.all(learner == 0) and np.all(adversary == 0)

    def test_learner_block_matches_sampling_oracle(self, rng):
        # the weighted sum equals the average gradient over atoms drawn by p_k
        spec = random_quadratic_game(rng, 6, 4)
        prior = random_finite_prior(rng, 6, 5)
        profile = random_profile(rng, spec, 5)
        learner, _ = stacked_map(profile, prior, spec)

        draws = 1_000_000
        counts = rng.multinomial(draws, prior.probs)
        grads = np.stack(
            [grad_learner_w(profile.w, profile.sigma[k], spec) for k in range(5)]
        )
        mc = (counts / draws) @ grads
        spread = np.abs(grads - learner).max()
        tol = 3.0 * spread / np.sqrt(draws)
        assert np.abs(mc - learner).max() <= max(tol, 1e-9)

    def test_k_mismatch_rejected(self, rng):
        spec = random_quadratic_game(rng, 4, 2)
        prior = random_finite_prior(rng, 4, 3)
        profile = random_profile(rng, spec, 2)
        with pytest.raises(ValueError, match="sigma"):
            stacked_map(profile, prior, spec)


class TestResidualAndDistance:
    def test_zero_at_zero_game_origin(self):
        spec, prior = zero_game()
        profile = origin_profile(spec, prior.num_atoms)
        assert equilibrium_residual(profile, prior, spec) == 0.0

    def test_positive_off_equilibrium(self, rng):
        spec = random_quadratic_game(rng, 4, 3)
        prior = random_finite_prior(rng, 4, 2)
        profile = random_profile(rng, spec, 2)
        assert equilibrium_residual(profile, prior, spec) > 0

    def test_unconstrained_residual_is_scaled_map_norm(self, rng):
        spec = random_quadratic_game(rng, 4, 3)
        prior = random_finite_prior(rng, 4, 2)
        profile = random_profile(rng, spec, 2)
        learner, adversary = stacked_map(profile, prior, spec)
        norm2 = float(learner @ learner + np.sum(adversary * adversary))
        gamma = 0.37
        assert equilibrium_residual(profile, prior, spec, gamma) == pytest.approx(
            gamma**2 * norm2
        )

    def test_epsilon_distance_identical(self, rng):
        spec = random_quadratic_game(rng, 3, 2)
        prior = random_finite_prior(rng, 3, 2)
        p = random_profile(rng, spec, 2)
        assert epsilon_distance(p, p, prior) == 0.0

    def test_epsilon_distance_unit_w_offset(self, rng):
        prior = random_finite_prior(rng, 3, 2)
        sigma = rng.normal(size=(2, 3, 4))
        a = StrategyProfile(w=np.array([1.0, 0.0, 0.0, 0.0]), sigma=sigma)
        b = StrategyProfile(w=np.zeros(4), sigma=sigma.copy())
        assert epsilon_distance(a, b, prior) == pytest.approx(1.0)

    def test_epsilon_distance_hand_value(self):
        prior = FinitePrior(atoms=np.zeros((2, 3)), probs=np.array([0.5, 0.5]))
        sigma_a = np.zeros((2, 3, 2))
        sigma_b = np.zeros((2, 3, 2))
        sigma_b[0, 0, 0] = 2.0  # Frobenius distance 2 on the first block
        a = StrategyProfile(w=np.zeros(2), sigma=sigma_a)
        b = StrategyProfile(w=np.zeros(2), sigma=sigma_b)
        assert epsilon_distance(a, b, prior) == pytest.approx(2.0)  # 0.5 * 4

    def test_k_mismatch(self, rng):
        prior = random_finite_prior(rng, 3, 2)
        a = StrategyProfile(w=np.zeros(2), sigma=np.zeros((2, 3, 2)))
        b = StrategyProfile(w=np.zeros(2), sigma=np.zeros((3, 3, 2)))
        with pytest.raises(ValueError, match="atom count"):
            epsilon_distance(a, b, prior)


class TestPrgIe:
    def test_zero_game_fixed_point(self):
        spec, prior = zero_game()
        config = SolverConfig(max_iters=25, gamma=1e-3, trace_every=5, lipschitz=2.0)
        trace = prg_ie(spec, prior, config)
        assert np.all(trace.final_profile.w == 0)
        assert np.all(trace.final_profile.sigma == 0)
        assert all(rec.residual == 0 for rec in trace.iterations)

    def test_requires_bounded_sets(self, rng):
        spec = random_quadratic_game(rng, 3, 2, bounded=False)
        prior = random_finite_prior(rng, 3, 2)
        config = SolverConfig(max_iters=10, gamma=1e-3)
        with pytest.raises(ConfigurationError, match="bounded"):
            prg_ie(spec, prior, config)

    def test_deterministic(self):
        spec, prior = monotone_ball_game()
        config = SolverConfig(max_iters=400, gamma=2e-3, trace_every=100, lipschitz=2.3)
        t1 = prg_ie(spec, prior, config)
        t2 = prg_ie(spec, prior, config)
        assert np.array_equal(t1.final_profile.w, t2.final_profile.w)
        assert np.array_equal(t1.final_profile.sigma, t2.final_profile.sigma)
        assert [r.residual for r in t1.iterations] == [r.residual for r in t2.iterations]

    def test_iterates_feasible(self):
        spec, prior = monotone_ball_game()
        config = SolverConfig(max_iters=300, gamma=2e-3, trace_every=50, lipschitz=2.3)
        trace = prg_ie(spec, prior, config)
        assert trace.final_profile.is_feasible(spec)

    def test_step_size_warning(self):
        spec, prior = monotone_ball_game()
        config = SolverConfig(max_iters=5, gamma=0.5, lipschitz=2.3)
        with pytest.warns(UserWarning, match="gamma"):
            prg_ie(spec, prior, config)


class TestPgRbc:
    def test_zero_game_fixed_point(self):
        spec, prior = zero_game()
        config = SolverConfig(max_iters=25, gamma=0.5, trace_every=5, strong_monotonicity=2.0)
        trace = pg_rbc(spec, prior, config)
        assert np.all(trace.final_profile.w == 0)
        assert all(rec.residual == 0 for rec in trace.iterations)

    def test_single_atom_matches_deterministic_projected_gradient(self, rng):
        spec = random_quadratic_game(rng, 4, 3, bounded=True)
        atoms = rng.random((1, 4))
        prior = FinitePrior(atoms=atoms, probs=np.array([1.0]))
        iters = 500
        config = SolverConfig(
            max_iters=iters, gamma=0.4, seed=5, trace_every=100, strong_monotonicity=2.0
        )
        trace = pg_rbc(spec, prior, config)

        # hand-rolled deterministic projected gradient with the same schedule
        w = project(np.zeros(3), spec.learner_set)
        sigma = project(np.zeros((4, 3)), spec.adversary_set)
        for t in range(iters):
            gamma_t = 0.4 if t == 0 else 0.4 / t
            w_next = project(w - gamma_t * grad_learner_w(w, sigma, spec), spec.learner_set)
            sigma = project(
                sigma - gamma_t * grad_adversary_X(w, sigma, atoms[0], spec),
                spec.adversary_set,
            )
            w = w_next
        assert trace.final_profile.w == pytest.approx(w, abs=1e-14)
        assert trace.final_profile.sigma[0] == pytest.approx(sigma, abs=1e-14)

    def test_deterministic(self):
        spec, prior = monotone_ball_game()
        config = SolverConfig(max_iters=500, gamma=0.5, seed=7, trace_every=100,
                              strong_monotonicity=2.0)
        t1 = pg_rbc(spec, prior, config)
        t2 = pg_rbc(spec, prior, config)
        assert np.array_equal(t1.final_profile.w, t2.final_profile.w)
        assert np.array_equal(t1.final_profile.sigma, t2.final_profile.sigma)

    def test_step_size_warning(self):
        spec, prior = monotone_ball_game()
        config = SolverConfig(max_iters=5, gamma=0.01, strong_monotonicity=2.0)
        with pytest.warns(UserWarning, match="gamma"):
            pg_rbc(spec, prior, config)

    def test_iterates_feasible(self):
        spec, prior = monotone_ball_game()
        config = SolverConfig(max_iters=300, gamma=0.5, seed=3, trace_every=50,
                              strong_monotonicity=2.0)
        trace = pg_rbc(spec, prior, config)
        assert trace.final_profile.is_feasible(spec)


class TestExtragradient:
    def test_zero_game_returns_origin_immediately(self):
        spec, prior = zero_game()
        profile = extragradient_reference(spec, prior, tol=1e-12)
        assert np.all(profile.w == 0) and np.all(profile.sigma == 0)

    def test_residual_below_tol_and_unconstrained_stationarity(self, rng):
        spec = GameSpec(
            X=0.3 * rng.normal(size=(2, 2)),
            y=0.3 * rng.normal(size=2),
            z=0.3 * rng.normal(size=2),
            c_l=np.full(2, 0.2),
        )
        prior = FinitePrior(atoms=0.2 * rng.random((1, 2)), probs=np.array([1.0]))
        profile = extragradient_reference(spec, prior, tol=1e-12)
        assert equilibrium_residual(profile, prior, spec) <= 1e-12
        learner, adversary = stacked_map(profile, prior, spec)
        assert np.linalg.norm(learner) <= 1e-5
        assert np.linalg.norm(adversary) <= 1e-5

    def test_restart_at_solution_takes_no_iterations(self):
        spec, prior = monotone_ball_game()
        solution = extragradient_reference(spec, prior, tol=1e-10)

        def map_fn(w, sigma):
            return stacked_map(StrategyProfile(w=w, sigma=sigma), prior, spec)

        _, iters = _extragradient_on_map(map_fn, solution, spec, 0.1, 1e-10, 100)
        assert iters == 0

    def test_nonconvergence_reports_residual(self):
        spec, prior = monotone_ball_game()
        with pytest.raises(SolverError, match="residual"):
            extragradient_reference(spec, prior, tol=1e-14, max_iters=3)


class TestAssumptionProbe:
    def test_decoupled_regularizer_game(self):
        # with c_l = 0 and zero atoms the operator is 2*identity per block
        n, m, K = 4, 3, 2
        spec = GameSpec(
            X=np.zeros((n, m)), y=np.zeros(n), z=np.zeros(n), c_l=np.zeros(n),
            reg_l=1.0,
            learner_set=ActionSet.l2_ball(2.0), adversary_set=ActionSet.l2_ball(2.0),
        )
        prior = FinitePrior(atoms=np.zeros((K, n)), probs=np.array([0.4, 0.6]))
        diag = assumption_probe(spec, prior, trials=50, seed=0)
        assert diag.lambda_hat == pytest.approx(2.0, abs=1e-9)
        assert diag.lambda_hat >= 1.0
        assert diag.min_quotient == diag.lambda_hat
        assert diag.L_hat == pytest.approx(2.0, abs=1e-9)
        assert diag.G_hat >= 0

    def test_deterministic(self):
        spec, prior = monotone_ball_game()
        d1 = assumption_probe(spec, prior, trials=40, seed=12)
        d2 = assumption_probe(spec, prior, trials=40, seed=12)
        assert d1 == d2

    def test_duplicate_pairs_skipped(self, monkeypatch):
        spec, prior = monotone_ball_game()
        fixed = random_profile(np.random.default_rng(0), spec, prior.num_atoms)
        monkeypatch.setattr(
            "bayesgame.solvers._random_feasible_profile",
            lambda rng, s, k: fixed.copy(),
        )
        with pytest.raises(SolverError, match="duplicate"):
            assumption_probe(spec, prior, trials=5, seed=0)

    def test_requires_two_trials(self):
        spec, prior = monotone_ball_game()
        with pytest.raises(ValueError, match="trials"):
            assumption_probe(spec, prior, trials=1, seed=0)


class TestFixedPointInvariant:
    def test_solvers_hold_still_at_equilibrium(self):
        # residual is exactly zero at the zero game's origin; one iteration
        # of either solver must not move it (1e-12 tolerance)
        spec, prior = zero_game()
        for solver, gamma in ((prg_ie, 1e-3), (pg_rbc, 0.5)):
            config = SolverConfig(max_iters=1, gamma=gamma, seed=1,
                                  lipschitz=2.0, strong_monotonicity=2.0)
            trace = solver(spec, prior, config)
            assert np.linalg.norm(trace.final_profile.w) <= 1e-12
            assert np.linalg.norm(trace.final_profile.sigma) <= 1e-12


class TestTraceSerialization:
    def test_csv_and_json(self, tmp_path):
        spec, prior = monotone_ball_game()
        ref = extragradient_reference(spec, prior, tol=1e-8)
        config = SolverConfig(max_iters=200, gamma=2e-3, trace_every=50, lipschitz=2.3)
        trace = prg_ie(spec, prior, config, reference=ref)
        path = tmp_path / "trace.csv"
        trace.to_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,residual,error_to_reference,wall_time_s"
        assert len(lines) == len(trace.iterations) + 1
        payload = trace.to_json()
        assert payload["iterations"][0]["t"] == 1
        assert payload["final_residual"] == trace.iterations[-1].residual

    def test_tol_stopping_marks_converged(self):
        spec, prior = zero_game()
        config = SolverConfig(max_iters=50, gamma=1e-3, tol=1e-9, trace_every=10, lipschitz=2.0)
        trace = prg_ie(spec, prior, config)
        assert trace.converged
        assert trace.iterations[-1].residual <= 1e-9

import numpy as np
import pytest

import qrwt
from qrwt.cocycle import (
    HamiltonianSpec,
    cocycle_matrix_element,
    eh_generator,
    f_from_hamiltonian,
    generator_convergence,
    hp_check,
    hp_proof_blocks,
    hp_solve,
    lindblad,
    lindblad_closed_form,
    loglog_slope,
    random_hamiltonian_spec,
    right_mult_seed,
)
from qrwt.condexp import choi_matrix
from qrwt.generators import LimitGenerator, limit_generator
from qrwt.gns import delta_projections, p0_projections, slice_state0
from qrwt.linalg import Superoperator, dagger, decap_exp, kron, mat_exp, slice_op
from qrwt.walk import step_function, zero_step_function

from conftest import random_matrix

RNG = np.random.default_rng(47)


def random_step(g, seed=0, scale=0.5, ends=(0.4, 1.1)):
    rng = np.random.default_rng(seed)
    nmu = g.mu_basis.shape[1]
    vals = [scale * (g.mu_basis @ (rng.standard_normal(nmu)
                                   + 1j * rng.standard_normal(nmu)))
            for _ in range(len(ends))]
    return step_function([0.0, *ends], vals, g)


def random_f(g, dim_h, seed=0, scale=0.5):
    rng = np.random.default_rng(seed)
    d = dim_h * g.dim_k
    return scale * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))


class TestCocycleMatrixElement:
    def test_zero_generator(self, c3_gns, c3_cond):
        g = c3_gns
        lg = limit_generator(Superoperator.zero(2, (6, 6)), g, c3_cond)
        f = random_step(g, seed=1)
        g_sf = random_step(g, seed=2)
        a = random_matrix(RNG, 2)
        u = RNG.standard_normal(2) + 1j * RNG.standard_normal(2)
        v = RNG.standard_normal(2) + 1j * RNG.standard_normal(2)
        from qrwt.walk import exp_inner
        me = cocycle_matrix_element(lg, g, a, u, v, f, g_sf, 0.9)
        assert me == pytest.approx(np.vdot(u, a @ v) * exp_inner(f, g_sf), abs=1e-12)

    def test_scalar_time_coefficient(self, c3_gns):
        # dim h = 1, psi with only the vacuum-vacuum coefficient -i alpha
        g = c3_gns
        alpha = 0.83
        vac = np.outer(g.Omega, g.Omega.conj())

        def fn(a):
            return complex(a[0, 0]) * (-1j * alpha) * vac

        psi = Superoperator.from_function(fn, 1, (6, 6))
        lg = LimitGenerator(psi=psi, dim_h=1)
        f = zero_step_function(6)
        for t in (0.3, 1.0, 2.5):
            me = cocycle_matrix_element(lg, g, np.eye(1), [1.0], [1.0], f, f, t)
            assert me == pytest.approx(np.exp(-1j * alpha * t), abs=1e-12)

    def test_integral_equation_derivative(self, c3_gns, c3_cond):
        # d/dt <u eps(f), j_t(a) v eps(g)> = same element of E^xhat psi(a) E_yhat
        g = c3_gns
        f_mat = random_f(g, 2, seed=3)
        lg = limit_generator(right_mult_seed(f_mat, g, 2), g, c3_cond, f=f_mat)
        f = random_step(g, seed=4)
        g_sf = random_step(g, seed=5)
        a = random_matrix(RNG, 2)
        u = RNG.standard_normal(2) + 1j * RNG.standard_normal(2)
        v = RNG.standard_normal(2) + 1j * RNG.standard_normal(2)
        t0, h = 0.7, 1e-5   # interior of a common constancy interval
        num = (cocycle_matrix_element(lg, g, a, u, v, f, g_sf, t0 + h)
               - cocycle_matrix_element(lg, g, a, u, v, f, g_sf, t0 - h)) / (2 * h)
        xh = g.Omega + f.value_at(t0)
        yh = g.Omega + g_sf.value_at(t0)
        sliced = slice_op(lg.psi(a), xh, yh, 2)
        rhs = cocycle_matrix_element(lg, g, sliced, u, v, f, g_sf, t0)
        assert abs(num - rhs) <= 1e-6 * max(1.0, abs(rhs))

    def test_negative_time(self, c3_gns, c3_cond):
        lg = limit_generator(Superoperator.zero(2, (6, 6)), c3_gns, c3_cond)
        f = zero_step_function(6)
        with pytest.raises(ValueError):
            cocycle_matrix_element(lg, c3_gns, np.eye(2), np.ones(2), np.ones(2),
                                   f, f, -1.0)


class TestHpSolve:
    def test_zero_G(self, c3_gns):
        from qrwt.walk import exp_inner
        g = c3_gns
        f = random_step(g, seed=6)
        g_sf = random_step(g, seed=7)
        x = hp_solve(np.zeros((12, 12)), g, f, g_sf, 1.0, dim_h=2)
        assert np.allclose(x, exp_inner(f, g_sf) * np.eye(2))

    def test_vacuum_semigroup(self, c3_gns):
        g = c3_gns
        rng = np.random.default_rng(8)
        g_mat = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
        f = zero_step_function(6)
        t = 0.8
        x = hp_solve(g_mat, g, f, f, t, dim_h=2)
        vac_slice = slice_op(g_mat, g.Omega, g.Omega, 2)
        assert np.linalg.norm(x - mat_exp(t * vac_slice)) <= 1e-10

    def test_two_solver_consistency(self, c3_gns, c3_cond):
        g = c3_gns
        for seed in range(20):
            rng = np.random.default_rng(500 + seed)
            f_mat = random_f(g, 2, seed=seed, scale=0.6)
            lg = limit_generator(right_mult_seed(f_mat, g, 2), g, c3_cond, f=f_mat)
            f = random_step(g, seed=1000 + seed)
            g_sf = random_step(g, seed=2000 + seed)
            a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
            u = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            t = 1.0
            me = cocycle_matrix_element(lg, g, a, u, v, f, g_sf, t)
            x = hp_solve(lg.G, g, f, g_sf, t, dim_h=2)
            assert abs(me - np.vdot(u, a @ x @ v)) <= 1e-10 * max(1.0, abs(me))


@pytest.fixture(scope="module")
def c3_spec(c3_gns, c3_cond):
    return random_hamiltonian_spec(c3_gns, c3_cond, 2, seed=17, scale=0.7)


class TestHpCheck:
    def test_generated_F_is_unitary(self, c3_spec, c3_gns, c3_cond):
        f, _ = f_from_hamiltonian(c3_spec)
        lg = limit_generator(right_mult_seed(f, c3_gns, 2), c3_gns, c3_cond, f=f)
        rep = hp_check(lg.G, c3_gns, 2, f=f, c=c3_cond)
        assert rep.unitary
        assert all(r <= 1e-10 for r in rep.block_residuals.values())

    def test_perturbed_K_not_isometric(self, c3_spec, c3_gns, c3_cond):
        f, _ = f_from_hamiltonian(c3_spec)
        w0 = kron(np.eye(2), c3_gns.k0_basis)
        h = random_matrix(RNG, 4)
        pert = c3_cond.apply_E0(h + dagger(h))
        f_bad = f + 0.1 * (w0 @ pert @ dagger(w0))
        lg = limit_generator(right_mult_seed(f_bad, c3_gns, 2), c3_gns, c3_cond,
                             f=f_bad)
        rep = hp_check(lg.G, c3_gns, 2, f=f_bad, c=c3_cond)
        assert not rep.isometric

    def test_nonunitary_V_fails_blocks(self, c3_spec, c3_gns, c3_cond):
        f, _ = f_from_hamiltonian(c3_spec)
        w1 = kron(np.eye(2), c3_gns.kernel_basis)
        f_bad = f + 0.1 * (w1 @ np.eye(2) @ dagger(w1))
        rep = hp_check(np.zeros((12, 12)), c3_gns, 2, f=f_bad, c=c3_cond)
        assert rep.block_residuals["V_isometric"] > 1e-6

    def test_zero_G_trivial(self, c3_gns):
        rep = hp_check(np.zeros((12, 12)), c3_gns, 2)
        assert rep.isometric and rep.coisometric and rep.unitary

    def test_proof_block_reduction(self, c3_gns, c3_cond):
        # G + G* + G* Delta G equals the Delta-assembly of F1, F2, F3
        g = c3_gns
        f = random_f(g, 2, seed=9)
        lg = limit_generator(right_mult_seed(f, g, 2), g, c3_cond, f=f)
        g_mat = lg.G
        delta, delta_perp = delta_projections(g, 2)
        lhs = g_mat + dagger(g_mat) + dagger(g_mat) @ delta @ g_mat
        f1, f2, f3 = hp_proof_blocks(f, g, c3_cond, 2)
        from qrwt.gns import ampliate_pi
        rhs = (delta_perp @ ampliate_pi(g, f1) @ delta_perp
               + delta_perp @ ampliate_pi(g, f2) @ delta
               + delta @ ampliate_pi(g, dagger(f2)) @ delta_perp
               + delta @ ampliate_pi(g, f3) @ delta)
        assert np.linalg.norm(lhs - rhs) <= 1e-10


class TestFFromHamiltonian:
    def test_flat_fast_block(self, c3_gns, c3_cond):
        # H_times = 0: exp_1 -> 1, exp_2 -> 1/2
        g, c = c3_gns, c3_cond
        spec0 = random_hamiltonian_spec(g, c, 2, seed=18)
        spec = HamiltonianSpec(dim_h=2, gns=g, cond=c, H_d=spec0.H_d, H_o=spec0.H_o,
                               L=spec0.L, H_times=np.zeros((2, 2)))
        f, blocks = f_from_hamiltonian(spec)
        w0 = kron(np.eye(2), g.k0_basis)
        w1 = kron(np.eye(2), g.kernel_basis)
        ls = dagger(spec.L)
        f00 = (-1j * (spec.H_d + spec.H_o)
               - c.apply_E0(0.5 * spec.H_o @ spec.H_o + 0.5 * ls @ spec.L))
        assert np.linalg.norm(dagger(w0) @ f @ w0 - f00) <= 1e-12
        assert np.linalg.norm(dagger(w0) @ f @ w1 - (-1j * ls)) <= 1e-12
        assert np.linalg.norm(dagger(w1) @ f @ w0 - (-1j * spec.L)) <= 1e-12
        assert np.linalg.norm(dagger(w1) @ f @ w1) <= 1e-12
        assert np.linalg.norm(blocks.V - np.eye(2)) <= 1e-12

    def test_decoupled_case(self, c3_gns, c3_cond):
        # L = 0, H_o = 0: F = diag(-i H_d, e^{-i H_times} - 1)
        g, c = c3_gns, c3_cond
        spec0 = random_hamiltonian_spec(g, c, 2, seed=19)
        spec = HamiltonianSpec(dim_h=2, gns=g, cond=c, H_d=spec0.H_d,
                               H_o=np.zeros((4, 4)), L=np.zeros((2, 4)),
                               H_times=spec0.H_times)
        f, blocks = f_from_hamiltonian(spec)
        w0 = kron(np.eye(2), g.k0_basis)
        w1 = kron(np.eye(2), g.kernel_basis)
        v = mat_exp(-1j * spec.H_times)
        assert np.linalg.norm(dagger(w0) @ f @ w0 - (-1j * spec.H_d)) <= 1e-12
        assert np.linalg.norm(dagger(w0) @ f @ w1) <= 1e-12
        assert np.linalg.norm(dagger(w1) @ f @ w1 - (v - np.eye(2))) <= 1e-11
        assert np.linalg.norm(blocks.V - v) <= 1e-11

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_always_unitary(self, c3_gns, c3_cond, seed):
        spec = random_hamiltonian_spec(c3_gns, c3_cond, 2, seed=seed)
        f, _ = f_from_hamiltonian(spec)
        lg = limit_generator(right_mult_seed(f, c3_gns, 2), c3_gns, c3_cond, f=f)
        assert hp_check(lg.G, c3_gns, 2).unitary

    def test_structure_validation(self, c3_gns, c3_cond):
        g, c = c3_gns, c3_cond
        spec0 = random_hamiltonian_spec(g, c, 2, seed=20)
        with pytest.raises(ValueError):
            HamiltonianSpec(dim_h=2, gns=g, cond=c, H_d=spec0.H_o, H_o=spec0.H_o,
                            L=spec0.L, H_times=spec0.H_times)
        with pytest.raises(ValueError):
            HamiltonianSpec(dim_h=2, gns=g, cond=c, H_d=spec0.H_d, H_o=spec0.H_d,
                            L=spec0.L, H_times=spec0.H_times)
        nonherm = spec0.H_d.copy()
        nonherm[0, 1] += 0.3
        with pytest.raises(ValueError):
            HamiltonianSpec(dim_h=2, gns=g, cond=c, H_d=nonherm, H_o=spec0.H_o,
                            L=spec0.L, H_times=spec0.H_times)


class TestEhGenerator:
    def test_zero(self, c3_gns, c3_cond):
        eh = eh_generator(np.zeros((6, 6)), c3_gns, c3_cond, 2)
        assert eh.Psi.norm() <= 1e-14
        assert eh.limit.psi.norm() <= 1e-14

    def test_unit_killed_for_unitary_spec(self, c3_spec, c3_gns, c3_cond):
        f, _ = f_from_hamiltonian(c3_spec)
        eh = eh_generator(f, c3_gns, c3_cond, 2)
        assert np.linalg.norm(eh.limit.psi(np.eye(2))) <= 1e-10
        g_mat = eh.G
        delta, _ = delta_projections(c3_gns, 2)
        assert np.linalg.norm(g_mat + dagger(g_mat)
                              + dagger(g_mat) @ delta @ g_mat) <= 1e-10

    def test_ehpsi_identity_random_F(self, c3_gns, c3_cond):
        # the builder itself asserts the identity at 1e-11; must not raise
        for seed in range(5):
            f = random_f(c3_gns, 2, seed=30 + seed)
            eh_generator(f, c3_gns, c3_cond, 2)

    def test_upsilon_block_formula(self, c3_gns, c3_cond):
        g, c = c3_gns, c3_cond
        f = random_f(g, 2, seed=40)
        eh = eh_generator(f, g, c, 2)
        a = random_matrix(RNG, 2)
        ups = eh.upsilon(a)
        w0 = kron(np.eye(2), g.k0_basis)
        w1 = kron(np.eye(2), g.kernel_basis)
        x = dagger(w0) @ f @ w0
        z = dagger(w1) @ f @ w0
        xo = c.apply_E0_perp(x)
        lhs = dagger(w0) @ ups @ w0
        rhs = c.apply_E0(dagger(xo) @ kron(a, np.eye(2)) @ xo
                         + dagger(z) @ kron(a, np.eye(1)) @ z)
        assert np.linalg.norm(lhs - rhs) <= 1e-11


class TestLindblad:
    def test_zero(self, c3_gns, c3_cond):
        lg = limit_generator(Superoperator.zero(2, (6, 6)), c3_gns, c3_cond)
        assert lindblad(lg, c3_gns).norm() <= 1e-14

    @pytest.mark.parametrize("seed", [0, 3, 5])
    def test_closed_form_agreement(self, c3_gns, c3_cond, seed):
        spec = random_hamiltonian_spec(c3_gns, c3_cond, 2, seed=seed, scale=0.7)
        f, blocks = f_from_hamiltonian(spec)
        eh = eh_generator(f, c3_gns, c3_cond, 2)
        lsup = lindblad(eh.limit, c3_gns)
        closed = lindblad_closed_form(blocks, c3_gns, c3_cond, 2)
        assert lsup.distance(closed) <= 1e-10
        assert np.linalg.norm(lsup(np.eye(2))) <= 1e-11 * max(1.0, lsup.norm())

    def test_choi_positivity_of_semigroup(self, c3_spec, c3_gns, c3_cond):
        f, _ = f_from_hamiltonian(c3_spec)
        eh = eh_generator(f, c3_gns, c3_cond, 2)
        lsup = lindblad(eh.limit, c3_gns)
        for t in (0.1, 1.0):
            w = np.linalg.eigvalsh(choi_matrix(lsup.expm(t)))
            assert w.min() >= -1e-8


class TestConvergence:
    def test_right_mult_decreasing_with_slope(self, c3_spec):
        taus = [2.0 ** -p for p in range(2, 10)]
        d = generator_convergence(c3_spec, qrwt.KIND_RIGHT_MULT, taus)
        assert all(b < a for a, b in zip(d, d[1:]))
        assert loglog_slope(taus, d) >= 0.4

    def test_conjugation_with_perturbation_same_limit(self, c3_gns, c3_cond):
        taus = [2.0 ** -p for p in range(2, 10)]
        spec = random_hamiltonian_spec(c3_gns, c3_cond, 2, seed=21, scale=0.6)
        spec_r = random_hamiltonian_spec(c3_gns, c3_cond, 2, seed=21, scale=0.6,
                                         with_r=True)
        # same unperturbed blocks
        assert np.allclose(spec.H_d, spec_r.H_d)
        d = generator_convergence(spec_r, qrwt.KIND_CONJUGATION, taus)
        assert all(b < a for a, b in zip(d, d[1:]))
        assert loglog_slope(taus, d) >= 0.4

    def test_empty_tau_list(self, c3_spec):
        with pytest.raises(ValueError):
            generator_convergence(c3_spec, qrwt.KIND_RIGHT_MULT, [])

    def test_flat_slope_none(self):
        assert loglog_slope([0.1, 0.01], [0.0, 0.0]) is None


class TestWeakUnitarityTransfer:
    def test_vacuum_contraction_and_identity_cocycle(self, c3_spec, c3_gns, c3_cond):
        g = c3_gns
        f_mat, _ = f_from_hamiltonian(c3_spec)
        eh = eh_generator(f_mat, g, c3_cond, 2)
        f = random_step(g, seed=50)
        g_sf = random_step(g, seed=51)
        rng = np.random.default_rng(52)
        u = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        v = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        from qrwt.walk import exp_inner
        zero = zero_step_function(g.khat_dim)
        for t in (0.3, 1.0, 2.0):
            # vacuum matrix element of the driving process is a contraction
            x = hp_solve(eh.G, g, zero, zero, t, dim_h=2)
            assert np.linalg.norm(x, ord=2) <= 1.0 + 1e-9
            # j_t(1) acts as the identity weakly
            me = cocycle_matrix_element(eh.limit, g, np.eye(2), u, v, f, g_sf, t)
            target = np.vdot(u, v) * exp_inner(f, g_sf)
            assert abs(me - target) <= 1e-10 * max(1.0, abs(target))

from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg as la

from obsblock.config import DesignOptions
from obsblock.cutset import design_via_cutset
from obsblock.designer import design_blocking
from obsblock.model import assemble, closed_loop
from obsblock.scenarios import fig2_din, generic_network, random_network
from obsblock.spectrum import decompose
from obsblock.verify import (observability_rank, output_energy, pbh_test,
                             preservation_audit, verify_design)


class TestPbh:
    def test_identity_output_always_full(self, rng):
        A = rng.standard_normal((6, 6))
        for lam in la.eigvals(A):
            assert pbh_test(A, np.eye(6), lam) == 6

    def test_blocked_design_rank_deficient(self):
        net = random_network(n=8, seed=1, m=2, q=4)
        design = design_blocking(net, DesignOptions(seed=1))
        A, B, C = assemble(net)
        A_cl = closed_loop(A, B, design.F)
        assert pbh_test(A_cl, C, design.lambda_p) <= 15

    @pytest.mark.parametrize("seed", range(5))
    def test_agrees_with_observability_matrix_oracle(self, seed):
        # non-defective generic instances: aggregated PBH verdict must
        # match the stacked-matrix rank verdict, open and closed loop
        net = generic_network(n=6, seed=seed, m=1, q=3)
        A, B, C = assemble(net)
        sd = decompose(A)
        assert not sd.defective.any()
        d = 2 * net.n

        def pbh_unobservable(M):
            return any(pbh_test(M, C, lam) < d for lam in la.eigvals(M))

        assert pbh_unobservable(A) == (observability_rank(A, C) < d)
        design = design_blocking(net, DesignOptions(seed=seed))
        A_cl = closed_loop(A, B, design.F)
        assert pbh_unobservable(A_cl)
        assert observability_rank(A_cl, C) < d


class TestObservabilityRank:
    def test_identity_output(self, rng):
        A = rng.standard_normal((5, 5))
        assert observability_rank(A, np.eye(5)) == 5

    def test_single_node_position_measurement(self):
        A = np.array([[0.0, 1.0], [0.0, 0.0]])
        C = np.array([[1.0, 0.0]])
        assert observability_rank(A, C) == 2

    def test_complex_pair_blocking_drops_two(self):
        net = generic_network(n=7, seed=11, m=1, q=3)
        sd = decompose(assemble(net)[0])
        pairs = [i for i in range(sd.dim) if sd.eigenvalues[i].imag > 0]
        design = design_blocking(
            net, DesignOptions(seed=11, lambda_selection=("index", pairs[0])))
        A, B, C = assemble(net)
        A_cl = closed_loop(A, B, design.F)
        assert observability_rank(A_cl, C) <= 2 * net.n - 2

    def test_large_spectrum_no_overflow(self):
        A = np.diag([50.0, -50.0, 30.0, -30.0])
        C = np.ones((1, 4))
        assert observability_rank(A, C) == 4


class TestPreservationAudit:
    def test_zero_gain_record_is_exact(self):
        net = random_network(n=6, seed=3, m=1, q=3)
        design = design_blocking(net, DesignOptions(seed=3))
        A, _, _ = assemble(net)
        err, residuals = preservation_audit(design.open_loop, design, A_cl=A)
        assert err < 1e-12
        # snapped eigenpairs carry the snap budget as residual
        assert max(residuals) < 1e-8 * max(1.0, design.open_loop.matrix_norm)

    def test_fig2_design_preserves(self):
        net = fig2_din(seed=9)
        result = design_via_cutset(net, options=DesignOptions(seed=9))
        err, residuals = preservation_audit(result.design.open_loop, result.design)
        assert err < 1e-6
        assert max(residuals, default=0.0) < 1e-6

    def test_repaired_columns_not_audited(self):
        net = random_network(n=7, seed=17, m=1, q=3)
        design = design_blocking(net, DesignOptions(seed=17))
        assert set(design.preserved).isdisjoint(design.repaired)
        assert set(design.preserved).isdisjoint(design.replaced)
        _, residuals = preservation_audit(design.open_loop, design)
        assert len(residuals) == len(design.preserved)


class TestOutputEnergy:
    def test_zero_state(self):
        A = -np.eye(3)
        C = np.eye(3)
        energy, _, _ = output_energy(A, C, np.zeros(3), T=2.0, dt=0.01)
        assert energy == 0.0

    def test_blocked_direction_dark(self):
        net = random_network(n=8, seed=6, m=2, q=4)
        design = design_blocking(net, DesignOptions(seed=6))
        A, B, C = assemble(net)
        A_cl = closed_loop(A, B, design.F)
        x0 = np.real(design.v_hat)
        x0 /= np.linalg.norm(x0)
        energy, used, _ = output_energy(A_cl, C, x0, T=10.0)
        assert used == pytest.approx(10.0)
        assert energy < 1e-10 * used

    def test_generic_direction_visible(self, rng):
        net = random_network(n=8, seed=6, m=2, q=4)
        design = design_blocking(net, DesignOptions(seed=6))
        A, B, C = assemble(net)
        A_cl = closed_loop(A, B, design.F)
        x0 = rng.standard_normal(16)
        x0 /= np.linalg.norm(x0)
        energy, _, _ = output_energy(A_cl, C, x0, T=10.0)
        assert energy > 1e-4

    def test_step_halving_stable(self, rng):
        net = random_network(n=6, seed=8, m=1, q=3)
        A, _, C = assemble(net)
        x0 = rng.standard_normal(12)
        x0 /= np.linalg.norm(x0)
        e1, _, _ = output_energy(A, C, x0, T=5.0, dt=0.01)
        e2, _, _ = output_energy(A, C, x0, T=5.0, dt=0.005)
        assert abs(e1 - e2) < 0.01 * max(e1, e2)

    def test_unstable_horizon_shortened(self):
        A = np.array([[400.0]])
        C = np.eye(1)
        _, used, _ = output_energy(A, C, np.ones(1), T=10.0, dt=0.01)
        assert used < 10.0

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            output_energy(np.eye(2), np.eye(2), np.ones(2), T=0.0)


class TestVerifyDesign:
    def test_accepted_design_passes_all_oracles(self):
        net = random_network(n=8, seed=14, m=2, q=4)
        design = design_blocking(net, DesignOptions(seed=14))
        report = verify_design(design)
        assert report.verdict
        assert not report.reasons
        assert report.pbh_rank_at_lambda < report.full_state_dim
        assert report.obs_matrix_rank < report.full_state_dim
        assert report.output_energy < report.blocked_energy_bound
        assert report.random_output_energy > 1e-6

    def test_cutset_design_verifies_against_base_output(self):
        net = fig2_din(seed=12)
        result = design_via_cutset(net, options=DesignOptions(seed=12))
        _, _, C = assemble(net)
        report = verify_design(result.design, C=C)
        assert report.verdict, report.reasons

    def test_tampered_gain_fails(self):
        net = random_network(n=7, seed=4, m=1, q=3)
        design = design_blocking(net, DesignOptions(seed=4))
        design.gain.matrix[0, 0] += 0.5
        report = verify_design(design)
        assert not report.verdict
        assert report.reasons

import numpy as np
import pytest

from dglab import basis as bs
from dglab import vn1d

from oracles import global_periodic_matrix


def omega_from_matrix(mat, spacing=1.0):
    return 2j / spacing * np.linalg.eigvals(mat)


class TestAssembleOperator:
    def test_central_inviscid_is_energy_conserving(self):
        # all temporal frequencies real for every wave-number
        cfg = vn1d.VnConfig(degree=7)
        for kh in (0.1, 1.0, np.pi, 5.0, 11.0):
            op = vn1d.assemble_operator(cfg, kh)
            omega = omega_from_matrix(op.matrix)
            assert np.max(np.abs(omega.imag)) < 1e-11, kh

    def test_zero_wavenumber_has_zero_frequency(self):
        cfg = vn1d.VnConfig(degree=7)
        dec = vn1d.decompose(vn1d.assemble_operator(cfg, 0.0), cfg)
        assert abs(dec.omega[dec.primary]) < 1e-12

    @pytest.mark.parametrize("family", bs.NODE_FAMILIES)
    def test_bloch_pair_matches_global_matrix(self, family):
        # N=1, lam=1, kh=pi/2 against the brute-force 4-element cyclic system
        cfg = vn1d.VnConfig(degree=1, family=family, lam=1.0)
        op = vn1d.assemble_operator(cfg, np.pi / 2)
        local = np.sort_complex(np.linalg.eigvals(op.matrix))
        glob = np.linalg.eigvals(global_periodic_matrix(4, 1, family, lam=1.0))
        for ev in local:
            assert np.min(np.abs(glob - ev)) < 1e-10

    def test_conjugate_symmetry(self):
        cfg = vn1d.VnConfig(degree=5, lam=0.6, peclet=10.0)
        for kh in (0.3, 2.0, 3.0):
            m_pos = vn1d.assemble_operator(cfg, kh).matrix
            m_neg = vn1d.assemble_operator(cfg, -kh).matrix
            assert np.allclose(m_neg, np.conj(m_pos), atol=1e-12)
            s_pos = np.sort_complex(np.linalg.eigvals(m_pos))
            s_neg = np.sort_complex(np.conj(np.linalg.eigvals(m_neg)))
            assert np.allclose(s_pos, s_neg, atol=1e-10)

    def test_wrapped_wavenumber_same_matrix(self):
        cfg = vn1d.VnConfig(degree=3, lam=0.5)
        a = vn1d.assemble_operator(cfg, 0.7)
        b = vn1d.assemble_operator(cfg, 0.7 + 2 * np.pi)
        assert np.allclose(a.matrix, b.matrix, atol=1e-13)
        assert a.kh_bloch == pytest.approx(b.kh_bloch, abs=1e-12)

    def test_dissipation_sign_for_positive_lambda(self):
        # interface penalty never feeds energy, for any lambda > 0
        for lam in (0.1, 0.5, 1.0, 2.0, 10.0):
            cfg = vn1d.VnConfig(degree=4, lam=lam)
            for kh in (0.2, 1.3, 2.8):
                omega = omega_from_matrix(
                    vn1d.assemble_operator(cfg, kh).matrix)
                assert np.max(omega.imag) < 1e-12

    def test_viscous_operator_from_global_oracle(self):
        # commensurate kh: eigenvalues must appear in the cyclic system
        cfg = vn1d.VnConfig(degree=2, lam=0.3, peclet=4.0)
        e_count = 5
        glob = global_periodic_matrix(e_count, 2, bs.GAUSS, lam=0.3,
                                      mu=cfg.viscosity)
        glob_ev = np.linalg.eigvals(glob)
        for q in range(e_count):
            kh = 2 * np.pi * q / e_count
            ev = np.linalg.eigvals(vn1d.assemble_operator(cfg, kh).matrix)
            for e in ev:
                assert np.min(np.abs(glob_ev - e)) < 1e-9


class TestDecompose:
    def test_constant_state_exactly_representable(self):
        cfg = vn1d.VnConfig(degree=7)
        dec = vn1d.decompose(vn1d.assemble_operator(cfg, 0.0), cfg)
        assert abs(abs(dec.amplitudes[dec.primary]) - 1.0) < 1e-12
        others = np.delete(dec.amplitudes, dec.primary)
        assert np.sum(np.abs(others)) < 1e-10

    def test_distinct_purely_imaginary_eigenvalues(self):
        # central fluxes: N+1 distinct -i*omega values on the imaginary axis
        cfg = vn1d.VnConfig(degree=7)
        for kh in (0.5, 1.7, 3.0):
            dec = vn1d.decompose(vn1d.assemble_operator(cfg, kh), cfg)
            assert np.max(np.abs(dec.omega.imag)) < 1e-10
            gaps = np.diff(np.sort(dec.omega.real))
            assert np.all(gaps > 1e-8)

    def test_eigenpair_residual(self):
        cfg = vn1d.VnConfig(degree=2, lam=0.5)
        op = vn1d.assemble_operator(cfg, 1.0)
        dec = vn1d.decompose(op, cfg)
        for m in range(3):
            lhs = -1j * dec.omega[m] * (cfg.spacing / 2) * dec.vectors[:, m]
            rhs = op.matrix @ dec.vectors[:, m]
            assert np.max(np.abs(lhs - rhs)) < 1e-9

    @pytest.mark.parametrize("kh", [0.25, 1.1, 2.9, 7.0])
    def test_reconstructs_plane_wave(self, kh):
        cfg = vn1d.VnConfig(degree=6, lam=0.8, peclet=50.0)
        dec = vn1d.decompose(vn1d.assemble_operator(cfg, kh), cfg)
        x = (cfg.basis.nodes + 1) * cfg.spacing / 2
        u0 = np.exp(1j * kh / cfg.spacing * x)
        recon = dec.vectors @ dec.amplitudes
        assert np.max(np.abs(recon - u0)) < 1e-9

    def test_defective_matrix_is_signalled(self):
        cfg = vn1d.VnConfig(degree=1)
        jordan = vn1d.VnOperator(kh=0.5, kh_bloch=0.5,
                                 matrix=np.array([[1.0, 1.0], [0.0, 1.0]]))
        with pytest.raises(vn1d.VnEigenError):
            vn1d.decompose(jordan, cfg)


class TestTrackPrimary:
    def test_low_wavenumber_speed_consistency(self):
        # full upwind: physical propagation speed recovered within 1%
        cfg = vn1d.VnConfig(degree=7, lam=1.0)
        grid = vn1d.default_khat_grid(128)
        sweep = vn1d.dispersion_dissipation_sweep(cfg, grid)
        mask = grid < 0.3
        k = sweep.kh[mask]
        re_p = np.array([sweep.omega[i, sweep.primary[i]].real
                         for i in np.nonzero(mask)[0]])
        assert np.max(np.abs(re_p - k) / k) < 0.01

    def test_central_follows_then_departs(self):
        # accurate up to about half the resolvable range, then deviates
        cfg = vn1d.VnConfig(degree=7)
        grid = vn1d.default_khat_grid(256)
        track = vn1d.track_primary(cfg, grid)
        sweep = vn1d.dispersion_dissipation_sweep(cfg, grid)
        rel = np.abs(np.array([sweep.omega[i, track.indices[i]].real
                               for i in range(grid.size)]) - sweep.kh) / sweep.kh
        assert np.max(rel[grid <= 1.0]) < 0.01
        beyond = rel[grid > np.pi / 2]
        assert np.max(beyond) > 0.05

    def test_seed_is_argmin_omega(self):
        cfg = vn1d.VnConfig(degree=5, lam=0.2)
        grid = np.array([1e-4 / 6, 0.3, 0.6])
        track = vn1d.track_primary(cfg, grid)
        dec = vn1d.decompose(vn1d.assemble_operator(cfg, cfg.kh(grid[0])), cfg)
        assert track.indices[0] == int(np.argmin(np.abs(dec.omega)))

    def test_amplitude_crosscheck_reported(self):
        cfg = vn1d.VnConfig(degree=4, lam=1.0)
        grid = vn1d.default_khat_grid(64)
        track = vn1d.track_primary(cfg, grid)
        assert track.amplitude_indices.shape == track.indices.shape
        # the two criteria agree over the well-resolved range
        low = grid < 0.5
        agree = np.mean(track.indices[low] == track.amplitude_indices[low])
        assert agree > 0.9

    def test_rejects_descending_grid(self):
        cfg = vn1d.VnConfig(degree=3)
        with pytest.raises(vn1d.VnConfigError):
            vn1d.track_primary(cfg, np.array([0.5, 0.2]))


class TestSweep:
    def test_inviscid_central_no_dissipation(self):
        cfg = vn1d.VnConfig(degree=7)
        sweep = vn1d.dispersion_dissipation_sweep(cfg)
        assert np.nanmax(np.abs(sweep.omega_hat.imag)) < 1e-10

    def test_viscous_dispersion_unchanged(self):
        # BR1 shares eigenvectors with the central advective operator, so
        # the real parts match the inviscid sweep to round-off
        grid = vn1d.default_khat_grid(128)
        sw_i = vn1d.dispersion_dissipation_sweep(vn1d.VnConfig(degree=7), grid)
        sw_v = vn1d.dispersion_dissipation_sweep(
            vn1d.VnConfig(degree=7, peclet=1.0), grid)
        re_i = np.sort(sw_i.omega_hat.real, axis=1)
        re_v = np.sort(sw_v.omega_hat.real, axis=1)
        assert np.nanmax(np.abs(re_i - re_v)) < 1e-9

    def test_viscous_low_wavenumber_parabola(self):
        # Im(w_p) ~ -k^2/Pe at resolved wave-numbers
        cfg = vn1d.VnConfig(degree=7, peclet=1.0)
        grid = vn1d.default_khat_grid(256)
        sweep = vn1d.dispersion_dissipation_sweep(cfg, grid)
        mask = grid < 0.4
        idx = np.nonzero(mask)[0]
        im_p = np.array([sweep.omega[i, sweep.primary[i]].imag for i in idx])
        target = -sweep.kh[idx] ** 2 / cfg.peclet
        assert np.max(np.abs(im_p - target) / np.abs(target)) < 0.05

    def test_deterministic(self):
        cfg = vn1d.VnConfig(degree=4, lam=0.3)
        grid = vn1d.default_khat_grid(64)
        a = vn1d.dispersion_dissipation_sweep(cfg, grid)
        b = vn1d.dispersion_dissipation_sweep(cfg, grid)
        assert np.array_equal(a.omega, b.omega)
        assert np.array_equal(a.secondary_error, b.secondary_error)

    def test_csv_roundtrip(self, tmp_path):
        import csv as csvmod
        cfg = vn1d.VnConfig(degree=3, lam=0.5, peclet=20.0)
        grid = vn1d.default_khat_grid(16)
        sweep = vn1d.dispersion_dissipation_sweep(cfg, grid)
        path = tmp_path / "sweep.csv"
        vn1d.write_sweep_csv(path, sweep)
        with open(path) as fh:
            rows = list(csvmod.reader(fh))
        assert rows[0] == ["k_hat", "mode_index", "re_omega_hat",
                           "im_omega_hat", "is_primary", "amp_abs",
                           "secondary_error", "jump_abs"]
        body = rows[1:]
        assert len(body) == grid.size * 4
        for i, khat in enumerate(grid):
            for m in range(4):
                row = body[i * 4 + m]
                assert float(row[0]) == khat
                assert float(row[2]) == sweep.omega_hat[i, m].real
                assert float(row[3]) == sweep.omega_hat[i, m].imag
                assert float(row[6]) == sweep.secondary_error[i]


class TestSecondaryModes:
    def test_vanishes_at_zero_wavenumber(self):
        cfg = vn1d.VnConfig(degree=7)
        dec = vn1d.decompose(vn1d.assemble_operator(cfg, 0.0), cfg)
        assert vn1d.secondary_mode_error(dec) < 1e-10
        assert abs(vn1d.interface_jump(dec)) < 1e-10

    def test_two_region_shape(self):
        # exponentially small when resolved, plateau when under-resolved
        cfg = vn1d.VnConfig(degree=7)
        grid = vn1d.default_khat_grid(256)
        sweep = vn1d.dispersion_dissipation_sweep(cfg, grid)
        err = sweep.secondary_error
        plateau = err[grid > np.pi / 2]
        assert err[np.argmin(np.abs(grid - 0.1))] < 1e-6 * plateau.mean()
        # log-curve rises monotonically through the resolved range ...
        low = err[(grid > 0.05) & (grid < 1.0)]
        assert np.mean(np.diff(np.log(low)) > 0) > 0.85
        # ... and is flat (within a factor) at high wave-numbers
        assert plateau.max() / plateau.min() < 3.0

    def test_lambda_effect_small_on_log_scale(self):
        # penalty strength barely moves the secondary content: pairwise
        # log-distance below 10% of the curve's dynamic range at low khat
        grid = vn1d.default_khat_grid(256)
        curves = {}
        for lam in (0.0, 0.5, 1.0):
            cfg = vn1d.VnConfig(degree=7, lam=lam)
            curves[lam] = vn1d.dispersion_dissipation_sweep(cfg, grid
                                                            ).secondary_error
        decades = np.log10(max(c.max() for c in curves.values())
                           / min(c.min() for c in curves.values()))
        mask = grid < 0.5
        for a in (0.0, 0.5):
            for b in (0.5, 1.0):
                if a >= b:
                    continue
                spread = np.abs(np.log10(curves[a][mask] / curves[b][mask]))
                assert np.max(spread) / decades < 0.10

    def test_jump_equals_secondary_trace_mismatch(self):
        # algebraic identity: boundary jump of (full solution - primary
        # part) equals the secondary-mode formula
        cfg = vn1d.VnConfig(degree=7, lam=0.5)
        b = cfg.basis
        for kh in (0.7, 1.9, 2.9):
            dec = vn1d.decompose(vn1d.assemble_operator(cfg, kh), cfg)
            x = (b.nodes + 1) / 2
            u0 = np.exp(1j * kh * x)
            phase = np.exp(1j * kh)
            vp = dec.vectors[:, dec.primary]
            full = (b.right @ u0) - phase * (b.left @ u0)
            primary = dec.amplitudes[dec.primary] * (
                (b.right @ vp) - phase * (b.left @ vp))
            assert abs((full - primary) - vn1d.interface_jump(dec)) < 1e-10

    def test_jump_tracks_secondary_error(self):
        cfg = vn1d.VnConfig(degree=7)
        grid = vn1d.default_khat_grid(256)
        sweep = vn1d.dispersion_dissipation_sweep(cfg, grid)
        mask = (sweep.secondary_error > 1e-13) & (sweep.jump_abs > 1e-13)
        corr = np.corrcoef(np.log(sweep.secondary_error[mask]),
                           np.log(sweep.jump_abs[mask]))[0, 1]
        assert corr > 0.95


class TestSvvOperator:
    def test_power_zero_equals_constant_viscosity(self):
        mu = 0.37
        kern = bs.svv_kernel(7, power=0.0)
        cfg_svv = vn1d.VnConfig(degree=7, svv=vn1d.VnSvv(mu=mu, kernel=kern))
        cfg_mu = vn1d.VnConfig(degree=7, peclet=1.0 / mu)
        for kh in (0.3, 1.5, 3.0):
            m_svv = vn1d.assemble_operator(cfg_svv, kh).matrix
            m_mu = vn1d.assemble_operator(cfg_mu, kh).matrix
            assert np.max(np.abs(m_svv - m_mu)) < 1e-12

    def test_power_large_is_inviscid_plus_top_mode_term(self):
        mu = 0.005
        kern = bs.svv_kernel(7, power=1000.0)
        cfg_svv = vn1d.VnConfig(degree=7, svv=vn1d.VnSvv(mu=mu, kernel=kern))
        cfg_inv = vn1d.VnConfig(degree=7)
        b = cfg_inv.basis
        top = np.zeros(8)
        top[-1] = 1.0
        proj = (b.vandermonde * top[None, :]) @ b.inverse_vandermonde
        for kh in (0.4, 2.2):
            central = vn1d._central_derivative_batch(cfg_inv, np.array([kh]))[0]
            correction = (2 * mu / cfg_inv.spacing) * (central @ proj @ central)
            m_svv = vn1d.assemble_operator(cfg_svv, kh).matrix
            m_inv = vn1d.assemble_operator(cfg_inv, kh).matrix
            assert np.max(np.abs(m_svv - (m_inv + correction))) < 1e-6

    def test_svv_only_dissipates(self):
        kern = bs.svv_kernel(6, power=0.5)
        cfg = vn1d.VnConfig(degree=6, svv=vn1d.VnSvv(mu=0.01, kernel=kern))
        for kh in (0.5, 1.5, 2.9):
            omega = omega_from_matrix(vn1d.assemble_operator(cfg, kh).matrix)
            assert np.max(omega.imag) < 1e-12

    def test_svv_bloch_oracle(self):
        kern = bs.svv_kernel(2, power=1.0)
        cfg = vn1d.VnConfig(degree=2, lam=0.4,
                            svv=vn1d.VnSvv(mu=0.02, kernel=kern))
        e_count = 4
        glob_ev = np.linalg.eigvals(global_periodic_matrix(
            e_count, 2, bs.GAUSS, lam=0.4, svv_mu=0.02, svv_q=kern.q))
        for q in range(e_count):
            kh = 2 * np.pi * q / e_count
            ev = np.linalg.eigvals(vn1d.assemble_operator(cfg, kh).matrix)
            for e in ev:
                assert np.min(np.abs(glob_ev - e)) < 1e-9


class TestLambdaScan:
    def test_zero_lambda_all_groups_zero(self):
        cfg = vn1d.VnConfig(degree=3)
        scan = vn1d.max_dissipation_vs_lambda(cfg, np.array([0.0]),
                                              vn1d.default_khat_grid(64))
        assert scan.points[0].group_maxima[-1] < 1e-12
        assert scan.events == []

    def test_reference_value_ordering(self):
        # bounded-set peak dissipation: standard upwind tops both the
        # low-dissipation and the over-penalized settings
        cfg = vn1d.VnConfig(degree=7, family=bs.GAUSS_LOBATTO)
        grid = vn1d.default_khat_grid(128)
        scan = vn1d.max_dissipation_vs_lambda(
            cfg, np.array([0.1, 1.0, 10.0]), grid)
        v01, v1, v10 = (pt.bounded_max for pt in scan.points)
        assert v1 > v01 > v10

    def test_penalty_mode_unbounded(self):
        cfg = vn1d.VnConfig(degree=7, family=bs.GAUSS_LOBATTO)
        grid = vn1d.default_khat_grid(128)
        scan = vn1d.max_dissipation_vs_lambda(cfg, np.array([5.0, 10.0]), grid)
        tops = [pt.group_maxima[-1] for pt in scan.points]
        assert tops[1] > 1.5 * tops[0]
        for pt in scan.points:
            assert pt.group_sizes[-1] == 1

    def test_merge_and_split_events_detected(self):
        cfg = vn1d.VnConfig(degree=7, family=bs.GAUSS_LOBATTO)
        grid = vn1d.default_khat_grid(96)
        lams = np.linspace(0.6, 1.3, 15)
        scan = vn1d.max_dissipation_vs_lambda(cfg, lams, grid)
        kinds = [kind for _, kind in scan.events]
        assert "merge" in kinds
        assert "split" in kinds

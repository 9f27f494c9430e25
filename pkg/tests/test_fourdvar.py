import numpy as np
import pytest

from wlsprecond import instances
from wlsprecond.fourdvar import (
    VARIANT_CUSTOM,
    VARIANT_IDENTITY,
    VARIANT_ZERO,
    BlockCovariances,
    DimensionMismatch,
    FourDVarLayout,
    UnsupportedVariant,
    apply_L,
    apply_Linv,
    assemble_L,
    assemble_Ltilde,
    assemble_state_system,
    background_spectrum_check,
    error_blocks,
    identity_covariances,
    read_layout,
    rho_bound,
    write_layout,
)
from wlsprecond.linalg import SpdMatrix, spectral_norm, triangular_solve


def scalar_layout(models, variant=VARIANT_ZERO, approx=None):
    blocks = tuple(np.array([[m]], dtype=float) for m in models)
    if approx is not None:
        approx = tuple(np.array([[m]], dtype=float) for m in approx)
    return FourDVarLayout(1, len(blocks), blocks, variant, approx)


class TestAssembly:
    def test_scalar_single_window(self):
        assert np.allclose(assemble_L(scalar_layout([2.0])), [[1.0, 0.0], [-2.0, 1.0]])

    def test_zero_models_give_identity(self):
        layout = FourDVarLayout(2, 3, tuple(np.zeros((2, 2)) for _ in range(3)))
        assert np.array_equal(assemble_L(layout), np.eye(8))

    def test_block_placement(self):
        rng = np.random.default_rng(20)
        models = tuple(rng.standard_normal((2, 2)) for _ in range(2))
        l = assemble_L(FourDVarLayout(2, 2, models))
        # index-arithmetic oracle
        expected = np.eye(6)
        for j, m in enumerate(models):
            for r in range(2):
                for c in range(2):
                    expected[(j + 1) * 2 + r, j * 2 + c] = -m[r, c]
        assert np.array_equal(l, expected)

    def test_unit_lower_triangular(self):
        rng = np.random.default_rng(21)
        layout = instances.random_layout(rng)
        l = assemble_L(layout)
        assert np.allclose(np.diag(l), 1.0)
        assert np.allclose(np.triu(l, 1), 0.0)
        assert np.linalg.det(l) == pytest.approx(1.0, rel=1e-9)

    def test_ltilde_zero_variant(self):
        layout = scalar_layout([2.0, 3.0], VARIANT_ZERO)
        assert np.array_equal(assemble_Ltilde(layout), np.eye(3))

    def test_ltilde_identity_variant(self):
        layout = scalar_layout([2.0], VARIANT_IDENTITY)
        assert np.allclose(assemble_Ltilde(layout), [[1.0, 0.0], [-1.0, 1.0]])

    def test_ltilde_custom_exact(self):
        rng = np.random.default_rng(22)
        models = tuple(rng.standard_normal((2, 2)) for _ in range(3))
        layout = FourDVarLayout(2, 3, models, VARIANT_CUSTOM, models)
        assert np.array_equal(assemble_Ltilde(layout), assemble_L(layout))

    def test_degenerate_no_subwindows(self):
        layout = FourDVarLayout(3, 0, ())
        assert np.array_equal(assemble_L(layout), np.eye(3))
        assert np.array_equal(error_blocks(layout), np.zeros((3, 3)))
        assert rho_bound(layout) == 0.0


class TestApplyLinv:
    def test_forward_substitution(self):
        layout = scalar_layout([2.0], VARIANT_CUSTOM, approx=[2.0])
        assert np.allclose(apply_Linv(layout, [1.0, 0.0]), [1.0, 2.0])

    def test_zero_variant_is_identity(self):
        layout = scalar_layout([5.0, -3.0], VARIANT_ZERO)
        rhs = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(apply_Linv(layout, rhs), rhs)

    def test_matches_dense_solve(self):
        rng = np.random.default_rng(23)
        models = tuple(rng.standard_normal((3, 3)) for _ in range(4))
        approx = tuple(rng.standard_normal((3, 3)) for _ in range(4))
        layout = FourDVarLayout(3, 4, models, VARIANT_CUSTOM, approx)
        rhs = rng.standard_normal(layout.dim)
        ltil = assemble_Ltilde(layout)
        for transposed in (False, True):
            got = apply_Linv(layout, rhs, transposed=transposed)
            ref = triangular_solve(ltil, rhs, transposed=transposed)
            assert np.linalg.norm(got - ref) <= 1e-12 * np.linalg.norm(ref)

    def test_multiply_back_recovers_rhs(self):
        rng = np.random.default_rng(24)
        layout = instances.random_layout(rng, variant=VARIANT_IDENTITY)
        rhs = rng.standard_normal(layout.dim)
        y = apply_Linv(layout, rhs)
        back = assemble_Ltilde(layout) @ y
        assert np.linalg.norm(back - rhs) <= 1e-12 * max(np.linalg.norm(rhs), 1.0)

    def test_apply_L_matches_dense(self):
        rng = np.random.default_rng(25)
        layout = instances.random_layout(rng, variant=VARIANT_ZERO)
        x = rng.standard_normal(layout.dim)
        l = assemble_L(layout)
        assert np.allclose(apply_L(layout, x), l @ x)
        assert np.allclose(apply_L(layout, x, transposed=True), l.T @ x)


class TestErrorBlocks:
    def test_zero_variant_display(self):
        e = error_blocks(scalar_layout([2.0, 3.0], VARIANT_ZERO))
        assert np.allclose(e, [[0, 0, 0], [-2, 0, 0], [0, -3, 0]])

    def test_identity_variant_display(self):
        e = error_blocks(scalar_layout([2.0, 3.0], VARIANT_IDENTITY))
        assert np.allclose(e, [[0, 0, 0], [-1, 0, 0], [-2, -2, 0]])

    def test_identity_variant_exact_models(self):
        layout = FourDVarLayout(2, 3, tuple(np.eye(2) for _ in range(3)),
                                VARIANT_IDENTITY)
        assert np.allclose(error_blocks(layout), 0.0)

    def test_matches_dense_for_random_layouts(self):
        for i in range(60):
            rng = instances.rng_for(9, i)
            layout = instances.random_layout(rng)
            dense = assemble_L(layout) @ np.linalg.inv(assemble_Ltilde(layout)) \
                - np.eye(layout.dim)
            assert np.max(np.abs(error_blocks(layout) - dense)) <= 1e-12


class TestRhoBound:
    def test_zero_scalar(self):
        assert rho_bound(scalar_layout([0.5])) == pytest.approx(0.5)

    def test_identity_scalar(self):
        layout = scalar_layout([0.5], VARIANT_IDENTITY)
        assert rho_bound(layout) == pytest.approx(np.sqrt(3) * 0.5, rel=1e-12)

    def test_identity_two_windows(self):
        layout = scalar_layout([0.5, 0.5], VARIANT_IDENTITY)
        assert rho_bound(layout) == pytest.approx(np.sqrt(6) / 2, rel=1e-12)

    def test_zero_models(self):
        assert rho_bound(scalar_layout([0.0, 0.0])) == 0.0

    def test_custom_unsupported(self):
        layout = scalar_layout([1.0], VARIANT_CUSTOM, approx=[1.0])
        with pytest.raises(UnsupportedVariant):
            rho_bound(layout)

    def test_dominates_error_norm(self):
        for i in range(40):
            rng = instances.rng_for(10, i)
            variant = VARIANT_ZERO if i % 2 else VARIANT_IDENTITY
            layout = instances.random_contractive_layout(rng, variant=variant)
            assert spectral_norm(error_blocks(layout)) <= rho_bound(layout) * (1 + 1e-9)

    def test_zero_variant_norm_is_exact(self):
        rng = np.random.default_rng(26)
        layout = instances.random_layout(rng, variant=VARIANT_ZERO)
        if layout.n_sw:
            expected = max(spectral_norm(m) for m in layout.models)
            assert spectral_norm(error_blocks(layout)) == \
                pytest.approx(expected, rel=1e-10)


class TestBackgroundSpectrumCheck:
    def test_custom_exact_gives_ones(self):
        rng = np.random.default_rng(27)
        models = tuple(0.5 * rng.standard_normal((2, 2)) for _ in range(3))
        layout = FourDVarLayout(2, 3, models, VARIANT_CUSTOM, models)
        report = background_spectrum_check(layout, identity_covariances(layout))
        assert np.allclose(report.eigenvalues, 1.0)
        assert report.contained_error
        assert report.rho is None

    def test_zero_variant_contained(self):
        for i in range(20):
            rng = instances.rng_for(11, i)
            layout = instances.random_contractive_layout(rng, variant=VARIANT_ZERO)
            report = background_spectrum_check(layout, identity_covariances(layout))
            assert report.contained_rho and report.contained_error

    def test_identity_rho_radius_looser(self):
        layout = scalar_layout([0.9, 0.9, 0.9], VARIANT_IDENTITY)
        report = background_spectrum_check(layout, identity_covariances(layout))
        assert report.contained_rho and report.contained_error
        assert report.ball_rho.radius > report.ball_error.radius

    def test_dimension_mismatch(self):
        layout = scalar_layout([0.5])
        cov = BlockCovariances((SpdMatrix(np.eye(1)),))
        with pytest.raises(DimensionMismatch):
            background_spectrum_check(layout, cov)


class TestStateSystem:
    def test_trivial(self):
        layout = scalar_layout([0.0])
        b = np.array([3.0, 4.0])
        sys, rhs = assemble_state_system(layout, identity_covariances(layout), b)
        assert np.allclose(sys.mat, np.eye(2))
        assert np.allclose(rhs, b)

    def test_hand_computed(self):
        layout = scalar_layout([2.0])
        b = np.array([1.0, 1.0])
        sys, rhs = assemble_state_system(layout, identity_covariances(layout), b)
        assert np.allclose(sys.mat, [[5.0, -2.0], [-2.0, 1.0]])
        lmat = np.array([[1.0, 0.0], [-2.0, 1.0]])
        assert np.allclose(rhs, lmat.T @ b)

    def test_identity_observation_term(self):
        layout = scalar_layout([2.0])
        eye = SpdMatrix(np.eye(1))
        cov = BlockCovariances((eye, eye), (eye, eye),
                               (np.eye(1), np.eye(1)))
        b = np.array([1.0, 2.0])
        d = np.array([0.5, 0.5])
        sys, rhs = assemble_state_system(layout, cov, b, d)
        lmat = np.array([[1.0, 0.0], [-2.0, 1.0]])
        assert np.allclose(sys.mat, lmat.T @ lmat + np.eye(2))
        assert np.allclose(rhs, lmat.T @ b + d)

    def test_missing_misfit_rejected(self):
        layout = scalar_layout([2.0])
        eye = SpdMatrix(np.eye(1))
        cov = BlockCovariances((eye, eye), (eye, eye), (np.eye(1), np.eye(1)))
        with pytest.raises(DimensionMismatch):
            assemble_state_system(layout, cov, np.ones(2))


class TestLayoutFiles:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(28)
        for variant in (VARIANT_ZERO, VARIANT_IDENTITY, VARIANT_CUSTOM):
            layout = instances.random_layout(rng, variant=variant)
            path = tmp_path / f"{variant}.txt"
            write_layout(path, layout)
            back = read_layout(path)
            assert back.n == layout.n and back.n_sw == layout.n_sw
            assert back.variant == layout.variant
            for got, exp in zip(back.models, layout.models):
                assert np.array_equal(got, exp)
            if variant == VARIANT_CUSTOM:
                for got, exp in zip(back.approx, layout.approx):
                    assert np.array_equal(got, exp)

    def test_bad_variant(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 1 diagonal\n1 1\n0.5\n")
        with pytest.raises(ValueError):
            read_layout(path)

    def test_missing_blocks(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1 2 zero\n1 1\n0.5\n")
        with pytest.raises(ValueError):
            read_layout(path)

import csv

import mpmath
import numpy as np
import pytest

from oracles import bessel_series, bessel_zero_bisect
from gpmemory.disk import (
    DiskGeometry,
    Mode,
    PolarField,
    bessel_j,
    bessel_zero,
    boundary_normal_derivative,
    coefficient_norm,
    eigenfunction_value,
    field_norm,
    mode_set,
    polar_grid,
    project,
    reconstruct,
    write_mode_table,
)
from gpmemory.errors import DomainError, RangeError, ResolutionError

UNIT = DiskGeometry(1.0)

# frozen from bessel_zero_bisect (40-digit series + bisection)
MU_0_1 = 2.404825557695773
MU_1_1 = 3.831705970207512
MU_0_2 = 5.520078110286311


def test_frozen_zeros_match_oracle():
    for (m, n), frozen in {(0, 1): MU_0_1, (1, 1): MU_1_1, (0, 2): MU_0_2}.items():
        assert float(bessel_zero_bisect(m, n)) == pytest.approx(frozen, rel=1e-15)


@pytest.mark.parametrize("m,n,mu", [(0, 1, MU_0_1), (1, 1, MU_1_1), (0, 2, MU_0_2)])
def test_bessel_zero_examples(m, n, mu):
    assert bessel_zero(m, n) == pytest.approx(mu, rel=1e-12)
    assert abs(bessel_j(m, bessel_zero(m, n))) < 1e-12


def test_bessel_j_examples():
    assert bessel_j(0, 0) == 1.0
    assert bessel_j(1, 0) == 0.0
    assert abs(bessel_j(0, 2.404825557695773)) < 1e-12


@pytest.mark.parametrize("m", [0, 1, 7, 30, 50])
def test_bessel_j_against_series(m):
    for x in [0.1, 1.7, 9.3, 24.0, 41.5]:
        ref = float(bessel_series(m, x, dps=60))
        assert abs(bessel_j(m, x) - ref) <= 1e-12


@pytest.mark.parametrize("m", [0, 3, 50])
def test_bessel_j_large_argument(m):
    for x in [150.0, 1234.5, 9999.0]:
        ref = float(mpmath.besselj(m, x))
        assert abs(bessel_j(m, x) - ref) <= 1e-12


def test_bessel_domain():
    with pytest.raises(DomainError):
        bessel_j(51, 1.0)
    with pytest.raises(DomainError):
        bessel_j(0, -1.0)
    with pytest.raises(DomainError):
        bessel_j(0, 2e4)
    with pytest.raises(RangeError):
        bessel_zero(0, 0)
    with pytest.raises(RangeError):
        bessel_zero(0, 201)
    with pytest.raises(RangeError):
        bessel_zero(51, 1)


def test_zero_ordering_and_interlacing():
    for m in range(11):
        z = [bessel_zero(m, n) for n in range(1, 42)]
        assert all(b > a for a, b in zip(z, z[1:]))
        for n in range(1, 41):
            assert bessel_zero(m, n) < bessel_zero(m + 1, n) < bessel_zero(m, n + 1)


def test_high_index_zero():
    assert bessel_zero(50, 200) == pytest.approx(float(mpmath.besseljzero(50, 200)), rel=1e-12)


def test_mode_scaling():
    a, b = Mode.of(2, 3, DiskGeometry(1.0)), Mode.of(2, 3, DiskGeometry(2.0))
    assert a.mu == b.mu
    assert b.lambda_sq == a.lambda_sq / 4
    assert a.lambda_sq == (a.mu / 1.0) ** 2


def test_eigenfunction_examples():
    assert eigenfunction_value(Mode.of(1, 1, UNIT), UNIT, 0.0, 0.3) == 0
    assert abs(eigenfunction_value(Mode.of(0, 1, UNIT), UNIT, 1.0, 0.3)) < 1e-15
    with pytest.raises(DomainError):
        eigenfunction_value(Mode.of(0, 1, UNIT), UNIT, 1.1, 0.0)


def test_eigenfunction_keeps_derivative_sign():
    # J_0'(mu_1) < 0, so the normalized phi_{1,0} is negative at the center
    assert eigenfunction_value(Mode.of(0, 1, UNIT), UNIT, 0.0, 0.0).real < 0


def test_unit_norm_by_quadrature():
    mode = Mode.of(0, 1, UNIT)
    grid = polar_grid(UNIT)
    f = PolarField.sample(lambda r, a: eigenfunction_value(mode, UNIT, r, a), grid)
    assert field_norm(f) == pytest.approx(1.0, abs=1e-12)


def test_normal_derivative_examples():
    assert boundary_normal_derivative(Mode.of(0, 1, UNIT), UNIT, 0.0) == pytest.approx(MU_0_1 / np.sqrt(np.pi))
    g2 = DiskGeometry(2.0)
    assert boundary_normal_derivative(Mode.of(1, 1, g2), g2, 0.0) == pytest.approx(MU_1_1 / (4 * np.sqrt(np.pi)))
    vals = boundary_normal_derivative(Mode.of(3, 2, UNIT), UNIT, np.linspace(0, 6, 9))
    np.testing.assert_allclose(np.abs(vals), abs(vals[0]))


@pytest.mark.parametrize("m,n,R", [(0, 1, 1.0), (2, 3, 0.7), (5, 1, 2.0)])
def test_normal_derivative_finite_difference(m, n, R):
    geom = DiskGeometry(R)
    mode = Mode.of(m, n, geom)
    h = 1e-5 * R
    a = 0.4
    # second-order one-sided difference at r = R
    f = lambda r: eigenfunction_value(mode, geom, r, a)
    fd = (3 * f(R) - 4 * f(R - h) + f(R - 2 * h)) / (2 * h)
    assert abs(fd - boundary_normal_derivative(mode, geom, a)) <= 1e-6 * abs(fd)


def _sample_mode(mode, geom, grid):
    return PolarField.sample(lambda r, a: eigenfunction_value(mode, geom, r, a), grid)


def test_project_examples():
    modes = mode_set(2, 3, UNIT)
    grid = polar_grid(UNIT, n_alpha=32)
    idx = modes.index(Mode.of(1, 1, UNIT))
    c = project(_sample_mode(modes[idx], UNIT, grid), modes, UNIT)
    expected = np.zeros(len(modes))
    expected[idx] = 1
    np.testing.assert_allclose(c, expected, atol=1e-8)
    np.testing.assert_array_equal(project(grid, modes, UNIT), 0)
    phi10, phi20 = Mode.of(0, 1, UNIT), Mode.of(0, 2, UNIT)
    f = grid.with_values(2 * _sample_mode(phi10, UNIT, grid).values + 3 * _sample_mode(phi20, UNIT, grid).values)
    c = project(f, modes, UNIT)
    np.testing.assert_allclose(c[:3], [2, 3, 0], atol=1e-8)
    np.testing.assert_allclose(c[3:], 0, atol=1e-8)


def test_orthonormality_small():
    geom = DiskGeometry(1.3)
    modes = mode_set(3, 3, geom)
    grid = polar_grid(geom, n_alpha=32, panels=16)
    gram = np.array([project(_sample_mode(md, geom, grid), modes, geom) for md in modes])
    np.testing.assert_allclose(gram, np.eye(len(modes)), atol=1e-8)


def test_project_under_resolved():
    grid = polar_grid(UNIT, n_alpha=8)
    with pytest.raises(ResolutionError) as info:
        project(grid, [Mode.of(0, 1, UNIT), Mode.of(4, 1, UNIT)], UNIT)
    assert info.value.mode.m == 4
    coarse = polar_grid(UNIT, n_alpha=64, panels=1, order=4)
    with pytest.raises(ResolutionError):
        project(coarse, [Mode.of(0, 30, UNIT)], UNIT)


def test_polar_field_invariants():
    with pytest.raises(DomainError):
        PolarField(np.zeros((2, 4)), np.array([0.5, 0.2]), 2 * np.pi * np.arange(4) / 4)
    with pytest.raises(DomainError):
        PolarField(np.zeros((2, 3)), np.array([0.2, 0.5]), np.array([0.0, 1.0, 3.0]))


@pytest.mark.parametrize("m,n", [(0, 1), (1, 2), (3, 1)])
def test_eigen_relation(m, n):
    mode = Mode.of(m, n, UNIT)
    r0, a0 = 0.6, 0.3

    def residual(h):
        f = lambda r: eigenfunction_value(mode, UNIT, r, a0)
        frr = (f(r0 + h) - 2 * f(r0) + f(r0 - h)) / h**2
        fr = (f(r0 + h) - f(r0 - h)) / (2 * h)
        lap = frr + fr / r0 - m**2 * f(r0) / r0**2
        return abs(lap + mode.lambda_sq * f(r0)) / (mode.lambda_sq * abs(f(r0)))

    e1, e2 = residual(1e-2), residual(5e-3)
    assert e1 < 1e-3
    assert 3.0 < e1 / e2 < 5.0  # O(h^2)


def test_reconstruct_parseval():
    modes = mode_set(2, 3, UNIT)
    grid = polar_grid(UNIT, n_alpha=32, panels=16)
    rng = np.random.default_rng(1)
    c = rng.normal(size=len(modes)) + 1j * rng.normal(size=len(modes))
    c[[i for i, md in enumerate(modes) if md.m == 0]] = c[[i for i, md in enumerate(modes) if md.m == 0]].real
    f = reconstruct(c, modes, UNIT, grid)
    assert np.isrealobj(f.values)
    assert field_norm(f) == pytest.approx(coefficient_norm(c, modes), rel=1e-10)
    np.testing.assert_allclose(project(f, modes, UNIT), c, atol=1e-10)


def test_mode_table_csv(tmp_path):
    modes = mode_set(1, 2, UNIT)
    path = tmp_path / "modes.csv"
    write_mode_table(modes, path)
    rows = list(csv.DictReader(open(path)))
    assert list(rows[0]) == ["m", "n", "mu", "lambda_sq"]
    assert float(rows[0]["mu"]) == bessel_zero(0, 1)
    assert len(rows) == 4

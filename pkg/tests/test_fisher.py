import numpy as np
import pytest

from sigeo.errors import UsageError
from sigeo.fisher import (
    degeneracy_rank,
    directional_form,
    fisher_inner,
    fisher_matrix,
    two_integrability_probe,
)
from sigeo.measures import zero_tangent
from sigeo.models import (
    Box,
    CurveInModel,
    bernoulli_family,
    categorical_family,
    gaussian_location_family,
    gaussian_location_scale_family,
    gaussian_mixture,
    normalized_friedrich_model,
    reparameterized_model,
    tangent_at,
)

BERN = bernoulli_family()
CAT3 = categorical_family(3)
MIX = gaussian_mixture()


def test_inner_bernoulli_half():
    v = tangent_at(BERN, [0.5], [1.0])
    assert fisher_inner(v, v) == pytest.approx(4.0, rel=1e-12)


def test_inner_with_zero_tangent():
    v = tangent_at(BERN, [0.3], [1.0])
    assert fisher_inner(v, zero_tangent(v.base)) == 0.0


def test_inner_rejects_mismatched_bases():
    v = tangent_at(BERN, [0.3], [1.0])
    w = tangent_at(BERN, [0.4], [1.0])
    with pytest.raises(UsageError):
        fisher_inner(v, w)


def test_mixture_corner_inner_products_vanish():
    for d in ([1.0, 0.0], [0.0, 1.0], [0.6, -0.8]):
        v = tangent_at(MIX, [0.0, 0.0], d)
        assert fisher_inner(v, v) == 0.0


# -- matrices ------------------------------------------------------------------

def test_bernoulli_matrix_on_grid():
    for p in np.arange(0.1, 0.95, 0.1):
        G = fisher_matrix(BERN, [p]).matrix[0, 0]
        assert G == pytest.approx(1.0 / (p * (1 - p)), rel=1e-8)


def test_gaussian_location_matrix_is_one():
    loc = gaussian_location_family()
    for th in (-1.2, 0.0, 0.8):
        assert fisher_matrix(loc, [th]).matrix[0, 0] == pytest.approx(1.0, abs=1e-8)


def test_location_scale_matrix_closed_form():
    # diag(1/sigma^2, 2/sigma^2) for N(mu, sigma^2)
    ls = gaussian_location_scale_family()
    for mu, sig in ((0.0, 1.0), (0.7, 0.6), (-1.0, 1.7)):
        G = fisher_matrix(ls, [mu, sig]).matrix
        assert G[0, 0] == pytest.approx(1.0 / sig**2, rel=1e-8)
        assert G[1, 1] == pytest.approx(2.0 / sig**2, rel=1e-8)
        assert abs(G[0, 1]) < 1e-8


def test_matrix_matches_inner_products_on_coordinates():
    th = [0.25, 0.4]
    G = fisher_matrix(CAT3, th).matrix
    for i, ei in enumerate(np.eye(2)):
        for j, ej in enumerate(np.eye(2)):
            vi = tangent_at(CAT3, th, ei)
            vj = tangent_at(CAT3, th, ej)
            assert G[i, j] == pytest.approx(fisher_inner(vi, vj), abs=1e-10)


def test_matrix_symmetry_and_psd():
    G = fisher_matrix(MIX, [0.3, 1.7])
    assert np.max(np.abs(G.matrix - G.matrix.T)) < 1e-12
    assert np.min(G.eigenvalues) > -1e-12


def test_matrix_stable_under_grid_refinement():
    coarse = gaussian_location_family(panels=80, npts=8)
    fine = gaussian_location_family(panels=160, npts=8)
    for th in (-0.5, 0.9):
        a = fisher_matrix(coarse, [th]).matrix[0, 0]
        b = fisher_matrix(fine, [th]).matrix[0, 0]
        assert abs(a - b) < 1e-5


def test_pullback_consistency():
    # theta = phi(u); Fisher in u equals J^T G J
    def phi(us):
        return np.column_stack([0.35 + 0.2 * np.tanh(us[:, 0]), 0.2 + 0.1 * us[:, 1] ** 2])

    def dphi(us):
        T = us.shape[0]
        out = np.zeros((T, 2, 2))
        out[:, 0, 0] = 0.2 / np.cosh(us[:, 0]) ** 2
        out[:, 1, 1] = 0.2 * us[:, 1]
        return out

    rep = reparameterized_model(CAT3, phi, dphi, Box([-1.0, 0.1], [1.0, 1.0]))
    u = np.array([0.4, 0.7])
    Gu = fisher_matrix(rep, u).matrix
    theta = phi(u[None, :])[0]
    G = fisher_matrix(CAT3, theta).matrix
    J = dphi(u[None, :])[0]
    assert np.max(np.abs(Gu - J @ G @ J.T)) < 1e-8


def test_cauchy_schwarz_on_random_tangents():
    rng = np.random.default_rng(11)
    for _ in range(100):
        th = [rng.uniform(0.1, 0.4), rng.uniform(0.1, 0.4)]
        v = tangent_at(CAT3, th, rng.normal(size=2))
        w = tangent_at(CAT3, th, rng.normal(size=2))
        lhs = fisher_inner(v, w) ** 2
        rhs = fisher_inner(v, v) * fisher_inner(w, w)
        assert lhs <= rhs + 1e-9


# -- rank detection --------------------------------------------------------------

def test_rank_zero_at_corner():
    assert fisher_matrix(MIX, [0.0, 0.0]).rank == 0


def test_rank_drops_on_degenerate_line():
    assert degeneracy_rank(fisher_matrix(MIX, [0.4, 0.0])) <= 1
    assert degeneracy_rank(fisher_matrix(MIX, [0.0, 2.0])) <= 1


def test_rank_full_generic():
    assert fisher_matrix(MIX, [0.4, 1.5]).rank == 2
    assert fisher_matrix(BERN, [0.3]).rank == 1


# -- directional form -------------------------------------------------------------

def test_directional_form_matches_matrix():
    th = np.array([0.3, 0.25])
    v = np.array([0.7, -0.2])
    G = fisher_matrix(CAT3, th).matrix
    val = directional_form(CAT3, th[None, :], v[None, :])[0]
    assert val == pytest.approx(float(v @ G @ v), rel=1e-12)


# -- speed probe ------------------------------------------------------------------

def test_probe_bernoulli_line_smooth():
    curve = CurveInModel(BERN, [[0.25], [0.75]])
    grid = np.linspace(0.05, 0.95, 31)
    probe = two_integrability_probe(BERN, curve, grid)
    assert not probe.flagged.any()
    # closed-form speed: |dp/ds| / sqrt(p(1-p)) with dp/ds = 0.5
    ps = 0.25 + 0.5 * grid
    expected = 0.5 / np.sqrt(ps * (1 - ps))
    assert np.max(np.abs(probe.speed - expected)) < 1e-6


def test_probe_constant_curve():
    curve = CurveInModel(BERN, [[0.4], [0.4]])
    probe = two_integrability_probe(BERN, curve, np.linspace(0.1, 0.9, 9))
    assert np.max(probe.speed) < 1e-10  # interpolation roundoff only
    assert not probe.flagged.any()


def test_probe_flags_bump_family_jump():
    model = normalized_friedrich_model()
    curve = CurveInModel(model, [[-0.3], [0.3]])
    inner = np.array([0.01, 0.05])
    outer = np.array([0.1, 0.2, 0.3])
    thetas = np.concatenate([-outer[::-1], -inner[::-1], [0.0], inner, outer])
    probe = two_integrability_probe(model, curve, (thetas + 0.3) / 0.6)
    assert probe.flagged.sum() == 1
    assert probe.flagged_t()[0] == pytest.approx(0.5)

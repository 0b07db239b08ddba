"""Estimators on finite-backend models: means, biases, quadratic forms,
inverse Fisher forms, and the variance-vs-inverse-Fisher gap.

Value spaces are finite dimensional (V = R^d with the coordinate dual
basis). Expectations enumerate the outcome space exactly whenever it has
at most 2^20 points and fall back to seeded Monte Carlo with reported
standard errors otherwise. For n-sample experiments the n-fold product
model is used explicitly, so the metric entering the gap is the product
model's own Fisher matrix rather than a hidden factor of n.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import OutsideRangeError, SamplingError, UsageError
from .fisher import EIGEN_TOL, fisher_matrix
from .models import ParamModel

PSD_TOL = 1e-10
CR_TOL = 1e-7
RANGE_TOL = 1e-8
PHI_FD_STEP = 1e-4
ENUM_LIMIT = 2 ** 20
DEFAULT_DRAWS = 100_000


@dataclass(frozen=True)
class PhiMap:
    """A coordinate map on parameter points into R^d."""

    value_dim: int
    fn: object

    def apply(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.asarray(self.fn(points), dtype=float)
        if out.shape != (points.shape[0], self.value_dim):
            raise UsageError("phi map returned the wrong shape")
        return out


def identity_chart(model: ParamModel) -> PhiMap:
    return PhiMap(model.param_dim, lambda pts: pts)


@dataclass(frozen=True)
class Estimator:
    """A raw estimator on a finite model: one parameter estimate per atom.

    Estimates nominally land in the model's parameter domain, though maps
    that strain that contract (inverse-style plug-ins) are representable;
    the regularity probe exists to catch their blow-ups.
    """

    name: str
    values: np.ndarray

    def __post_init__(self):
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def outcome_count(self) -> int:
        return self.values.shape[0]


def _digit_table(m: int, n: int) -> np.ndarray:
    count = m ** n
    if count > ENUM_LIMIT:
        raise UsageError("outcome space too large to enumerate")
    return np.stack(np.unravel_index(np.arange(count), (m,) * n), axis=1)


def mean_estimator(base: ParamModel, n: int) -> Estimator:
    """Empirical frequencies of the first (m-1) atoms over n i.i.d. draws.

    For Bernoulli this is the sample mean; unbiased for the identity chart.
    """
    if base.space.kind != "finite":
        raise UsageError("mean estimator needs a finite base model")
    m = base.space.size
    digits = _digit_table(m, n)
    k = base.param_dim
    # The Bernoulli chart tracks atom 1 (density (1-p, p)); categorical
    # charts track atoms 0..k-1.
    if base.name.startswith("bernoulli"):
        vals = np.mean(digits == 1, axis=1)[:, None]
    else:
        vals = np.stack([np.mean(digits == i, axis=1) for i in range(k)], axis=1)
    return Estimator(f"mean[{n}]", vals)


def shrinkage_estimator(base: ParamModel, n: int, lam=0.9, offset=0.05) -> Estimator:
    inner = mean_estimator(base, n)
    return Estimator(f"shrinkage[{lam},{offset}]", lam * inner.values + offset)


def constant_estimator(base: ParamModel, n: int, theta0) -> Estimator:
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=float))
    count = base.space.size ** n
    return Estimator("constant", np.tile(theta0, (count, 1)))


def plugin_inverse_estimator(base: ParamModel, n: int) -> Estimator:
    """1 over the Laplace-smoothed mean, (k+1)/(n+2); blows up near p -> 0.

    The smoothing keeps every value finite so second moments enumerate,
    while the norm still grows steeply toward the boundary, which is what
    the regularity probe is meant to flag.
    """
    if base.space.size != 2 or base.param_dim != 1:
        raise UsageError("plugin-inverse estimator is defined for Bernoulli bases")
    digits = _digit_table(2, n)
    smoothed = (np.sum(digits, axis=1) + 1.0) / (n + 2.0)
    return Estimator("plugin-inverse", (1.0 / smoothed)[:, None])


def get_estimator(base: ParamModel, n: int, estimator_id: str) -> Estimator:
    """Resolve an estimator id: mean, shrinkage:lam,c, constant:csv, plugin-inverse."""
    key = estimator_id.strip().lower()
    if key == "mean":
        return mean_estimator(base, n)
    if key.startswith("shrinkage:"):
        lam, off = (float(s) for s in key.split(":", 1)[1].split(","))
        return shrinkage_estimator(base, n, lam, off)
    if key.startswith("constant:"):
        theta0 = [float(s) for s in key.split(":", 1)[1].split(",")]
        return constant_estimator(base, n, theta0)
    if key == "plugin-inverse":
        return plugin_inverse_estimator(base, n)
    raise UsageError(f"unknown estimator id {estimator_id!r}")


# ---------------------------------------------------------------------------
# Expectations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Sampling:
    method: str = "exact"  # "exact" | "mc"
    draws: int = DEFAULT_DRAWS
    seed: int = 0


def _outcome_probs(model: ParamModel, theta) -> np.ndarray:
    if model.space.kind != "finite":
        raise UsageError("estimation expectations need a finite model")
    p = model.density(theta) * model.space.weights
    if np.any(p < -1e-12):
        raise SamplingError("negative outcome probability")
    return np.maximum(p, 0.0)


def _phi_values(phi: PhiMap, sigma: Estimator, model: ParamModel) -> np.ndarray:
    if sigma.outcome_count != model.space.size:
        raise UsageError("estimator table does not match the outcome space")
    return phi.apply(sigma.values)


@dataclass(frozen=True)
class MeanResult:
    value: np.ndarray
    stderr: np.ndarray


def phi_mean(
    model: ParamModel, theta, phi: PhiMap, sigma: Estimator, sampling: Sampling | None = None
) -> MeanResult:
    """E_theta[phi(sigma(x))] per dual-basis coordinate."""
    sampling = sampling or Sampling()
    vals = _phi_values(phi, sigma, model)
    if sampling.method == "exact":
        probs = _outcome_probs(model, theta)
        return MeanResult(probs @ vals, np.zeros(phi.value_dim))
    if sampling.method == "mc":
        probs = _outcome_probs(model, theta)
        probs = probs / probs.sum()
        rng = np.random.default_rng(sampling.seed)
        idx = rng.choice(model.space.size, size=sampling.draws, p=probs)
        draws = vals[idx]
        return MeanResult(
            draws.mean(axis=0), draws.std(axis=0, ddof=1) / np.sqrt(sampling.draws)
        )
    raise UsageError(f"unknown sampling method {sampling.method!r}")


def bias(model, theta, phi, sigma, sampling=None) -> np.ndarray:
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    return phi_mean(model, theta, phi, sigma, sampling).value - phi.apply(theta[None, :])[0]


@dataclass(frozen=True)
class QuadraticForm:
    """Symmetric d x d form in the coordinate dual basis."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        m = 0.5 * (m + m.T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def min_eigenvalue(self) -> float:
        return float(np.min(np.linalg.eigvalsh(self.matrix)))

    def is_psd(self, tol=PSD_TOL) -> bool:
        return self.min_eigenvalue() >= -tol


def _second_moment(model, theta, phi, sigma, center, sampling):
    sampling = sampling or Sampling()
    vals = _phi_values(phi, sigma, model)
    centered = vals - center[None, :]
    if sampling.method == "exact":
        probs = _outcome_probs(model, theta)
        return QuadraticForm((centered * probs[:, None]).T @ centered)
    probs = _outcome_probs(model, theta)
    probs = probs / probs.sum()
    rng = np.random.default_rng(sampling.seed)
    idx = rng.choice(model.space.size, size=sampling.draws, p=probs)
    draws = centered[idx]
    return QuadraticForm(draws.T @ draws / sampling.draws)


def mse_form(model, theta, phi, sigma, sampling=None) -> QuadraticForm:
    """E[(phi sigma - phi(theta)) (phi sigma - phi(theta))^T]."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    center = phi.apply(theta[None, :])[0]
    return _second_moment(model, theta, phi, sigma, center, sampling)


def variance_form(model, theta, phi, sigma, sampling=None) -> QuadraticForm:
    """Covariance of phi(sigma) under the model at theta."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    center = phi_mean(model, theta, phi, sigma, sampling).value
    return _second_moment(model, theta, phi, sigma, center, sampling)


def vmse_residual(model, theta, phi, sigma, sampling=None) -> float:
    """Max-norm residual of MSE = variance + bias (x) bias."""
    M = mse_form(model, theta, phi, sigma, sampling).matrix
    V = variance_form(model, theta, phi, sigma, sampling).matrix
    b = bias(model, theta, phi, sigma, sampling)
    return float(np.max(np.abs(M - V - np.outer(b, b))))


# ---------------------------------------------------------------------------
# Inverse Fisher form and the gap
# ---------------------------------------------------------------------------

def _phi_mean_jacobian(model, theta, phi, sigma, sampling, step=PHI_FD_STEP):
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    n = theta.size
    rows = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        up = phi_mean(model, theta + e, phi, sigma, sampling).value
        dn = phi_mean(model, theta - e, phi, sigma, sampling).value
        rows.append((up - dn) / (2 * step))
    return np.stack(rows, axis=1)  # (d, n)


def inverse_fisher_form(
    model, theta, phi, sigma, sampling=None, range_tol=RANGE_TOL
) -> QuadraticForm:
    """dphi_mean G^+ dphi_mean^T on the rank-supported subspace of G.

    The pseudo-inverse realizes the metric inverse on the completion of the
    tangent space; dual gradients with components outside the numerical
    range of G have no finite inverse form, which raises OutsideRangeError.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    dphi = _phi_mean_jacobian(model, theta, phi, sigma, sampling)  # (d, n)
    G = fisher_matrix(model, theta)
    eigs, U = np.linalg.eigh(G.matrix)
    scale = max(float(np.max(eigs, initial=0.0)), 1.0)
    keep = eigs > EIGEN_TOL * scale
    Uk = U[:, keep]
    resid = dphi - (dphi @ Uk) @ Uk.T
    norms = np.linalg.norm(dphi, axis=1)
    bad = np.linalg.norm(resid, axis=1) > range_tol * np.maximum(norms, range_tol)
    if np.any(bad & (norms > range_tol)):
        raise OutsideRangeError(
            "phi-mean gradient leaves the range of the Fisher matrix; "
            "the inverse form is undefined in the degenerate direction"
        )
    if not np.any(keep):
        return QuadraticForm(np.zeros((phi.value_dim, phi.value_dim)))
    proj = dphi @ Uk  # (d, r)
    return QuadraticForm(proj @ np.diag(1.0 / eigs[keep]) @ proj.T)


@dataclass(frozen=True)
class CramerRaoResult:
    gap: QuadraticForm
    min_eigenvalue: float
    holds: bool
    variance: QuadraticForm
    inverse_fisher: QuadraticForm


def cramer_rao_gap(
    model, theta, phi, sigma, sampling=None, tol=CR_TOL
) -> CramerRaoResult:
    """variance_form minus inverse_fisher_form; PSD up to ``tol``."""
    V = variance_form(model, theta, phi, sigma, sampling)
    F = inverse_fisher_form(model, theta, phi, sigma, sampling)
    gap = QuadraticForm(V.matrix - F.matrix)
    mn = gap.min_eigenvalue()
    return CramerRaoResult(gap, mn, mn >= -tol, V, F)


# ---------------------------------------------------------------------------
# Regularity probe
# ---------------------------------------------------------------------------

def regularity_probe(model, thetas, phi, sigma, sampling=None, growth_ratio=2.0):
    """L2 norms of phi(sigma) across a parameter grid, with blow-up flags.

    A grid point is flagged when its squared norm exceeds ``growth_ratio``
    times a neighbor's squared norm while sitting closer to the domain
    boundary than that neighbor: bounded estimators stay unflagged, while
    inverse-style plug-ins light up toward the region they blow up in.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    norms = []
    for th in thetas:
        probs = _outcome_probs(model, th)
        vals = _phi_values(phi, sigma, model)
        norms.append(np.sqrt(np.max((vals * vals * probs[:, None]).sum(axis=0))))
    norms = np.asarray(norms)
    edge = np.minimum(
        np.min(thetas - model.domain.lo[None, :], axis=1),
        np.min(model.domain.hi[None, :] - thetas, axis=1),
    )
    flagged = np.zeros(thetas.shape[0], dtype=bool)
    for i in range(thetas.shape[0]):
        for j in (i - 1, i + 1):
            if 0 <= j < thetas.shape[0] and edge[i] < edge[j]:
                if norms[i] ** 2 > growth_ratio * norms[j] ** 2:
                    flagged[i] = True
    return {"thetas": thetas, "norms": norms, "flagged": flagged}

"""Continuous reaction-diffusion problems, manufactured presets and error norms.

The problem is

    u_t - div(A grad u) + lambda u = f   in Omega x (0, T),
    u = 0 on the Dirichlet faces, (A grad u) . n = g on the Neumann faces,
    u(x, 0) = phi(x),

posed on an axis-aligned box in one or two space dimensions.  Coefficients and
data are plain vectorised callables ``func(x, t)`` where ``x`` has shape
``(..., d)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

DIRICHLET = "dirichlet"
NEUMANN = "neumann"

Evaluator = Callable[[np.ndarray, float], np.ndarray]

__all__ = [
    "DIRICHLET",
    "NEUMANN",
    "ProblemSpec",
    "ExactSolution",
    "NormWeights",
    "EmbeddingConstants",
    "PRESETS",
    "preset_problem",
    "embedding_constants",
    "weighted_error_norm",
    "efficiency_indexes",
    "gaussian_reaction",
]


def _identity_diffusion(dim):
    eye = np.eye(dim)

    def diffusion(x, t):
        x = np.asarray(x)
        return np.broadcast_to(eye, x.shape[:-1] + (dim, dim))

    return diffusion


def _zero(x, t):
    return np.zeros(np.asarray(x).shape[:-1])


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Data of one reaction-diffusion initial boundary value problem.

    ``boundary`` holds one tag per face in the order
    ``(x0-low, x0-high, x1-low, x1-high)``; only homogeneous Dirichlet data is
    supported.
    """

    lower: tuple
    lengths: tuple
    T: float
    source: Evaluator
    initial: Callable[[np.ndarray], np.ndarray]
    boundary: tuple
    diffusion: Optional[Evaluator] = None
    nu1: float = 1.0
    nu2: float = 1.0
    reaction: Evaluator = _zero
    neumann: Evaluator = _zero
    name: str = "custom"
    identity_diffusion: bool = True
    reaction_free: bool = False

    def __post_init__(self):
        lower = tuple(float(a) for a in self.lower)
        lengths = tuple(float(a) for a in self.lengths)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "boundary", tuple(self.boundary))
        if len(lower) != len(lengths) or len(lengths) not in (1, 2):
            raise ValueError("only boxes in 1 or 2 dimensions are supported")
        if any(L <= 0 for L in lengths):
            raise ValueError("box side lengths must be positive")
        if self.T <= 0:
            raise ValueError("final time must be positive")
        if len(self.boundary) != 2 * len(lengths):
            raise ValueError("need one boundary tag per face")
        for tag in self.boundary:
            if tag not in (DIRICHLET, NEUMANN):
                raise ValueError(f"unknown boundary tag {tag!r}")
        if DIRICHLET not in self.boundary:
            raise ValueError("at least one face must be Dirichlet")
        if not 0 < self.nu1 <= self.nu2 < np.inf:
            raise ValueError("need 0 < nu1 <= nu2 < inf")
        if self.diffusion is None:
            object.__setattr__(self, "diffusion", _identity_diffusion(len(lengths)))

    @property
    def dim(self):
        return len(self.lengths)

    @property
    def upper(self):
        return tuple(a + L for a, L in zip(self.lower, self.lengths))

    @property
    def has_neumann(self):
        return NEUMANN in self.boundary

    @property
    def volume(self):
        return float(np.prod(self.lengths))

    def check_coefficients(self, points, times, rtol=1e-10):
        """Verify ellipticity bounds and nonnegative reaction at sample points."""
        points = np.asarray(points, dtype=float)
        for t in np.atleast_1d(times):
            A = np.asarray(self.diffusion(points, float(t)), dtype=float)
            if not np.allclose(A, np.swapaxes(A, -1, -2)):
                raise ValueError(f"diffusion matrix not symmetric at t={t}")
            eig = np.linalg.eigvalsh(A)
            if eig.min() < self.nu1 * (1 - rtol) or eig.max() > self.nu2 * (1 + rtol):
                raise ValueError(
                    f"diffusion spectrum [{eig.min():.3g}, {eig.max():.3g}] outside "
                    f"declared bounds [{self.nu1}, {self.nu2}] at t={t}"
                )
            lam = np.asarray(self.reaction(points, float(t)))
            if np.any(lam < 0):
                raise ValueError(f"negative reaction coefficient at t={t}")


@dataclass(frozen=True, eq=False)
class ExactSolution:
    """Analytic solution with hand-coded derivatives.

    ``div_flux`` is div(A grad u); it lets the flux A grad u be used as an
    admissible field without numerical differentiation.
    """

    u: Evaluator
    grad: Evaluator
    u_t: Evaluator
    div_flux: Evaluator
    description: str = ""

    def residual(self, spec, x, t):
        """Pointwise u_t - div(A grad u) + lambda u - f."""
        return (
            self.u_t(x, t)
            - self.div_flux(x, t)
            + spec.reaction(x, t) * self.u(x, t)
            - spec.source(x, t)
        )


@dataclass(frozen=True)
class NormWeights:
    """Weights of ``[e]^2 = nu^2 G + theta^2 L + rho^2 R + zeta^2 E``.

    ``G`` is the A-weighted squared gradient norm over the space-time cylinder,
    ``L`` the squared L2 norm, ``R`` the reaction-weighted squared L2 norm
    (so the effective L2 weight is ``theta(x)^2 = theta^2 + rho^2 lambda(x)``)
    and ``E`` the squared L2 norm at the final time.
    """

    nu: float = 1.0
    theta: float = 0.0
    zeta: float = 1.0
    rho: float = 0.0

    def __post_init__(self):
        values = (self.nu, self.theta, self.zeta, self.rho)
        if any(w < 0 for w in values):
            raise ValueError("norm weights must be nonnegative")
        if not any(w > 0 for w in values):
            raise ValueError("at least one norm weight must be positive")

    def combine(self, grad_sq, l2_sq, reaction_sq, final_sq):
        weighted_l2 = self.theta ** 2 * l2_sq + self.rho ** 2 * reaction_sq
        return weighted_error_norm(grad_sq, weighted_l2, final_sq, self)


@dataclass(frozen=True)
class EmbeddingConstants:
    c_f: float
    c_tr: Optional[float] = None

    def __post_init__(self):
        if not self.c_f > 0:
            raise ValueError("Friedrichs constant must be positive")
        if self.c_tr is not None and not self.c_tr > 0:
            raise ValueError("trace constant must be positive")


def weighted_error_norm(e_grad_sq, e_l2_weighted_sq, e_final_sq, w):
    """nu^2 |||grad e|||^2 + ||theta e||^2 + zeta^2 ||e(T)||^2.

    The L2 part must already carry its (possibly space dependent) weight.
    """
    values = np.asarray([e_grad_sq, e_l2_weighted_sq, e_final_sq], dtype=float)
    if np.any(values < 0):
        raise ValueError("error components must be nonnegative")
    return w.nu ** 2 * e_grad_sq + e_l2_weighted_sq + w.zeta ** 2 * e_final_sq


def efficiency_indexes(maj_sq, min_sq, err_sq):
    """Return ``(I_maj, I_min, I_eff)`` from squared bounds and squared error."""
    if err_sq < 0 or maj_sq < 0 or min_sq < 0:
        raise ValueError("squared quantities must be nonnegative")
    if err_sq == 0:
        raise ZeroDivisionError("error is zero: the approximation is exact")
    i_maj = np.sqrt(maj_sq / err_sq)
    i_min = np.sqrt(min_sq / err_sq)
    i_eff = np.inf if min_sq == 0 else np.sqrt(maj_sq / min_sq)
    return float(i_maj), float(i_min), float(i_eff)


# ---------------------------------------------------------------------------
# embedding constants


def _axis_eigenvalue(length, low_tag, high_tag):
    n_dirichlet = (low_tag == DIRICHLET) + (high_tag == DIRICHLET)
    if n_dirichlet == 2:
        return (np.pi / length) ** 2
    if n_dirichlet == 1:
        return (np.pi / (2 * length)) ** 2
    return 0.0


def embedding_constants(spec, c_tr=None):
    """Friedrichs and trace constants for the box of ``spec``.

    The Friedrichs constant is 1/sqrt(lambda_min) of the mixed Laplacian,
    which separates over the axes of the box.  The trace constant is a
    certified upper bound: for a Neumann face whose opposite face is Dirichlet
    ``||w||^2_face <= L ||d_n w||^2``; otherwise the one-dimensional estimate
    ``w(L)^2 <= ||w||^2 / L + 2 ||w|| ||w'||`` combined with Friedrichs.  A
    user value in ``c_tr`` overrides the computed one.
    """
    lam_min = 0.0
    for axis, L in enumerate(spec.lengths):
        lam_min += _axis_eigenvalue(L, spec.boundary[2 * axis], spec.boundary[2 * axis + 1])
    if lam_min <= 0:
        raise ValueError("Friedrichs constant undefined without a Dirichlet face")
    c_f = 1.0 / np.sqrt(lam_min)

    if not spec.has_neumann:
        return EmbeddingConstants(c_f, None)
    if c_tr is not None:
        return EmbeddingConstants(c_f, float(c_tr))

    total = 0.0
    for face, tag in enumerate(spec.boundary):
        if tag != NEUMANN:
            continue
        axis = face // 2
        L = spec.lengths[axis]
        opposite = spec.boundary[face ^ 1]
        bound = c_f ** 2 / L + 2 * c_f
        if opposite == DIRICHLET:
            bound = min(bound, L)
        total += bound
    return EmbeddingConstants(c_f, float(np.sqrt(total)))


# ---------------------------------------------------------------------------
# presets


def gaussian_reaction(sigma, center=0.5):
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    scale = 1.0 / (sigma * np.sqrt(2 * np.pi))

    def reaction(x, t):
        return scale * np.exp(-((x[..., 0] - center) ** 2) / (2 * sigma ** 2))

    return reaction


def _ex1_family(reaction=None, name="ex1"):
    def s(t):
        return t ** 2 + t + 1

    def u(x, t):
        x0 = x[..., 0]
        return x0 * (1 - x0) * s(t)

    def grad(x, t):
        return ((1 - 2 * x[..., 0]) * s(t))[..., None]

    def u_t(x, t):
        x0 = x[..., 0]
        return x0 * (1 - x0) * (2 * t + 1)

    def div_flux(x, t):
        return np.full(x.shape[:-1], -2.0 * s(t))

    if reaction is None:
        lam = _zero

        def f(x, t):
            x0 = x[..., 0]
            return 2 * t * (1 + t) - x0 * (2 * t + 1) * (x0 - 1) + 2

    else:
        lam = reaction

        def f(x, t):
            x0 = x[..., 0]
            return x0 * (1 - x0) * (2 * t + 1) + (lam(x, t) * x0 * (1 - x0) + 2) * s(t)

    spec = ProblemSpec(
        lower=(0.0,),
        lengths=(1.0,),
        T=10.0,
        source=f,
        initial=lambda x: u(x, 0.0),
        boundary=(DIRICHLET, DIRICHLET),
        reaction=lam,
        name=name,
        reaction_free=reaction is None,
    )
    return spec, ExactSolution(u, grad, u_t, div_flux, "x(1-x)(t^2+t+1)")


def _ex1():
    return _ex1_family()


def _ex1_gaussian(sigma=0.1):
    return _ex1_family(gaussian_reaction(sigma), name=f"ex1_gaussian(sigma={sigma:g})")


def _ex2(rho=1.0):
    if not rho > 0:
        raise ValueError("rho must be positive")
    k = 3 * np.pi

    def lam(x, t):
        return rho * (t ** 2 + 1) * (x[..., 0] + 1e-3)

    def u(x, t):
        x0 = x[..., 0]
        return x0 * np.sin(k * x0) * np.exp(t)

    def grad(x, t):
        x0 = x[..., 0]
        return ((np.sin(k * x0) + k * x0 * np.cos(k * x0)) * np.exp(t))[..., None]

    def div_flux(x, t):
        x0 = x[..., 0]
        return (2 * k * np.cos(k * x0) - k ** 2 * x0 * np.sin(k * x0)) * np.exp(t)

    def f(x, t):
        x0 = x[..., 0]
        et = np.exp(t)
        return (
            et * (x0 * (1 + k ** 2) * np.sin(k * x0) - 2 * k * np.cos(k * x0))
            + lam(x, t) * x0 * np.sin(k * x0) * et
        )

    spec = ProblemSpec(
        lower=(0.0,),
        lengths=(1.0,),
        T=10.0,
        source=f,
        initial=lambda x: u(x, 0.0),
        boundary=(DIRICHLET, DIRICHLET),
        reaction=lam,
        name=f"ex2(rho={rho:g})",
    )
    return spec, ExactSolution(u, grad, u, div_flux, "x sin(3 pi x) e^t")


def _ex3(sigma=None):
    pi = np.pi
    lam = _zero if sigma is None else gaussian_reaction(sigma)

    def a(x0):
        return np.sin(pi * x0) * (np.cos(pi * x0) + 1)

    def da(x0):
        return pi * np.cos(pi * x0) + pi * np.cos(2 * pi * x0)

    def dda(x0):
        return -(pi ** 2) * np.sin(pi * x0) - 2 * pi ** 2 * np.sin(2 * pi * x0)

    def b(t):
        return t * np.cos(t) + 1

    def db(t):
        return np.cos(t) - t * np.sin(t)

    def u(x, t):
        return a(x[..., 0]) * b(t)

    def grad(x, t):
        return (da(x[..., 0]) * b(t))[..., None]

    def u_t(x, t):
        return a(x[..., 0]) * db(t)

    def div_flux(x, t):
        return dda(x[..., 0]) * b(t)

    def f(x, t):
        x0 = x[..., 0]
        return a(x0) * db(t) - dda(x0) * b(t) + lam(x, t) * a(x0) * b(t)

    name = "ex3" if sigma is None else f"ex3(sigma={sigma:g})"
    spec = ProblemSpec(
        lower=(0.0,),
        lengths=(1.0,),
        T=10.0,
        source=f,
        initial=lambda x: u(x, 0.0),
        boundary=(DIRICHLET, NEUMANN),
        reaction=lam,
        neumann=_zero,
        name=name,
        reaction_free=sigma is None,
    )
    return spec, ExactSolution(u, grad, u_t, div_flux, "sin(pi x)(t cos t + 1)(cos(pi x) + 1)")


def _separable_2d(modes, time_factors, T, name, description):
    """u = sum_i S_i(x, y) b_i(t) with S_i = sin(p pi x) sin(q pi y)."""
    pi = np.pi

    def spatial(x, p, q):
        return np.sin(p * pi * x[..., 0]) * np.sin(q * pi * x[..., 1])

    def spatial_grad(x, p, q):
        gx = p * pi * np.cos(p * pi * x[..., 0]) * np.sin(q * pi * x[..., 1])
        gy = q * pi * np.sin(p * pi * x[..., 0]) * np.cos(q * pi * x[..., 1])
        return np.stack([gx, gy], axis=-1)

    def u(x, t):
        return sum(spatial(x, p, q) * b(t) for (p, q), (b, _) in zip(modes, time_factors))

    def grad(x, t):
        return sum(spatial_grad(x, p, q) * b(t) for (p, q), (b, _) in zip(modes, time_factors))

    def u_t(x, t):
        return sum(spatial(x, p, q) * db(t) for (p, q), (_, db) in zip(modes, time_factors))

    def div_flux(x, t):
        return sum(
            -(p ** 2 + q ** 2) * pi ** 2 * spatial(x, p, q) * b(t)
            for (p, q), (b, _) in zip(modes, time_factors)
        )

    return u, grad, u_t, div_flux


def _ex4():
    pi = np.pi

    def b(t):
        return t ** 3 + np.sin(t) + 1

    def db(t):
        return 3 * t ** 2 + np.cos(t)

    u, grad, u_t, div_flux = _separable_2d(
        [(1, 3), (3, 1)], [(b, db), (b, db)], 1.0, "ex4", ""
    )

    def f(x, t):
        S = np.sin(pi * x[..., 0]) * np.sin(3 * pi * x[..., 1]) + np.sin(
            3 * pi * x[..., 0]
        ) * np.sin(pi * x[..., 1])
        return S * (
            np.cos(t) + 10 * pi ** 2 * np.sin(t) + 10 * pi ** 2 * t ** 3 + 3 * t ** 2 + 10 * pi ** 2
        )

    spec = ProblemSpec(
        lower=(0.0, 0.0),
        lengths=(1.0, 1.0),
        T=1.0,
        source=f,
        initial=lambda x: u(x, 0.0),
        boundary=(DIRICHLET,) * 4,
        name="ex4",
        reaction_free=True,
    )
    return spec, ExactSolution(
        u, grad, u_t, div_flux, "(sin pi x sin 3 pi y + sin 3 pi x sin pi y)(t^3 + sin t + 1)"
    )


def _ex5():
    pi = np.pi

    def b1(t):
        return t * np.sin(t) + 1

    def db1(t):
        return np.sin(t) + t * np.cos(t)

    def b2(t):
        return np.cos(t) + np.sin(t)

    def db2(t):
        return np.cos(t) - np.sin(t)

    u, grad, u_t, div_flux = _separable_2d(
        [(1, 2), (2, 1)], [(b1, db1), (b2, db2)], 10.0, "ex5", ""
    )

    def f(x, t):
        x0, x1 = x[..., 0], x[..., 1]
        return np.sin(2 * pi * x0) * np.sin(pi * x1) * (
            np.cos(t) - np.sin(t) + 5 * pi ** 2 * (np.cos(t) + np.sin(t))
        ) + np.sin(pi * x0) * np.sin(2 * pi * x1) * (
            np.sin(t) + t * np.cos(t) + 5 * pi ** 2 * (t * np.sin(t) + 1)
        )

    spec = ProblemSpec(
        lower=(0.0, 0.0),
        lengths=(1.0, 1.0),
        T=10.0,
        source=f,
        initial=lambda x: u(x, 0.0),
        boundary=(DIRICHLET,) * 4,
        name="ex5",
        reaction_free=True,
    )
    return spec, ExactSolution(
        u,
        grad,
        u_t,
        div_flux,
        "sin pi x sin 2 pi y (t sin t + 1) + sin 2 pi x sin pi y (cos t + sin t)",
    )


def _zero_problem(T=1.0):
    def zero_vec(x, t):
        return np.zeros(x.shape[:-1] + (1,))

    spec = ProblemSpec(
        lower=(0.0,),
        lengths=(1.0,),
        T=T,
        source=_zero,
        initial=lambda x: np.zeros(x.shape[:-1]),
        boundary=(DIRICHLET, DIRICHLET),
        name="zero",
        reaction_free=True,
    )
    return spec, ExactSolution(_zero, zero_vec, _zero, _zero, "0")


PRESETS = {
    "ex1": _ex1,
    "ex1_gaussian": _ex1_gaussian,
    "ex2": _ex2,
    "ex3": _ex3,
    "ex4": _ex4,
    "ex5": _ex5,
    "zero": _zero_problem,
}


def preset_problem(name, **params):
    """Build ``(ProblemSpec, ExactSolution)`` for a named manufactured problem.

    Parameters
    ----------
    name : str
        One of ``ex1``, ``ex1_gaussian`` (``sigma``), ``ex2`` (``rho``),
        ``ex3`` (optional ``sigma``), ``ex4``, ``ex5`` and ``zero``.
    """
    try:
        factory = PRESETS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return factory(**params)

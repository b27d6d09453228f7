"""External potentials Q, their quarter-Laplacians and growth checks.

All potentials act on complex arrays and return float arrays. The Laplacian
convention is ``Delta = d dbar = (Q_xx + Q_yy) / 4`` throughout the package,
and area measure ``dA`` is Lebesgue measure divided by pi.

Built-in potentials and named perturbations also carry a small numeric code
(``jit_code``) so the compiled Metropolis kernel can evaluate them without
calling back into Python.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

# numeric codes understood by coulombgas._kernels.q_eval
KIND_GINIBRE = 0
KIND_POWER = 1
KIND_ELLIPTIC = 2
PERT_NONE = 0
PERT_CONSTANT = 1
PERT_SINUSOIDAL = 2
PERT_BUMP = 3


class PotentialError(ValueError):
    pass


@dataclass(frozen=True)
class Potential:
    """An external field Q with its quarter-Laplacian.

    ``radial_profile`` (when not None) maps r >= 0 to Q(r) and
    ``radial_derivative`` to Q'(r); both are vectorized.
    """

    name: str
    evaluate: Callable[[np.ndarray], np.ndarray]
    laplacian: Callable[[np.ndarray], np.ndarray]
    finite_domain: Callable[[np.ndarray], np.ndarray]
    growth_exponent: float
    radial_profile: Optional[Callable[[np.ndarray], np.ndarray]] = None
    radial_derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    params: dict = field(default_factory=dict)
    jit_code: Optional[np.ndarray] = None

    def __call__(self, z) -> np.ndarray:
        return self.evaluate(np.asarray(z, dtype=complex))

    @property
    def is_radial(self) -> bool:
        return self.radial_profile is not None

    @property
    def perturbation_scale(self) -> float:
        return 0.0


def _always_finite(z):
    return np.ones(np.shape(z), dtype=bool)


def ginibre() -> Potential:
    return power(1.0, name="ginibre")


def power(b: float, name: Optional[str] = None) -> Potential:
    """Q(z) = |z|^(2b)."""
    if not b > 0:
        raise PotentialError(f"power exponent must be positive, got {b}")
    b = float(b)

    def evaluate(z):
        return np.abs(z) ** (2 * b)

    def laplacian(z):
        # (1/4)(Q'' + Q'/r) = b^2 r^(2b-2)
        r = np.abs(z)
        if b == 1.0:
            return np.ones(np.shape(z))
        with np.errstate(divide="ignore"):
            return b * b * r ** (2 * b - 2)

    def profile(r):
        return np.asarray(r, dtype=float) ** (2 * b)

    def derivative(r):
        r = np.asarray(r, dtype=float)
        return 2 * b * r ** (2 * b - 1)

    kind = KIND_GINIBRE if b == 1.0 else KIND_POWER
    return Potential(
        name=name or f"power({b:g})",
        evaluate=evaluate,
        laplacian=laplacian,
        finite_domain=_always_finite,
        growth_exponent=np.inf,
        radial_profile=profile,
        radial_derivative=derivative,
        params={"b": b},
        jit_code=_code(kind, b, 0.0),
    )


def elliptic(tau: float) -> Potential:
    """Q(z) = (|z|^2 - tau Re z^2) / (1 - tau^2), 0 <= tau < 1."""
    if not 0 <= tau < 1:
        raise PotentialError(f"elliptic parameter must lie in [0, 1), got {tau}")
    tau = float(tau)
    scale = 1.0 / (1.0 - tau * tau)

    def evaluate(z):
        return (np.abs(z) ** 2 - tau * np.real(z * z)) * scale

    def laplacian(z):
        return np.full(np.shape(z), scale)

    radial = None
    deriv = None
    if tau == 0.0:
        def radial(r):
            return np.asarray(r, dtype=float) ** 2

        def deriv(r):
            return 2 * np.asarray(r, dtype=float)

    return Potential(
        name=f"elliptic({tau:g})",
        evaluate=evaluate,
        laplacian=laplacian,
        finite_domain=_always_finite,
        growth_exponent=np.inf,
        radial_profile=radial,
        radial_derivative=deriv,
        params={"tau": tau},
        jit_code=_code(KIND_ELLIPTIC, tau, 0.0),
    )


def make_builtin(name: str, **params) -> Potential:
    """Construct a built-in potential by name: ginibre, power(b), elliptic(tau)."""
    if name == "ginibre":
        return ginibre()
    if name == "power":
        return power(params.get("b", 1.0))
    if name == "elliptic":
        return elliptic(params.get("tau", 0.0))
    raise PotentialError(f"unknown potential {name!r}")


def _code(kind, p0, p1, pert=PERT_NONE, a=(0.0, 0.0, 0.0, 0.0), inv_n=0.0):
    return np.array([kind, p0, p1, pert, *a, inv_n], dtype=np.float64)


# ---------------------------------------------------------------- perturbations


@dataclass(frozen=True)
class Perturbation:
    """A bounded function u with declared sup-norm, by name."""

    name: str
    func: Callable[[np.ndarray], np.ndarray]
    sup_norm: float
    code: int = PERT_NONE
    args: tuple = (0.0, 0.0, 0.0, 0.0)


def constant(c: float) -> Perturbation:
    return Perturbation("constant", lambda z: np.full(np.shape(z), float(c)), abs(c),
                        PERT_CONSTANT, (float(c), 0.0, 0.0, 0.0))


def sinusoidal(amplitude: float = 1.0, kx: float = 1.0, ky: float = 0.0) -> Perturbation:
    """u(z) = amplitude * sin(kx Re z + ky Im z)."""
    def u(z):
        return amplitude * np.sin(kx * np.real(z) + ky * np.imag(z))

    return Perturbation("sinusoidal", u, abs(amplitude), PERT_SINUSOIDAL,
                        (float(amplitude), float(kx), float(ky), 0.0))


def gaussian_bump(amplitude: float = 1.0, center: complex = 0j, width: float = 0.25) -> Perturbation:
    """u(z) = amplitude * exp(-|z - center|^2 / (2 width^2))."""
    if width <= 0:
        raise PotentialError("bump width must be positive")
    center = complex(center)

    def u(z):
        return amplitude * np.exp(-np.abs(z - center) ** 2 / (2 * width * width))

    return Perturbation("gaussian_bump", u, abs(amplitude), PERT_BUMP,
                        (float(amplitude), center.real, center.imag, float(width)))


PERTURBATIONS = {"constant": constant, "sinusoidal": sinusoidal, "gaussian_bump": gaussian_bump}


@dataclass(frozen=True)
class PerturbedPotential(Potential):
    """V_n = Q + u/n. Droplet and equilibrium data are those of ``base``."""

    base: Optional[Potential] = None
    u: Optional[Callable] = None
    sup_norm: float = 0.0
    n: int = 1

    @property
    def is_radial(self) -> bool:
        # the field seen by the sampler is not radial in general
        return False

    @property
    def perturbation_scale(self) -> float:
        return self.sup_norm / self.n


def perturb(p: Potential, u, sup_norm: Optional[float] = None, n: int = 1,
            box: tuple = (-3.0, 3.0, -3.0, 3.0), samples: int = 201) -> PerturbedPotential:
    """Attach a bounded perturbation u/n to ``p``.

    ``u`` is either a :class:`Perturbation` or a plain vectorized callable
    (then ``sup_norm`` is required). The declared bound is checked on a
    ``samples x samples`` grid over ``box``.
    """
    if n < 1:
        raise PotentialError("particle count must be >= 1")
    code, args = PERT_NONE, (0.0, 0.0, 0.0, 0.0)
    if isinstance(u, Perturbation):
        func = u.func
        if sup_norm is None:
            sup_norm = u.sup_norm
        code, args = u.code, u.args
    else:
        func = u
        if sup_norm is None:
            raise PotentialError("sup_norm required for a custom perturbation")
    xs = np.linspace(box[0], box[1], samples)
    ys = np.linspace(box[2], box[3], samples)
    zz = xs[:, None] + 1j * ys[None, :]
    observed = float(np.max(np.abs(func(zz))))
    if observed > sup_norm * (1 + 1e-12) + 1e-300:
        raise PotentialError(f"|u| reaches {observed:.6g} > declared sup-norm {sup_norm:.6g}")

    base = p.base if isinstance(p, PerturbedPotential) else p
    inv_n = 1.0 / n

    def evaluate(z):
        z = np.asarray(z, dtype=complex)
        return base.evaluate(z) + func(z) * inv_n

    jit = None
    if base.jit_code is not None and (code != PERT_NONE or func is None):
        jit = base.jit_code.copy()
        jit[3] = code
        jit[4:8] = args
        jit[8] = inv_n
    return PerturbedPotential(
        name=f"{base.name}+u/{n}",
        evaluate=evaluate,
        laplacian=base.laplacian,
        finite_domain=base.finite_domain,
        growth_exponent=base.growth_exponent,
        radial_profile=None,
        radial_derivative=None,
        params=dict(base.params),
        jit_code=jit,
        base=base,
        u=func,
        sup_norm=float(sup_norm),
        n=int(n),
    )


def base_of(p: Potential) -> Potential:
    """The unperturbed potential (itself for ordinary potentials)."""
    return p.base if isinstance(p, PerturbedPotential) else p


# --------------------------------------------------------------------- checks


def growth_margin(p: Potential, radii, n_angles: int = 64) -> float:
    """min of Q(z) / (2 log|z|) over circles of the given radii (all > 1).

    Returns -inf when Q is infinite on every sampled point.
    """
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 1):
        raise PotentialError("growth check radii must exceed 1")
    theta = 2 * np.pi * np.arange(n_angles) / n_angles
    z = radii[:, None] * np.exp(1j * theta)[None, :]
    q = p.evaluate(z)
    finite = np.isfinite(q)
    if not finite.any():
        return -np.inf
    ratio = q[finite] / (2 * np.log(np.abs(z[finite])))
    return float(ratio.min())


def check_growth(p: Potential, droplet_radius: float, override: bool = False,
                 n_radii: int = 64) -> float:
    """Finite-radius proxy for the liminf growth condition.

    Checks margin > 1 on [R, 10 R] with R = max(5 * droplet_radius, 1.5).
    Slowly growing but valid potentials can fail; pass ``override=True``
    to downgrade the failure to a returned value.
    """
    r_check = max(5.0 * droplet_radius, 1.5)
    margin = growth_margin(p, np.geomspace(r_check, 10 * r_check, n_radii))
    if not margin > 1 and not override:
        raise PotentialError(
            f"{p.name}: growth margin {margin:.4g} <= 1 on [{r_check:.3g}, {10 * r_check:.3g}]")
    return margin


def finite_difference_laplacian(p: Potential, z, step: float = 1e-4) -> np.ndarray:
    """Centered five-point quarter-Laplacian of ``p.evaluate``."""
    z = np.asarray(z, dtype=complex)
    q0 = p.evaluate(z)
    s = (p.evaluate(z + step) + p.evaluate(z - step)
         + p.evaluate(z + 1j * step) + p.evaluate(z - 1j * step) - 4 * q0)
    return s / (4 * step * step)

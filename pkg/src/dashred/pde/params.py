"""System registry: names, variants, parameter sets and their defaults.

Only a handful of parameter values are physically pinned (the fourth-order
coefficient nu = 1 for the 2D KS system; nu = 0.01 and linear damping
alpha = 0.12 for the Kolmogorov flow).  Everything else is an engineering
default chosen for well-behaved desk-scale runs, and every value can be
overridden from an experiment config (``param.<field> = value``).

Naming note: the detonation model reuses the letters q and k for its heat
release and reaction-rate prefactor, which collide with the sensor counts
p/q elsewhere; those two fields are called ``rde_q`` and ``rde_k`` here.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

SYSTEMS = ("ks2d", "kolmogorov", "grayscott", "rde1d", "pendulum")
VARIANTS = ("sim", "real_a", "real_b")

# systems for which a second discrepancy scenario is defined
_HAS_REAL_B = ("grayscott", "rde1d")

FIELD_COUNT = {
    "ks2d": 1,
    "kolmogorov": 1,
    "grayscott": 2,
    "rde1d": 2,
    "pendulum": 2,
}


@dataclass(frozen=True)
class SystemId:
    name: str
    variant: str = "sim"

    def __post_init__(self):
        if self.name not in SYSTEMS:
            raise ValueError(f"unknown system {self.name!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "real_b" and self.name not in _HAS_REAL_B:
            raise ValueError(f"variant real_b is not defined for {self.name}")

    @property
    def field_count(self) -> int:
        return FIELD_COUNT[self.name]


@dataclass(frozen=True)
class Ks2dParams:
    nu: float = 1.0        # fourth-order coefficient (pinned)
    gamma: float = 0.1
    vx: float = 0.5
    vy: float = 0.0


@dataclass(frozen=True)
class KolmogorovParams:
    nu: float = 0.01       # viscosity (pinned)
    alpha: float = 0.12    # linear damping of the real variant (pinned)
    mu: float = 0.1        # forcing amplitude of mu*sin(y)


@dataclass(frozen=True)
class GrayScottParams:
    du: float = 0.16
    dv: float = 0.08
    feed: float = 0.035
    kill: float = 0.060
    alpha: float = 0.02    # real_a: -alpha*V^2 in the U equation
    beta: float = 0.05     # real_b: -beta*U^2*V in the U equation


@dataclass(frozen=True)
class RdeParams:
    # defaults chosen so all variants sustain a rotating detonation front
    rde_q: float = 1.0     # heat release
    rde_k: float = 1.0     # reaction-rate prefactor
    u_c: float = 1.1       # activation threshold
    alpha: float = 0.3     # activation width
    eps: float = 0.15      # quadratic energy loss
    eps2: float = 0.02     # discrepancy amplitude (real_a, real_b)
    s: float = 3.5         # injection rate scale
    r: float = 5.0         # injection sigmoid steepness
    u_p: float = 0.55      # injection threshold


@dataclass(frozen=True)
class PendulumParams:
    m: float = 1.0
    l: float = 1.0
    g: float = 9.81
    d: float = 0.3         # damping; the sim variant behaves as d = 0


_PARAM_TYPES = {
    "ks2d": Ks2dParams,
    "kolmogorov": KolmogorovParams,
    "grayscott": GrayScottParams,
    "rde1d": RdeParams,
    "pendulum": PendulumParams,
}


def default_params(system: str):
    try:
        return _PARAM_TYPES[system]()
    except KeyError:
        raise ValueError(f"unknown system {system!r}") from None


def params_with_overrides(system: str, overrides: dict):
    """Default parameters with named-field overrides applied.

    Positivity constraints: diffusion/viscosity strictly positive, damping
    nonnegative.
    """
    p = default_params(system)
    known = {f.name for f in fields(p)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(
            f"unknown parameter(s) for {system}: {', '.join(sorted(unknown))}"
        )
    p = replace(p, **{k: float(v) for k, v in overrides.items()})
    _validate_params(system, p)
    return p


def _validate_params(system, p):
    positive = {
        "ks2d": ("nu",),
        "kolmogorov": ("nu",),
        "grayscott": ("du", "dv"),
        "rde1d": ("alpha",),
        "pendulum": ("m", "l", "g"),
    }[system]
    nonneg = {
        "ks2d": ("gamma",),
        "kolmogorov": ("alpha",),
        "grayscott": ("alpha", "beta"),
        "rde1d": ("eps", "eps2"),
        "pendulum": ("d",),
    }[system]
    for name in positive:
        if getattr(p, name) <= 0:
            raise ValueError(f"{system}.{name} must be > 0")
    for name in nonneg:
        if getattr(p, name) < 0:
            raise ValueError(f"{system}.{name} must be >= 0")


def params_as_dict(p) -> dict:
    return {f.name: getattr(p, f.name) for f in fields(p)}

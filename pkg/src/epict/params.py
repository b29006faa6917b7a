"""Model parameters shared by every other module.

The epidemic runs in a closed population of ``n`` individuals.  Infectious
individuals transmit at overall rate ``beta``, recover naturally at rate
``gamma`` and are diagnosed (tested positive and isolated) at rate ``delta``.
A fraction ``pi`` of the population uses the tracing app; a diagnosed
individual's contact is reached by manual tracing with probability ``p``.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass


class InvalidParams(ValueError):
    """One or more parameter bounds are violated."""


PARAM_KEYS = ("beta", "gamma", "delta", "pi", "p", "n")


@dataclass(frozen=True)
class Params:
    beta: float
    gamma: float
    delta: float
    pi: float
    p: float
    n: int = 1

    def __post_init__(self):
        problems = []
        if self.beta < 0:
            problems.append("beta negative")
        if self.gamma <= 0:
            problems.append("gamma must be positive")
        if self.delta < 0:
            problems.append("delta negative")
        if not 0.0 <= self.pi <= 1.0:
            problems.append("pi out of [0,1]")
        if not 0.0 <= self.p <= 1.0:
            problems.append("p out of [0,1]")
        if int(self.n) != self.n or self.n < 1:
            problems.append("n must be a positive integer")
        if problems:
            raise InvalidParams("; ".join(problems))


def validate(params: Params) -> Params:
    """Return ``params`` unchanged iff every bound holds.

    Construction already validates; this re-checks explicitly so callers can
    guard values coming from untrusted configuration.
    """
    Params(params.beta, params.gamma, params.delta, params.pi, params.p, params.n)
    return params


def r0(params: Params) -> float:
    """Mean secondary infections of one infective before removal: beta/(gamma+delta)."""
    return params.beta / (params.gamma + params.delta)


def testing_fraction(delta: float, gamma: float) -> float:
    """Fraction of infectious periods ending in diagnosis: delta/(delta+gamma)."""
    if gamma <= 0:
        raise InvalidParams("gamma must be positive")
    return delta / (delta + gamma)


def delta_for_testing_fraction(fraction: float, gamma: float) -> float:
    """Diagnosis rate giving the requested testing fraction (inverse map)."""
    if gamma <= 0:
        raise InvalidParams("gamma must be positive")
    if not 0.0 <= fraction < 1.0:
        raise InvalidParams("testing fraction out of [0,1)")
    return gamma * fraction / (1.0 - fraction)


# Axis names accepted by with_param; "testing_fraction" is a pseudo-parameter
# mapped onto delta while keeping gamma fixed.
AXIS_NAMES = PARAM_KEYS + ("testing_fraction",)


def with_param(params: Params, name: str, value) -> Params:
    """Copy of ``params`` with one coordinate replaced."""
    if name == "testing_fraction":
        return dataclasses.replace(params, delta=delta_for_testing_fraction(value, params.gamma))
    if name not in PARAM_KEYS:
        raise InvalidParams(f"unknown parameter name: {name!r}")
    if name == "n":
        value = int(value)
    return dataclasses.replace(params, **{name: value})


def params_from_dict(obj: dict, base: Params | None = None) -> Params:
    """Build Params from a JSON-style mapping.

    Allowed keys are exactly ``beta, gamma, delta, pi, p, n``; anything else
    is rejected so misspelt sweep configs fail loudly.  With ``base`` given,
    missing keys fall back to the base values; otherwise the five rates and
    fractions are required and ``n`` defaults to 1.
    """
    unknown = sorted(set(obj) - set(PARAM_KEYS))
    if unknown:
        raise InvalidParams(f"unknown parameter key(s): {', '.join(unknown)}")
    if base is None:
        missing = [k for k in ("beta", "gamma", "delta", "pi", "p") if k not in obj]
        if missing:
            raise InvalidParams(f"missing parameter key(s): {', '.join(missing)}")
        return Params(
            beta=float(obj["beta"]),
            gamma=float(obj["gamma"]),
            delta=float(obj["delta"]),
            pi=float(obj["pi"]),
            p=float(obj["p"]),
            n=int(obj.get("n", 1)),
        )
    merged = params_to_dict(base)
    merged.update(obj)
    return params_from_dict(merged)


def params_from_json(text: str) -> Params:
    obj = json.loads(text)
    if not isinstance(obj, dict):
        raise InvalidParams("parameter JSON must be an object")
    return params_from_dict(obj)


def params_to_dict(params: Params) -> dict:
    return {
        "beta": params.beta,
        "gamma": params.gamma,
        "delta": params.delta,
        "pi": params.pi,
        "p": params.p,
        "n": params.n,
    }

# FILE: dualsim/params.py
# CONTRACT: one frozen parameter model per case study; construction coerces types,
# validate_params() enforces the domain ranges and names the offending field
import math
from typing import ClassVar

from pydantic import BaseModel, ConfigDict

from .errors import NegativeParameter, UnknownKey, ZeroDenominator
from .utils.text import suggest


class CaseParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    # fields that divide something (half-saturations, carrying capacity, switch point)
    denominators: ClassVar[tuple] = ()
    # fields that must be strictly positive for other reasons
    strictly_positive: ClassVar[tuple] = ()

    def as_env(self):
        return {k: float(v) for k, v in self.model_dump().items()}

    def with_overrides(self, overrides):
        if not overrides:
            return self
        fields = type(self).model_fields
        for k in overrides:
            if k not in fields:
                raise UnknownKey(k, suggest(k, fields))
        return self.model_copy(update={k: float(v) for k, v in overrides.items()})


class Case0Params(CaseParams):
    """Power-law growth: dT/dt = a*T^alpha - b*T^beta."""

    a: float = 1.0
    alpha: float = 0.8
    b: float = 0.5
    beta: float = 1.0

    strictly_positive: ClassVar[tuple] = ("alpha", "beta")


class Case1Params(CaseParams):
    """Tumour/effector model with effector treatment influx s. Defaults: scenario 1."""

    a: float = 1.636
    b: float = 0.002
    n: float = 1.0
    p: float = 1.131
    g: float = 20.19
    m: float = 0.00311
    d: float = 0.1908
    s: float = 0.318

    denominators: ClassVar[tuple] = ("g",)


# scenario-specific rows; the other parameters are shared by all four scenarios
CASE1_SCENARIOS = {
    1: {"b": 0.002, "d": 0.1908, "s": 0.318},
    2: {"b": 0.004, "d": 2.0, "s": 0.318},
    3: {"b": 0.002, "d": 0.3743, "s": 0.1181},
    4: {"b": 0.002, "d": 0.3743, "s": 0.0},
}


class Case2Params(CaseParams):
    """Tumour/effector/IL-2 model."""

    a: float = 0.18
    b: float = 1e-9
    c: float = 0.05
    aa: float = 1.0
    g1: float = 2e7
    g2: float = 1e5
    g3: float = 1000.0
    mu2: float = 0.03
    mu3: float = 10.0
    p1: float = 0.1245
    p2: float = 5.0
    s1: float = 0.0
    s2: float = 0.0

    denominators: ClassVar[tuple] = ("g1", "g2", "g3")


class Case3Params(CaseParams):
    """Tumour/effector/IL-2/TGF-beta model. K is not tabulated; 1e9 matches case 2's b = 1e-9."""

    a: float = 0.18
    K: float = 1e9
    aa: float = 1.0
    c: float = 0.035
    gamma: float = 10.0
    alpha: float = 0.001
    p1: float = 0.1245
    q1: float = 10.0
    q2: float = 0.1121
    g1: float = 2e7
    g2: float = 1e5
    g3: float = 2e7
    g4: float = 1000.0
    p2: float = 0.27
    p3: float = 5.0
    p4: float = 2.84
    theta: float = 1e6
    mu1: float = 0.03
    mu2: float = 10.0
    mu3: float = 10.0

    denominators: ClassVar[tuple] = ("K", "g1", "g2", "g3", "g4", "q2", "theta")


PARAMS_BY_CASE = {0: Case0Params, 1: Case1Params, 2: Case2Params, 3: Case3Params}


def validate_params(params):
    """Return `params` unchanged if every range invariant holds."""
    cls = type(params)
    for name in cls.model_fields:
        v = getattr(params, name)
        if not math.isfinite(v):
            raise NegativeParameter(name, v, "must be finite")
        if v < 0:
            raise NegativeParameter(name, v)
        if v == 0 and name in cls.denominators:
            raise ZeroDenominator(name)
        if v <= 0 and name in cls.strictly_positive:
            raise NegativeParameter(name, v, "must be > 0")
    return params

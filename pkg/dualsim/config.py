# FILE: dualsim/config.py
# CONTRACT: JSON run configuration -> validated ConfigDocument -> ScenarioConfig.
# Unknown keys are rejected with a suggestion; unset values fall back to settings, then built-ins.
import json
import typing
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .abm.transitions import EngineConfig
from .errors import ConfigSyntaxError, MissingRequired, UnknownKey, UsageError
from .models import CustomModel, ScenarioConfig, get_scenario
from .stats import PAIRINGS
from .utils.text import suggest

SERIES = ("ode", "abm-mean", "report", "census")


class OutputSection(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    dir: Optional[str] = None
    series: List[str] = Field(default_factory=lambda: list(SERIES))
    plot: bool = False
    reps_plot: int = 10


class ConfigDocument(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    scenario: Optional[str] = None
    model: Optional[CustomModel] = None
    params: Dict[str, float] = Field(default_factory=dict)
    init: Optional[Dict[str, float]] = None
    engine: EngineConfig = Field(default_factory=EngineConfig)
    n_reps: int = 50
    horizon: Optional[float] = None
    seed: Optional[int] = None
    alpha: float = 0.05
    pairing: str = "daily-mean"
    census: Optional[List[str]] = None
    outputs: OutputSection = Field(default_factory=OutputSection)

    @field_validator("pairing")
    @classmethod
    def _pairing(cls, v):
        if v not in PAIRINGS:
            hint = suggest(v, PAIRINGS)
            raise UsageError(f"pairing must be one of {PAIRINGS}, got {v!r}" + (f" (did you mean {hint!r}?)" if hint else ""))
        return v

    @property
    def name(self):
        return self.scenario or (self.model.name if self.model else "custom")

    def to_scenario(self, engine_defaults=None):
        """Merge: explicit config values > settings engine defaults > the scenario's own values."""
        engine = dict(engine_defaults or {})
        engine.update(self.engine.model_dump(include=self.engine.model_fields_set))
        if self.scenario:
            base = get_scenario(self.scenario)
            engine = {**base.engine.model_dump(), **engine}
            update = {"engine": EngineConfig(**engine), "n_reps": self.n_reps}
            if self.params:
                update["overrides"] = {**base.overrides, **self.params}
            if self.init is not None:
                update["init"] = dict(self.init)
            if self.horizon is not None:
                update["horizon"] = self.horizon
            return ScenarioConfig(**{**base.model_dump(exclude={"engine", "custom_model"}), **update})
        return ScenarioConfig(
            name=self.model.name,
            overrides=dict(self.params),
            init=dict(self.init),
            horizon=self.horizon if self.horizon is not None else 100.0,
            engine=EngineConfig(**engine),
            n_reps=self.n_reps,
            custom_model=self.model,
        )


def _model_type(annotation):
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        return annotation
    for arg in typing.get_args(annotation):
        found = _model_type(arg)
        if found is not None:
            return found
    return None


def _check_keys(data, cls, where=""):
    fields = cls.model_fields
    for k, v in data.items():
        if k not in fields:
            hint = suggest(k, fields)
            raise UnknownKey(f"{where}{k}", f"{where}{hint}" if hint else None)
        sub = _model_type(fields[k].annotation)
        if sub is None:
            continue
        if isinstance(v, dict):
            _check_keys(v, sub, f"{where}{k}.")
        elif isinstance(v, list):
            for i, item in enumerate(v):
                if isinstance(item, dict):
                    _check_keys(item, sub, f"{where}{k}[{i}].")


def _validation_message(e):
    first = e.errors()[0]
    loc = ".".join(str(p) for p in first.get("loc", ())) or "config"
    return f"{loc}: {first.get('msg', 'invalid value')}"


def parse_config(text):
    """Parse and validate a JSON run configuration."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigSyntaxError(e.msg, e.lineno, e.colno) from None
    if not isinstance(data, dict):
        raise ConfigSyntaxError("top level must be a JSON object", 1, 1)
    _check_keys(data, ConfigDocument)
    if not data.get("scenario") and not data.get("model"):
        raise MissingRequired("'scenario' or 'model'")
    if data.get("scenario") and data.get("model"):
        raise UsageError("give either 'scenario' or 'model', not both")
    if data.get("model") and data.get("init") is None:
        raise MissingRequired("'init' (initial populations) for an inline model")
    try:
        doc = ConfigDocument(**data)
    except ValidationError as e:
        raise UsageError(_validation_message(e)) from None
    if doc.scenario:
        get_scenario(doc.scenario)
    return doc


def load_config_file(path):
    try:
        with open(path, encoding="utf-8") as f:
            return parse_config(f.read())
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e.strerror}") from None

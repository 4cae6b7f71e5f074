# FILE: dualsim/settings.py
# CONTRACT: load human-friendly TOML settings from a persistent path; create the default if missing
import os
import pathlib

try:
    import tomllib  # Py 3.11+
except ModuleNotFoundError:
    import tomli as tomllib

from .errors import ConfigSyntaxError
from .utils import log

APP = "dualsim"

# Written to $DUALSIM_HOME/config.toml (default ~/.dualsim) on first run
DEFAULT_CFG = r"""# Settings live in $DUALSIM_HOME/config.toml (auto-created on first run)
debug = false
concurrency = 1        # worker processes per ensemble
output_dir = ""        # empty: <DUALSIM_HOME>/runs
seed = 0               # used when neither --seed, the config file nor DUALSIM_SEED sets one
[engine]
dt = 0.01
backend = "tau-leap"   # or "per-agent"
rate_policy = "live"   # "frozen-at-birth" needs the per-agent backend
# max_rate_dt = 0.1   # set to override every scenario's accuracy guard (built-ins use 0.1 or 0.01)
sample_every = 1.0
[stats]
alpha = 0.05
pairing = "daily-mean" # or "endpoint"
[census]
tumour_extinct_by = 200.0
tgf_max_below = 3.0
[plot]
reps = 10
"""

DEFAULTS = {
    "debug": False,
    "concurrency": 1,
    "output_dir": "",
    "seed": 0,
    "engine": {"dt": 0.01, "backend": "tau-leap", "rate_policy": "live", "sample_every": 1.0},
    "stats": {"alpha": 0.05, "pairing": "daily-mean"},
    "census": {"tumour_extinct_by": 200.0, "tgf_max_below": 3.0},
    "plot": {"reps": 10},
}


def user_dir() -> pathlib.Path:
    home = os.getenv("DUALSIM_HOME")
    base = pathlib.Path(home) if home else pathlib.Path.home() / ("." + APP)
    base.mkdir(parents=True, exist_ok=True)
    return base


def get_paths(cfg=None):
    usr = user_dir()
    out = (cfg or {}).get("output_dir") or ""
    return {
        "USER_ROOT": usr,
        "USER_CONFIG": usr / "config.toml",
        "OUTPUT_DIR": pathlib.Path(out).expanduser() if out else usr / "runs",
    }


def _read_toml(fp: pathlib.Path):
    with open(fp, "rb") as f:
        try:
            return tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigSyntaxError(f"{fp}: {e}", getattr(e, "lineno", 0) or 0, getattr(e, "colno", 0) or 0) from None


def _merge(base, over):
    out = dict(base)
    for k, v in over.items():
        out[k] = _merge(out[k], v) if isinstance(v, dict) and isinstance(out.get(k), dict) else v
    return out


def load_config():
    p = get_paths()
    cfgp = p["USER_CONFIG"]
    if not cfgp.exists():
        cfgp.write_text(DEFAULT_CFG, encoding="utf-8")
        log.info(f"[dualsim] Created default settings at {cfgp}")
    cfg = _merge(DEFAULTS, _read_toml(cfgp))
    cfg["_paths"] = {k: str(v) for k, v in get_paths(cfg).items()}
    return cfg

import importlib.util
import os
import pathlib

from .settings import get_paths
from .utils import log

PACKAGES = ["numpy", "scipy", "pydantic", "rapidfuzz", "rich"]


def run_doctor(cfg, need_plot=False):
    problems = []
    pkgs = PACKAGES + (["matplotlib"] if need_plot else [])
    for pkg in pkgs:
        if importlib.util.find_spec(pkg) is None:
            problems.append(f"Missing package: {pkg}")
    out = pathlib.Path(get_paths(cfg)["OUTPUT_DIR"])
    try:
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            problems.append(f"Output directory is not writable: {out}")
    except OSError as e:
        problems.append(f"Cannot create output directory {out}: {e}")
    if int(cfg.get("concurrency", 1)) < 1:
        problems.append("settings.concurrency must be >= 1")
    if problems:
        log.error("doctor failed:")
        for p in problems:
            log.info(f" - {p}")
        raise SystemExit(1)
    log.debug("doctor ok", output_dir=out)

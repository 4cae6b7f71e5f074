import datetime
import os
import pathlib
import shutil


def safe_write_text(text, out_path):
    """Write via a temp file and rename, so readers never see half a file."""
    p = pathlib.Path(out_path)
    p.parent.mkdir(parents=True, exist_ok=True)
    tmp = p.with_suffix(p.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8", newline="") as f:
        f.write(text)
        if text and not text.endswith("\n"):
            f.write("\n")
    os.replace(tmp, p)
    return p


def write_latest_alias(actual_path, latest_path):
    actual, latest = pathlib.Path(actual_path), pathlib.Path(latest_path)
    if actual.is_dir():
        if latest.exists():
            shutil.rmtree(latest)
        shutil.copytree(actual, latest)
    else:
        shutil.copyfile(actual, latest)


def timestamp_run_id():
    return datetime.datetime.now(datetime.timezone.utc).strftime("%Y%m%d_%H%M%S")

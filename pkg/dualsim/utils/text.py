import math

from rapidfuzz import process


def suggest(name, choices, cutoff=60):
    """Closest known spelling of `name`, or None."""
    choices = list(choices)
    if not choices or not name:
        return None
    hit = process.extractOne(str(name), choices, score_cutoff=cutoff)
    return hit[0] if hit else None


def fmt_number(v):
    # integral values print without ".0"; everything else keeps full round-trip precision
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    f = float(v)
    if math.isfinite(f) and f.is_integer() and abs(f) < 2**53:
        return str(int(f))
    return repr(f)


def fmt_p(p):
    if p < 1e-4:
        return f"{p:.2e}"
    return f"{p:.4f}"

import math


def parse_float_or_none(value):
    """Convert a string to float or return None if empty or invalid."""
    try:
        if value is None or value.strip() == "":
            return None
        return float(value)
    except ValueError:
        return None


def parse_float_list(value):
    """
    Parse "0, 0.1,0.25" into [0.0, 0.1, 0.25].
    Raises ValueError on an empty list or a non-numeric entry.
    """
    parts = [p.strip() for p in (value or "").split(",") if p.strip()]
    if not parts:
        raise ValueError("expected a comma separated list of numbers")
    out = []
    for p in parts:
        v = parse_float_or_none(p)
        if v is None:
            raise ValueError(f"not a number: {p!r}")
        out.append(v)
    return out


def round_sig(value, digits):
    """Round a finite float to `digits` significant digits; other values pass through."""
    if not isinstance(value, float) or not math.isfinite(value) or value == 0.0:
        return value
    return float(f"{value:.{digits}g}")


def format_sig(value, digits):
    # Empty cell for missing values (curves outside their domain).
    if value is None:
        return ""
    return f"{value:.{digits}g}"

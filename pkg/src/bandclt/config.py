"""Model files: a line-oriented ``key = value`` format.

Example::

    # two colors, Gaussian-consistent fourth moments
    mode = exact
    colors.m = 2
    colors.theta = 1/2, 1/2
    kernel.D = 0, 0
    kernel.d2 = 1, 1
    kernel.s2 = 1/2, 3/2; 3/2, 1/2
    kernel.s4 = 3/4, 27/4; 27/4, 3/4
    coloring.scheme = blocks
    coloring.blocks = 0:150, 1:150

Vectors are comma separated, matrix rows are separated by ``;``.  Numbers
are integers, decimals or ``p/q`` rationals; decimals are read exactly.
``mode`` is ``auto`` (default), ``exact`` or ``float``.  A bipartite Wishart
model can be given by ``wishart.thetaA`` (and optionally ``wishart.s2AB``)
instead of the ``colors``/``kernel`` keys.  Unknown keys are errors.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from ._numeric import ExactModeError, format_number
from .model import ColorModel, LetterColoring, ModelError, WishartParams, wishart_model

KNOWN_KEYS = (
    "mode",
    "colors.m",
    "colors.theta",
    "kernel.D",
    "kernel.d2",
    "kernel.s2",
    "kernel.s4",
    "kernel.tail_bound",
    "coloring.scheme",
    "coloring.blocks",
    "coloring.N",
    "coloring.profile",
    "wishart.thetaA",
    "wishart.s2AB",
)


class ConfigError(ValueError):
    """Malformed model file; carries the offending line number and key."""

    def __init__(self, message: str, line: Optional[int] = None, key: Optional[str] = None,
                 path: Optional[str] = None):
        self.message, self.line, self.key, self.path = message, line, key, path
        where = []
        if path:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if key:
            where.append(f"key {key!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class ModelConfig:
    model: ColorModel
    coloring: Optional[LetterColoring]
    mode: str
    wishart: Optional[WishartParams] = None
    path: Optional[str] = None


def _number(text: str, line: int, key: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a number: {text.strip()!r}", line, key) from None


def _vector(text: str, line: int, key: str) -> list:
    items = [t for t in text.split(",")]
    if any(not t.strip() for t in items):
        raise ConfigError("empty vector entry", line, key)
    return [_number(t, line, key) for t in items]


def _matrix(text: str, line: int, key: str) -> list:
    return [_vector(row, line, key) for row in text.split(";")]


def _pairs(text: str, line: int, key: str) -> list:
    out = []
    for item in text.split(","):
        if ":" not in item:
            raise ConfigError(f"expected 'a:b', got {item.strip()!r}", line, key)
        a, b = item.split(":", 1)
        out.append((_number(a, line, key), _number(b, line, key)))
    return out


def parse_config(text: str, path: Optional[str] = None) -> ModelConfig:
    raw: dict = {}
    for lineno, full in enumerate(text.splitlines(), start=1):
        body = full.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", lineno, None, path)
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError("unknown key", lineno, key, path)
        if key in raw:
            raise ConfigError("duplicate key", lineno, key, path)
        if not value:
            raise ConfigError("empty value", lineno, key, path)
        raw[key] = (value, lineno)
    try:
        return _assemble(raw, path)
    except ConfigError as e:
        if e.path is None and path is not None:
            raise ConfigError(e.message, e.line, e.key, path) from None
        raise


def _get(raw, key, conv):
    value, line = raw[key]
    return conv(value, line, key)


def _assemble(raw: dict, path: Optional[str]) -> ModelConfig:
    mode, mode_line = raw.get("mode", ("auto", None))
    if mode not in ("auto", "exact", "float"):
        raise ConfigError("mode must be auto, exact or float", mode_line, "mode")
    exact = None if mode == "auto" else mode == "exact"
    wishart = None
    if "wishart.thetaA" in raw:
        clash = [k for k in raw if k.startswith(("colors.", "kernel."))]
        if clash:
            raise ConfigError("wishart.* cannot be combined with colors/kernel keys",
                              raw[clash[0]][1], clash[0])
        tA = _get(raw, "wishart.thetaA", _number)
        s2AB = _get(raw, "wishart.s2AB", _matrix) if "wishart.s2AB" in raw else None
        line = raw["wishart.thetaA"][1]
        if s2AB is not None and len(s2AB) == 1 and len(s2AB[0]) == 1:
            s2AB = s2AB[0][0]
        try:
            model, wishart = wishart_model(tA, s2AB, exact=exact)
        except ExactModeError as e:
            raise ConfigError(f"exact mode impossible: {e}", line, "wishart.thetaA") from None
        except ModelError as e:
            raise ConfigError(str(e), line, "wishart.thetaA") from None
        if exact is None and not model.exact:
            mode = "float"
    else:
        for k in ("colors.theta", "kernel.s2"):
            if k not in raw:
                raise ConfigError("missing required key", None, k)
        theta = _get(raw, "colors.theta", _vector)
        if "colors.m" in raw:
            m = _get(raw, "colors.m", _number)
            if m != len(theta):
                raise ConfigError(f"colors.m = {m} but theta has {len(theta)} entries",
                                  raw["colors.m"][1], "colors.m")
        opt = {}
        for key, conv in (("kernel.D", _vector), ("kernel.d2", _vector), ("kernel.s4", _matrix)):
            if key in raw:
                opt[key.split(".")[1]] = _get(raw, key, conv)
        tail = _get(raw, "kernel.tail_bound", _number) if "kernel.tail_bound" in raw else 0
        s2 = _get(raw, "kernel.s2", _matrix)
        try:
            model = ColorModel.build(theta, s2, tail_bound=tail, exact=exact is not False, **opt)
        except ModelError as e:
            key = next((k for k in ("kernel.s2", "kernel.s4", "kernel.D", "kernel.d2") if k in raw
                        and k.split(".")[1] in str(e)), "kernel.s2")
            raise ConfigError(str(e), raw[key][1], key) from None
    coloring = _coloring(raw, model.m)
    return ModelConfig(model, coloring, "exact" if model.exact else "float", wishart, path)


def _coloring(raw: dict, m: int) -> Optional[LetterColoring]:
    scheme, line = raw.get("coloring.scheme", (None, None))
    if scheme is None:
        stray = [k for k in raw if k.startswith("coloring.")]
        if stray:
            raise ConfigError("coloring.scheme is required", raw[stray[0]][1], stray[0])
        return None
    try:
        if scheme == "blocks":
            if "coloring.blocks" not in raw:
                raise ConfigError("missing required key", line, "coloring.blocks")
            pairs = _get(raw, "coloring.blocks", _pairs)
            for c, n in pairs:
                if c.denominator != 1 or n.denominator != 1:
                    raise ConfigError("block entries must be integers", raw["coloring.blocks"][1],
                                      "coloring.blocks")
            col = LetterColoring.from_blocks([(int(c), int(n)) for c, n in pairs])
            if "coloring.N" in raw and _get(raw, "coloring.N", _number) != col.N:
                raise ConfigError("block counts do not sum to coloring.N", raw["coloring.N"][1],
                                  "coloring.N")
        elif scheme == "profile":
            for k in ("coloring.N", "coloring.profile"):
                if k not in raw:
                    raise ConfigError("missing required key", line, k)
            N = int(_get(raw, "coloring.N", _number))
            prof = _get(raw, "coloring.profile", _pairs)
            col = LetterColoring.from_profile(N, [(u, int(c)) for u, c in prof])
        else:
            raise ConfigError("scheme must be blocks or profile", line, "coloring.scheme")
        col.check(m)
    except ModelError as e:
        raise ConfigError(str(e), line, "coloring.scheme") from None
    return col


def load_config(path) -> ModelConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read model file {str(p)!r}: {e.strerror}", path=str(p)) from None
    return parse_config(text, str(p))


def _fmt(v) -> str:
    return str(format_number(v))


def dump_config(model: ColorModel, coloring: Optional[LetterColoring] = None) -> str:
    """Serialize a model (and coloring, as blocks) so that :func:`parse_config` round-trips it.

    Float entries are written with ``repr`` and reparsed in float mode.
    """
    vec = lambda v: ", ".join(_fmt(x) for x in v)  # noqa: E731
    mat = lambda M: "; ".join(vec(r) for r in M)  # noqa: E731
    lines = [
        f"mode = {'exact' if model.exact else 'float'}",
        f"colors.m = {model.m}",
        f"colors.theta = {vec(model.theta)}",
        f"kernel.D = {vec(model.D)}",
        f"kernel.d2 = {vec(model.d2)}",
        f"kernel.s2 = {mat(model.s2)}",
        f"kernel.s4 = {mat(model.s4)}",
        f"kernel.tail_bound = {_fmt(model.tail_bound)}",
    ]
    if coloring is not None:
        runs = []
        for c in coloring.colors:
            if runs and runs[-1][0] == c:
                runs[-1][1] += 1
            else:
                runs.append([c, 1])
        lines.append("coloring.scheme = blocks")
        lines.append("coloring.blocks = " + ", ".join(f"{c}:{n}" for c, n in runs))
    return "\n".join(lines) + "\n"

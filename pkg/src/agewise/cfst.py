"""Clock-frequency sweeping test: quantised start-to-fail delay per path."""

import math
from dataclasses import dataclass

from .errors import FormatError


@dataclass(frozen=True)
class CfstConfig:
    f_max_ghz: float = 4.0
    step: float = 10.0
    start: float | None = None  # sweep start period; None means the design period

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("tester step must be positive")
        if self.f_max_ghz <= 0:
            raise ValueError("f_max must be positive")
        if self.start is not None and self.start < self.min_period:
            raise ValueError("sweep start is shorter than the minimum period")

    @property
    def min_period(self):
        """Shortest testable period in ps."""
        return 1000.0 / self.f_max_ghz


def quantize(d_true, step):
    """Smallest multiple of ``step`` that is >= ``d_true``."""
    q = step * math.ceil(d_true / step)
    # float rounding in the division can put the ceiling one step off
    if q - step >= d_true:
        q -= step
    elif q < d_true:
        q += step
    return q


@dataclass(frozen=True)
class CfstResult:
    chip_id: str
    step: float
    delays: dict  # path id -> ps
    unmeasurable: tuple = ()


def cfst_measure(chip, paths, cfg: CfstConfig = CfstConfig()):
    """Measure every path of ``chip``; paths faster than ``1/f_max`` are reported, not measured."""
    out, bad = {}, []
    for p in paths:
        d = chip.path_delay(p)
        if d < cfg.min_period:
            bad.append(p.id)
        else:
            out[p.id] = quantize(d, cfg.step)
    return CfstResult(chip.chip_id, cfg.step, out, tuple(bad))


def emit_cfst(res: CfstResult):
    lines = [f"# chip {res.chip_id} step={res.step!r}"]
    lines += [f"path {pid} cfst={v!r}" for pid, v in res.delays.items()]
    lines.append("# unmeasurable")
    lines += [f"# {pid}" for pid in res.unmeasurable]
    return "\n".join(lines) + "\n"


def parse_cfst(text):
    chip, step, delays, bad = "", 0.0, {}, []
    in_bad = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].split()
            if body[:1] == ["chip"] and len(body) == 3 and body[2].startswith("step="):
                chip = body[1]
                step = float(body[2][5:])
            elif body == ["unmeasurable"]:
                in_bad = True
            elif in_bad and len(body) == 1:
                bad.append(body[0])
            continue
        toks = line.split()
        if len(toks) != 3 or toks[0] != "path" or not toks[2].startswith("cfst="):
            raise FormatError(f"cfst line {lineno}: malformed")
        try:
            delays[toks[1]] = float(toks[2][5:])
        except ValueError:
            raise FormatError(f"cfst line {lineno}: bad number") from None
    return CfstResult(chip, step, delays, tuple(bad))


def read_cfst(path):
    with open(path, encoding="utf-8") as fh:
        return parse_cfst(fh.read())


def write_cfst(res, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(emit_cfst(res))

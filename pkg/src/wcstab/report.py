"""Analysis reports: structured record, text rendering, JSON and CSV output."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from .evidence import INCONCLUSIVE, STABLE, UNSTABLE, Verdict, _jsonable

__all__ = ["Report", "EXIT_CODES", "exit_code", "write_csv", "format_table", "fmt_number"]

EXIT_CODES = {STABLE: 0, UNSTABLE: 1, INCONCLUSIVE: 2}


def exit_code(status: str) -> int:
    return EXIT_CODES.get(status, 3)


def fmt_number(v) -> str:
    """Locale-free, round-trippable rendering (``repr`` of floats, ``inf``/``nan`` spelled out)."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if v is None:
        return ""
    return str(v)


def write_csv(header: Sequence[str], rows: Sequence[Sequence[Any]], stream=None) -> str:
    """Header row plus comma-separated rows; returns the text and writes it to ``stream`` if given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for r in rows:
        w.writerow([fmt_number(v) for v in r])
    text = buf.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def format_table(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    cells = [list(map(str, header))] + [[fmt_number(v) for v in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


@dataclass
class Report:
    """Everything an analysis produced; ``status`` is the verdict in the problem's own space."""

    problem: str
    space: str
    verdicts: dict
    admissibility: Optional[dict] = None
    validation: Optional[dict] = None
    metadata: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def status(self) -> str:
        v = self.verdicts.get(self.space)
        return v.status if isinstance(v, Verdict) else INCONCLUSIVE

    @property
    def exit_code(self) -> int:
        return exit_code(self.status)

    def to_dict(self) -> dict:
        return _jsonable({"status": self.status, "space": self.space, "problem": self.problem,
                          "verdicts": {k: v.to_dict() for k, v in self.verdicts.items()},
                          "admissibility": self.admissibility, "validation": self.validation,
                          "metadata": self.metadata, "notes": self.notes})

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)

    def render_text(self) -> str:
        out = [f"status: {self.status} ({self.space})", "", "problem:"]
        out += ["  " + ln for ln in self.problem.strip().splitlines()]
        if self.validation is not None:
            out += ["", "hypotheses:"]
            for f in self.validation["findings"]:
                out.append(f"  [{'ok' if f['passed'] else 'FAIL'}] {f['check']}: {f['detail']}")
        if self.admissibility is not None:
            a = self.admissibility
            out += ["", f"admissibility: M = {fmt_number(a['M'])}, omega = {fmt_number(a['omega'])}"
                        f"{' (refuted)' if a['refuted'] else ''}"]
        for space, v in self.verdicts.items():
            out += ["", f"verdict [{space}]: {v.status}"]
            for c in v.criteria:
                line = f"  {c.id}: {c.status}"
                if c.note:
                    line += f" ({c.note})"
                out.append(line)
            if v.witness:
                out.append(f"  witness: {json.dumps(_jsonable(v.witness), sort_keys=True)}")
        for n in self.notes:
            out.append(f"note: {n}")
        return "\n".join(out) + "\n"

"""Result rows and their CSV form."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

COLUMNS = ("policy", "abscissa", "analytic", "simulated", "ci_half", "realizations")


@dataclass(frozen=True)
class Row:
    policy: str
    abscissa: float
    analytic: float = math.nan
    simulated: float = math.nan
    ci_half: float = math.nan
    realizations: int | None = None


@dataclass
class ResultTable:
    """Records keyed by ``(policy, abscissa)``; NaN means "no value"."""

    rows: list = field(default_factory=list)

    def add(self, **kw) -> None:
        self.rows.append(Row(**kw))

    def sorted(self) -> "ResultTable":
        return ResultTable(sorted(self.rows, key=lambda r: (r.policy, r.abscissa)))

    def column(self, name: str, policy: str | None = None):
        return [getattr(r, name) for r in self.rows if policy is None or r.policy == policy]

    def merge(self, other: "ResultTable") -> "ResultTable":
        """Combine an analytic and a simulated table row by row."""
        index = {(r.policy, r.abscissa): r for r in self.rows}
        for r in other.rows:
            key = (r.policy, r.abscissa)
            if key not in index:
                index[key] = r
                continue
            a = index[key]
            index[key] = Row(
                r.policy,
                r.abscissa,
                a.analytic if not math.isnan(a.analytic) else r.analytic,
                a.simulated if not math.isnan(a.simulated) else r.simulated,
                a.ci_half if not math.isnan(a.ci_half) else r.ci_half,
                a.realizations if a.realizations is not None else r.realizations,
            )
        return ResultTable(list(index.values())).sorted()

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.sorted().rows:
            w.writerow([r.policy, _num(r.abscissa), _num(r.analytic), _num(r.simulated), _num(r.ci_half),
                        "" if r.realizations is None else str(r.realizations)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ResultTable":
        reader = csv.DictReader(io.StringIO(text))
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        out = cls()
        for rec in reader:
            out.add(
                policy=rec["policy"],
                abscissa=float(rec["abscissa"]),
                analytic=_parse(rec["analytic"]),
                simulated=_parse(rec["simulated"]),
                ci_half=_parse(rec["ci_half"]),
                realizations=int(rec["realizations"]) if rec["realizations"] else None,
            )
        return out


def _num(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def _parse(s: str) -> float:
    return float(s) if s else math.nan

"""Per-stroke results, session reports and their JSON / HTML renderings."""

from __future__ import annotations

import html
import json
from dataclasses import dataclass, field
from typing import Optional

from .types import ImpactPoint, StrokeType, clamp_quality

REPORT_SCHEMA = "strokekit.session-report/1"


@dataclass
class StrokeResult:
    stroke_type: StrokeType
    type_confidence: float
    quality: float
    impact: ImpactPoint
    advice: list
    impact_time_ns: int
    padded: bool = False
    low_confidence: bool = False

    def __post_init__(self):
        self.stroke_type = StrokeType(self.stroke_type)
        self.quality = clamp_quality(self.quality)
        if not isinstance(self.impact, ImpactPoint):
            self.impact = ImpactPoint(*self.impact)
        self.type_confidence = float(min(1.0, max(0.0, self.type_confidence)))
        if not self.advice:
            raise ValueError("a stroke result needs at least one advice line")

    def to_dict(self) -> dict:
        return {
            "impact_time_ns": int(self.impact_time_ns),
            "stroke_type": self.stroke_type.value,
            "type_confidence": self.type_confidence,
            "low_confidence": self.low_confidence,
            "quality": self.quality,
            "impact": {"x": self.impact.x, "y": self.impact.y},
            "advice": list(self.advice),
            "padded": self.padded,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StrokeResult":
        return cls(
            stroke_type=d["stroke_type"], type_confidence=d["type_confidence"], quality=d["quality"],
            impact=ImpactPoint(d["impact"]["x"], d["impact"]["y"]), advice=list(d["advice"]),
            impact_time_ns=d["impact_time_ns"], padded=d.get("padded", False),
            low_confidence=d.get("low_confidence", False),
        )


@dataclass
class SessionReport:
    session_id: str
    timeline: list = field(default_factory=list)  # StrokeResult, ordered by time
    rejected_candidates: int = 0
    failures: list = field(default_factory=list)  # {"impact_time_ns", "error"}

    @property
    def stroke_count(self) -> int:
        return len(self.timeline)

    @property
    def type_counts(self) -> dict:
        counts = {}
        for r in self.timeline:
            counts[r.stroke_type.value] = counts.get(r.stroke_type.value, 0) + 1
        return counts

    @property
    def type_mean_rating(self) -> dict:
        sums = {}
        for r in self.timeline:
            sums.setdefault(r.stroke_type.value, []).append(r.quality)
        return {k: sum(v) / len(v) for k, v in sums.items()}

    @property
    def mean_rating(self) -> Optional[float]:
        if not self.timeline:
            return None
        return sum(r.quality for r in self.timeline) / len(self.timeline)

    def to_dict(self) -> dict:
        order = [t.value for t in StrokeType.ordered()]
        counts, means = self.type_counts, self.type_mean_rating
        return {
            "schema": REPORT_SCHEMA,
            "session_id": self.session_id,
            "stroke_count": self.stroke_count,
            "type_counts": {k: counts[k] for k in order if k in counts},
            "type_mean_rating": {k: means[k] for k in order if k in means},
            "mean_rating": self.mean_rating,
            "rejected_candidates": self.rejected_candidates,
            "failures": list(self.failures),
            "timeline": [r.to_dict() for r in self.timeline],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SessionReport":
        if d.get("schema") != REPORT_SCHEMA:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        report = cls(d["session_id"], [StrokeResult.from_dict(r) for r in d["timeline"]],
                     d.get("rejected_candidates", 0), list(d.get("failures", [])))
        if report.stroke_count != d["stroke_count"]:
            raise ValueError("stroke_count does not match the timeline")
        return report


def render_json(report: SessionReport) -> str:
    return json.dumps(report.to_dict(), indent=2) + "\n"


def parse_json(text: str) -> SessionReport:
    return SessionReport.from_dict(json.loads(text))


_CSS = """
body{font-family:system-ui,sans-serif;margin:2em;color:#222;max-width:60em}
table{border-collapse:collapse}td,th{border:1px solid #ccc;padding:.3em .6em;text-align:left}
section{margin-bottom:2em}.stroke{display:flex;gap:1.5em;margin:1em 0;border-top:1px solid #eee;padding-top:1em}
.low{color:#b45309}
"""


def _face_svg(impact: ImpactPoint) -> str:
    # face drawn 100 wide x 140 tall; the throat (y = 0) sits at the bottom centre
    cx = 60 + impact.x * 100
    cy = 150 - impact.y * 140
    return (
        '<svg width="120" height="160" viewBox="0 0 120 160" xmlns="http://www.w3.org/2000/svg">'
        '<ellipse cx="60" cy="80" rx="50" ry="70" fill="#f3f4f6" stroke="#374151" stroke-width="2"/>'
        f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="5" fill="#dc2626"/></svg>'
    )


def render_html(report: SessionReport) -> str:
    """A single self-contained page: summary, timeline and per-stroke detail."""
    d = report.to_dict()
    esc = html.escape
    mean = "n/a" if d["mean_rating"] is None else f"{d['mean_rating']:.2f}"
    rows = "".join(
        f"<tr><td>{esc(k)}</td><td>{v}</td><td>{d['type_mean_rating'][k]:.2f}</td></tr>"
        for k, v in d["type_counts"].items()
    )
    parts = [
        "<!DOCTYPE html><html><head><meta charset=\"utf-8\">",
        f"<title>Session {esc(report.session_id)}</title><style>{_CSS}</style></head><body>",
        f"<h1>Session {esc(report.session_id)}</h1>",
        '<section id="summary"><h2>Summary</h2>',
        f"<p>{report.stroke_count} stroke(s) detected, mean rating {mean}, "
        f"{report.rejected_candidates} rejected candidate(s).</p>",
    ]
    if rows:
        parts.append(f"<table><tr><th>Type</th><th>Count</th><th>Mean rating</th></tr>{rows}</table>")
    parts.append("</section>")

    parts.append('<section id="timeline"><h2>Timeline</h2><ol>')
    for i, r in enumerate(report.timeline):
        t = r.impact_time_ns / 1e9
        parts.append(f'<li class="timeline-entry"><a href="#stroke-{i}">{t:.2f} s: '
                     f"{r.stroke_type.value} rated {r.quality:.1f}</a></li>")
    parts.append("</ol></section>")

    parts.append('<section id="strokes"><h2>Strokes</h2>')
    for i, r in enumerate(report.timeline):
        conf = f"{r.type_confidence:.2f}" + (' <span class="low">(low)</span>' if r.low_confidence else "")
        advice = "".join(f"<li>{esc(a)}</li>" for a in r.advice)
        parts.append(
            f'<div class="stroke" id="stroke-{i}">{_face_svg(r.impact)}<div>'
            f"<h3>#{i + 1} {r.stroke_type.value}</h3>"
            f"<p>Rating {r.quality:.2f} / 5, type confidence {conf}, "
            f"impact ({r.impact.x:+.2f}, {r.impact.y:.2f})</p><ul>{advice}</ul></div></div>"
        )
    parts.append("</section></body></html>\n")
    return "".join(parts)


def render_report(report: SessionReport, fmt: str = "json") -> str:
    if fmt == "json":
        return render_json(report)
    if fmt == "html":
        return render_html(report)
    raise ValueError(f"unknown report format {fmt!r}")

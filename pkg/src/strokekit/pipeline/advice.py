"""Rule-based improvement advice.

Rules fire in a fixed order: impact location, then technique, then praise.
Praise is only given when neither of the other two fired. The wording lives
in :data:`DEFAULT_RULES` and can be replaced by a JSON table with the same
keys (see :func:`load_rules`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from ..types import ImpactPoint, StrokeType

QUALITY_THRESHOLD = 3.0


@dataclass(frozen=True)
class OptimalRegion:
    """Preferred contact area as fractions of face width (x) and height (y)."""

    x_range: tuple[float, float]
    y_range: tuple[float, float]

    def locate(self, impact: ImpactPoint) -> tuple[str, str]:
        """('left'|'inside'|'right', 'below'|'inside'|'above') relative to the region."""
        fx = impact.x + 0.5
        horiz = "left" if fx < self.x_range[0] else "right" if fx > self.x_range[1] else "inside"
        vert = "below" if impact.y < self.y_range[0] else "above" if impact.y > self.y_range[1] else "inside"
        return horiz, vert


DEFAULT_REGIONS = {
    StrokeType.FOC: OptimalRegion((0.25, 0.75), (0.50, 0.75)),
    StrokeType.FOS: OptimalRegion((0.25, 0.75), (0.50, 0.75)),
    StrokeType.BOC: OptimalRegion((0.25, 0.75), (0.25, 0.50)),
    StrokeType.FOD: OptimalRegion((0.25, 0.75), (0.70, 0.90)),
}

DEFAULT_RULES = {
    "location.higher": "Contact the shuttle higher on the string face; the hit landed below the sweet spot for a {name}.",
    "location.lower": "Contact the shuttle lower on the string face; the hit landed above the sweet spot for a {name}.",
    "location.right": "Shift contact to the right, toward the middle of the face; the hit landed too far left for a {name}.",
    "location.left": "Shift contact to the left, toward the middle of the face; the hit landed too far right for a {name}.",
    "technique.BOC": "Backhand clear: turn your back to the net earlier, lead with the elbow and snap the forearm through contact.",
    "technique.FOC": "Forehand clear: get behind the shuttle, rotate the trunk fully and hit at the highest point with a full arm extension.",
    "technique.FOS": "Smash: contact the shuttle further in front of the body and accelerate the forearm pronation through the hit.",
    "technique.FOD": "Drop: keep the same preparation as a clear but slow the racket head just before contact to control the shuttle.",
    "praise": "Good {name}: clean contact in the sweet spot. Keep it up.",
}

STROKE_NAMES = {
    StrokeType.BOC: "backhand overhead clear",
    StrokeType.FOC: "forehand overhead clear",
    StrokeType.FOS: "forehand overhead smash",
    StrokeType.FOD: "forehand overhead drop",
}


def load_rules(path) -> dict:
    rules = dict(DEFAULT_RULES)
    rules.update(json.loads(Path(path).read_text()))
    return rules


def fire_rules(stroke_type: StrokeType, quality: float, impact: ImpactPoint, regions=None) -> list[str]:
    """Keys of the rules that apply, in firing order."""
    stroke_type = StrokeType(stroke_type)
    region = (regions or DEFAULT_REGIONS)[stroke_type]
    horiz, vert = region.locate(impact)
    fired = []
    if vert == "below":
        fired.append("location.higher")
    elif vert == "above":
        fired.append("location.lower")
    if horiz == "left":
        fired.append("location.right")
    elif horiz == "right":
        fired.append("location.left")
    if quality < QUALITY_THRESHOLD:
        fired.append(f"technique.{stroke_type.value}")
    if not fired:
        fired.append("praise")
    return fired


def generate_advice(stroke_type: StrokeType, quality: float, impact: ImpactPoint,
                    regions=None, rules=None) -> list[str]:
    rules = rules or DEFAULT_RULES
    stroke_type = StrokeType(stroke_type)
    name = STROKE_NAMES[stroke_type]
    return [rules[key].format(name=name) for key in fire_rules(stroke_type, quality, impact, regions)]

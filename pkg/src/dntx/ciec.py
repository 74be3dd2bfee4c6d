"""Continuous intensity expression coding (CIEC).

A CIEC vector has one entry per non-neutral expression type, at most one of
them non-zero, values in [0, 1].  The zero vector is the neutral expression.
Timelines are keyframed CIEC curves; different types must be bridged through
a zero-intensity keyframe.
"""

import json
from dataclasses import dataclass, field

import numpy as np

EXPRESSION_TYPES = (
    "angry",
    "contempt",
    "disgusted",
    "fear",
    "happy",
    "sad",
    "surprised",
)
NUM_TYPES = len(EXPRESSION_TYPES)

# MEAD-style discrete levels mapped to normalized intensities.
LEVEL_INTENSITY = {0: 0.0, 1: 0.33, 2: 0.67, 3: 1.0}


class CIECError(ValueError):
    pass


@dataclass(frozen=True)
class CIEC:
    """Validated expression code. Use :func:`validate` or :func:`from_label`."""

    values: np.ndarray

    @property
    def is_neutral(self):
        return not np.any(self.values)

    @property
    def type_index(self):
        """Index of the active type, or -1 for neutral."""
        if self.is_neutral:
            return -1
        return int(np.argmax(self.values != 0.0))

    @property
    def type_name(self):
        idx = self.type_index
        return "neutral" if idx < 0 else EXPRESSION_TYPES[idx]

    @property
    def intensity(self):
        idx = self.type_index
        return 0.0 if idx < 0 else float(self.values[idx])

    def as_array(self):
        return self.values.copy()


def validate(raw) -> CIEC:
    """Check a length-C vector against the CIEC invariants.

    Raises CIECError on wrong length, NaN, out-of-range values or more than
    one non-zero entry.
    """
    v = np.asarray(raw, dtype=np.float64)
    if v.shape != (NUM_TYPES,):
        raise CIECError(f"expected length {NUM_TYPES}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise CIECError("non-finite entries")
    if np.any(v < 0.0) or np.any(v > 1.0):
        raise CIECError("values outside [0, 1]")
    if np.count_nonzero(v) > 1:
        raise CIECError("more than one non-zero entry")
    v = v.copy()
    v.setflags(write=False)
    return CIEC(v)


def neutral() -> CIEC:
    return validate(np.zeros(NUM_TYPES))


def make(type_name: str, intensity: float) -> CIEC:
    """CIEC with a single active type at the given intensity in [0, 1]."""
    if type_name == "neutral":
        if intensity != 0.0:
            raise CIECError("neutral requires intensity 0")
        return neutral()
    if type_name not in EXPRESSION_TYPES:
        raise CIECError(f"unknown expression type {type_name!r}")
    v = np.zeros(NUM_TYPES)
    v[EXPRESSION_TYPES.index(type_name)] = intensity
    return validate(v)


def from_label(type_name: str, level: int) -> CIEC:
    """Discrete (type, level) label to CIEC. Level 0 is only valid with neutral."""
    if level not in LEVEL_INTENSITY:
        raise CIECError(f"level must be in 0..3, got {level}")
    if type_name == "neutral":
        if level != 0:
            raise CIECError("neutral only pairs with level 0")
        return neutral()
    if level == 0:
        raise CIECError("level 0 only pairs with neutral")
    return make(type_name, LEVEL_INTENSITY[level])


def to_label(code: CIEC):
    """Inverse of from_label for codes produced by it."""
    if code.is_neutral:
        return ("neutral", 0)
    for level, val in LEVEL_INTENSITY.items():
        if level and abs(code.intensity - val) < 1e-12:
            return (code.type_name, level)
    raise CIECError(f"intensity {code.intensity} is not a discrete level")


@dataclass
class CIECTimeline:
    """Ordered (frame_index, CIEC) keyframes.

    Consecutive keyframes with different non-zero types must be separated by
    a zero-intensity keyframe, so intensity always crosses zero when the
    expression type switches.
    """

    keyframes: list = field(default_factory=list)

    def __post_init__(self):
        frames = [f for f, _ in self.keyframes]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise CIECError("keyframe indices must be strictly increasing")
        prev = None
        for _, code in self.keyframes:
            if prev is not None and not prev.is_neutral and not code.is_neutral:
                if prev.type_index != code.type_index:
                    raise CIECError(
                        "type switch without an intervening zero-intensity keyframe"
                    )
            if not code.is_neutral:
                prev = code
            elif prev is not None:
                prev = None
        return


def sample_timeline(timeline: CIECTimeline, frame_index: int) -> CIEC:
    """Piecewise-linear CIEC at a frame index.

    Between keyframes of the same type the intensity interpolates linearly;
    across a type change the intensity ramps down to the zero keyframe and
    back up in the new type.  Queries outside the keyframe range clamp.
    """
    keys = timeline.keyframes
    if not keys:
        return neutral()
    if frame_index <= keys[0][0]:
        return keys[0][1]
    if frame_index >= keys[-1][0]:
        return keys[-1][1]
    for (f0, c0), (f1, c1) in zip(keys, keys[1:]):
        if f0 <= frame_index <= f1:
            t = (frame_index - f0) / (f1 - f0)
            if c0.is_neutral and c1.is_neutral:
                return neutral()
            if c0.is_neutral:
                return make(c1.type_name, t * c1.intensity)
            if c1.is_neutral:
                return make(c0.type_name, (1.0 - t) * c0.intensity)
            # same type by the timeline invariant
            return make(c0.type_name, (1.0 - t) * c0.intensity + t * c1.intensity)
    raise AssertionError("unreachable")


def timeline_to_json(timeline: CIECTimeline) -> str:
    entries = [
        {"frame": int(f), "type": c.type_name, "intensity": c.intensity}
        for f, c in timeline.keyframes
    ]
    return json.dumps(entries, indent=2)


def timeline_from_json(text: str) -> CIECTimeline:
    entries = json.loads(text)
    keys = []
    for e in entries:
        code = make(e["type"], float(e["intensity"]))
        keys.append((int(e["frame"]), code))
    return CIECTimeline(keys)

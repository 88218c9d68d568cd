"""Scene domain model, codebook encoding and dataset I/O.

A frame holds the agents observed around the ego vehicle. Encoding keeps only
the dominant agent per lane (largest ``size / distance``) plus the dominant
traffic light, and maps each (class, action) pair to an ordinal integer code.
"""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    FormatError,
    InvalidFraction,
    InvalidObservation,
    ParseError,
    UnknownPair,
)

FEATURE_NAMES = ("EgoLane", "IncomLane", "OutgoLane", "TL", "EgoPlan")
N_FEATURES = len(FEATURE_NAMES)
EGO_LANE, INCOM_LANE, OUTGO_LANE, TL, EGO_PLAN = range(N_FEATURES)
LANE_FEATURES = (EGO_LANE, INCOM_LANE, OUTGO_LANE)


class AgentClass(enum.Enum):
    VEHICLE = "Vehicle"
    BUS = "Bus"
    MOTORBIKE = "Motorbike"
    CYCLIST = "Cyclist"
    PEDESTRIAN = "Pedestrian"
    TRAFFIC_LIGHT = "TrafficLight"
    NONE = "None"


class AgentAction(enum.Enum):
    MOVING = "Moving"
    STOPPED = "Stopped"
    BRAKING = "Braking"
    INDICATING = "Indicating"
    CROSSING = "Crossing"
    RED = "Red"
    AMBER = "Amber"
    GREEN = "Green"
    NONE = "None"


class LanePosition(enum.Enum):
    EGO_LANE = "EgoLane"
    INCOMING_LANE = "IncomingLane"
    OUTGOING_LANE = "OutgoingLane"


class EgoAction(enum.IntEnum):
    """Ego manoeuvre; the integer value doubles as class index and plan code."""

    STOP = 0
    MOVE = 1
    RIGHT_LANE_CHANGE = 2
    LEFT_LANE_CHANGE = 3

    @property
    def token(self) -> str:
        return _EGO_TOKENS[self]

    @classmethod
    def from_token(cls, token: str) -> "EgoAction":
        try:
            return _EGO_BY_TOKEN[token.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown ego action {token!r}; expected one of "
                             f"{sorted(_EGO_BY_TOKEN)}") from None


_EGO_TOKENS = {
    EgoAction.STOP: "stop",
    EgoAction.MOVE: "move",
    EgoAction.RIGHT_LANE_CHANGE: "rlc",
    EgoAction.LEFT_LANE_CHANGE: "llc",
}
_EGO_BY_TOKEN = {v: k for k, v in _EGO_TOKENS.items()}
CLASS_NAMES = tuple(a.token for a in EgoAction)
N_CLASSES = len(CLASS_NAMES)

_LIGHTS = {AgentAction.RED, AgentAction.AMBER, AgentAction.GREEN}
_CROSSERS = {AgentClass.PEDESTRIAN, AgentClass.CYCLIST}


def check_pair(cls: AgentClass, action: AgentAction) -> None:
    """Raise InvalidObservation if ``action`` is not allowed for ``cls``."""
    if (cls is AgentClass.NONE) != (action is AgentAction.NONE):
        raise InvalidObservation(f"{cls.value}:{action.value}: None class and None "
                                 "action only occur together")
    if (action in _LIGHTS) != (cls is AgentClass.TRAFFIC_LIGHT):
        raise InvalidObservation(f"{cls.value}:{action.value}: light states belong "
                                 "to traffic lights only")
    if action is AgentAction.CROSSING and cls not in _CROSSERS:
        raise InvalidObservation(f"{cls.value}:{action.value}: only pedestrians and "
                                 "cyclists cross")


@dataclass(frozen=True)
class AgentObservation:
    cls: AgentClass
    action: AgentAction
    position: LanePosition
    size: float = 1.0
    distance: float = 10.0

    def __post_init__(self):
        check_pair(self.cls, self.action)
        if not self.size >= 0:
            raise InvalidObservation(f"size must be >= 0, got {self.size}")
        if not self.distance > 0:
            raise InvalidObservation(f"distance must be > 0, got {self.distance}")

    @property
    def pair(self) -> tuple[AgentClass, AgentAction]:
        return (self.cls, self.action)


@dataclass(frozen=True)
class FrameRecord:
    frame_id: int
    time: float
    observations: tuple[AgentObservation, ...] = ()
    ego_plan: EgoAction = EgoAction.MOVE
    ego_action: EgoAction = EgoAction.MOVE
    ground_truth_explanation: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "observations", tuple(self.observations))
        if self.frame_id < 0 or self.time < 0:
            raise InvalidObservation("frame_id and time must be nonnegative")


@dataclass(frozen=True)
class FeatureVector:
    ego_lane: int
    incom_lane: int
    outgo_lane: int
    tl: int
    ego_plan: int

    def as_array(self) -> np.ndarray:
        return np.array([self.ego_lane, self.incom_lane, self.outgo_lane,
                         self.tl, self.ego_plan], dtype=np.int64)

    @classmethod
    def from_array(cls, values: Sequence[int]) -> "FeatureVector":
        return cls(*(int(v) for v in values))


# --------------------------------------------------------------------------
# codebook

# Ordinal layout: None first, then vehicle-like classes with actions ordered by
# severity, vulnerable road users, and traffic lights Green < Amber < Red.
_DEFAULT_PAIRS = [
    ("None", "None"),
    ("Vehicle", "Moving"), ("Vehicle", "Indicating"),
    ("Vehicle", "Braking"), ("Vehicle", "Stopped"),
    ("Bus", "Moving"), ("Bus", "Indicating"), ("Bus", "Braking"), ("Bus", "Stopped"),
    ("Motorbike", "Moving"), ("Motorbike", "Indicating"),
    ("Motorbike", "Braking"), ("Motorbike", "Stopped"),
    ("Cyclist", "Moving"), ("Cyclist", "Stopped"), ("Cyclist", "Crossing"),
    ("Pedestrian", "Moving"), ("Pedestrian", "Stopped"), ("Pedestrian", "Crossing"),
    ("TrafficLight", "Green"), ("TrafficLight", "Amber"), ("TrafficLight", "Red"),
]
DEFAULT_CODEBOOK_VERSION = "default-1"
EMPTY_PAIR = (AgentClass.NONE, AgentAction.NONE)


@dataclass(frozen=True)
class Codebook:
    entries: dict = field(default_factory=dict)
    version: str = DEFAULT_CODEBOOK_VERSION

    def __post_init__(self):
        codes = list(self.entries.values())
        if len(set(codes)) != len(codes):
            raise FormatError("codebook codes must be unique")
        if any(c < 0 for c in codes):
            raise FormatError("codebook codes must be >= 0")
        if self.entries.get(EMPTY_PAIR) != 0:
            raise FormatError("code 0 is reserved for None:None")
        for cls, action in self.entries:
            check_pair(cls, action)
        object.__setattr__(self, "_by_code", {c: p for p, c in self.entries.items()})

    def code(self, pair, line=None) -> int:
        try:
            return self.entries[pair]
        except KeyError:
            raise UnknownPair((pair[0].value, pair[1].value), line) from None

    def pair(self, code: int) -> tuple[AgentClass, AgentAction]:
        return self._by_code[int(code)]

    def codes(self) -> list[int]:
        return sorted(self._by_code)

    def lane_domain(self) -> list[int]:
        """Codes a lane feature can take (everything except traffic lights)."""
        return [c for c in self.codes()
                if self._by_code[c][0] is not AgentClass.TRAFFIC_LIGHT]

    def tl_domain(self) -> list[int]:
        return [c for c in self.codes()
                if self._by_code[c][0] in (AgentClass.TRAFFIC_LIGHT, AgentClass.NONE)]

    def feature_domains(self) -> list[list[int]]:
        """Finite value set of each feature, in FEATURE_NAMES order."""
        lane = self.lane_domain()
        return [lane, lane, lane, self.tl_domain(), [int(a) for a in EgoAction]]

    def to_text(self) -> str:
        lines = [f"version={self.version}"]
        for code in self.codes():
            cls, action = self._by_code[code]
            lines.append(f"{cls.value}:{action.value}={code}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Codebook":
        version = None
        entries = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise FormatError(f"codebook line {lineno}: expected key=value")
            key, value = key.strip(), value.strip()
            if key == "version":
                version = value
                continue
            try:
                c, a = key.split(":")
                pair = (AgentClass(c), AgentAction(a))
                code = int(value)
            except ValueError as exc:
                raise FormatError(f"codebook line {lineno}: {exc}") from None
            if pair in entries:
                raise FormatError(f"codebook line {lineno}: duplicate pair {key}")
            entries[pair] = code
        if version is None:
            raise FormatError("codebook has no version line")
        return cls(entries, version)

    def save(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Codebook":
        return cls.from_text(Path(path).read_text(encoding="utf-8"))

    def to_dict(self) -> dict:
        return {"version": self.version,
                "entries": {f"{c.value}:{a.value}": code
                            for (c, a), code in sorted(self.entries.items(),
                                                       key=lambda kv: kv[1])}}

    @classmethod
    def from_dict(cls, d: dict) -> "Codebook":
        entries = {}
        for key, code in d["entries"].items():
            c, a = key.split(":")
            entries[(AgentClass(c), AgentAction(a))] = int(code)
        return cls(entries, d["version"])


def default_codebook() -> Codebook:
    entries = {(AgentClass(c), AgentAction(a)): i for i, (c, a) in enumerate(_DEFAULT_PAIRS)}
    return Codebook(entries, DEFAULT_CODEBOOK_VERSION)


# --------------------------------------------------------------------------
# encoding

def _more_dominant(a: AgentObservation, b: AgentObservation) -> bool:
    # cross-multiplied comparison of size/distance keeps exact ties exact
    lhs, rhs = a.size * b.distance, b.size * a.distance
    if lhs != rhs:
        return lhs > rhs
    return a.distance < b.distance


def select_dominant_agent(observations: Iterable[AgentObservation],
                          lane: Optional[LanePosition] = None,
                          classes=None) -> Optional[AgentObservation]:
    """Return the observation with the largest ``size / distance``.

    Only observations in ``lane`` (any lane if None) and, optionally, of one
    of ``classes`` compete. Ties go to the nearer agent, then to list order.
    Returns None when nothing qualifies.
    """
    best = None
    for obs in observations:
        if lane is not None and obs.position is not lane:
            continue
        if classes is not None and obs.cls not in classes:
            continue
        if best is None or _more_dominant(obs, best):
            best = obs
    return best


_LANE_OF_FEATURE = {
    EGO_LANE: LanePosition.EGO_LANE,
    INCOM_LANE: LanePosition.INCOMING_LANE,
    OUTGO_LANE: LanePosition.OUTGOING_LANE,
}
_ROAD_USERS = frozenset(c for c in AgentClass if c not in (AgentClass.TRAFFIC_LIGHT,
                                                           AgentClass.NONE))


def encode_frame(frame: FrameRecord, codebook: Codebook, line=None) -> FeatureVector:
    """Encode a frame as a FeatureVector.

    Traffic lights never compete for a lane slot; the TL feature is the
    dominant light anywhere in the scene.
    """
    for obs in frame.observations:
        codebook.code(obs.pair, line)
    codes = []
    for feat in LANE_FEATURES:
        dom = select_dominant_agent(frame.observations, _LANE_OF_FEATURE[feat], _ROAD_USERS)
        codes.append(0 if dom is None else codebook.code(dom.pair, line))
    light = select_dominant_agent(frame.observations, None, {AgentClass.TRAFFIC_LIGHT})
    codes.append(0 if light is None else codebook.code(light.pair, line))
    codes.append(int(frame.ego_plan))
    return FeatureVector(*codes)


def assign_plans(frames: Sequence[FrameRecord], lookahead: int = 10) -> list[FrameRecord]:
    """Set each frame's plan to the ego action ``lookahead`` frames later.

    Frames near the end of the sequence reuse the last available action.
    """
    if lookahead < 0:
        raise ValueError("lookahead must be >= 0")
    out = []
    n = len(frames)
    for i, fr in enumerate(frames):
        future = frames[min(i + lookahead, n - 1)].ego_action
        out.append(FrameRecord(fr.frame_id, fr.time, fr.observations, future,
                               fr.ego_action, fr.ground_truth_explanation))
    return out


# --------------------------------------------------------------------------
# datasets

@dataclass
class Dataset:
    """Encoded rows: features ``X`` (N x 5 ints), labels ``y`` and references."""

    X: np.ndarray
    y: np.ndarray
    texts: list = field(default_factory=list)
    frame_ids: Optional[np.ndarray] = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.int64).reshape(-1, N_FEATURES)
        self.y = np.asarray(self.y, dtype=np.int64).reshape(-1)
        if len(self.texts) == 0:
            self.texts = [None] * len(self.y)
        if self.frame_ids is None:
            self.frame_ids = np.arange(len(self.y))
        if not (len(self.X) == len(self.y) == len(self.texts) == len(self.frame_ids)):
            raise ValueError("dataset columns differ in length")

    def __len__(self):
        return len(self.y)

    def __iter__(self):
        for x, y, t in zip(self.X, self.y, self.texts):
            yield FeatureVector.from_array(x), EgoAction(int(y)), t

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.X[idx], self.y[idx], [self.texts[i] for i in idx],
                       self.frame_ids[idx])


def encode_frames(frames: Sequence[FrameRecord], codebook: Codebook) -> Dataset:
    X = [encode_frame(f, codebook).as_array() for f in frames]
    return Dataset(np.array(X, dtype=np.int64).reshape(-1, N_FEATURES),
                   np.array([int(f.ego_action) for f in frames], dtype=np.int64),
                   [f.ground_truth_explanation for f in frames],
                   np.array([f.frame_id for f in frames], dtype=np.int64))


CSV_HEADER = ("frame_id", "time", "ego_lane", "incom_lane", "outgo_lane", "tl",
              "ego_plan", "ego_action", "gt_explanation")
_CELL_LANES = {"ego_lane": LanePosition.EGO_LANE,
               "incom_lane": LanePosition.INCOMING_LANE,
               "outgo_lane": LanePosition.OUTGOING_LANE,
               "tl": LanePosition.EGO_LANE}


def parse_cell(cell: str, position: LanePosition) -> list[AgentObservation]:
    """Parse ``Class:Action[:size:distance]`` tuples separated by ``;``."""
    out = []
    for item in cell.split(";"):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        if len(parts) not in (2, 4):
            raise ValueError(f"bad agent tuple {item!r}")
        cls, action = AgentClass(parts[0]), AgentAction(parts[1])
        if len(parts) == 4:
            out.append(AgentObservation(cls, action, position,
                                        float(parts[2]), float(parts[3])))
        else:
            out.append(AgentObservation(cls, action, position))
    return out


def format_cell(observations: Iterable[AgentObservation]) -> str:
    return ";".join(f"{o.cls.value}:{o.action.value}:{o.size:g}:{o.distance:g}"
                    for o in observations)


def read_frames(path) -> list[FrameRecord]:
    """Read frames from the dataset CSV; errors carry the file line number."""
    return _read_frames(path)[0]


def _read_frames(path):
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text, newline=""))
    frames, lines = [], []
    seen = set()
    last_time = -1.0
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file, header missing", line=1) from None
    if tuple(h.strip() for h in header) != CSV_HEADER:
        raise ParseError(f"header must be {','.join(CSV_HEADER)}", line=1)
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise ParseError(f"expected {len(CSV_HEADER)} fields, got {len(row)}", line)
        rec = dict(zip(CSV_HEADER, row))
        try:
            frame_id = int(rec["frame_id"])
            time = float(rec["time"])
            obs = []
            for col, pos in _CELL_LANES.items():
                cell_obs = parse_cell(rec[col], pos)
                if col == "tl" and any(o.cls is not AgentClass.TRAFFIC_LIGHT for o in cell_obs):
                    raise ValueError("tl column holds traffic lights only")
                obs.extend(cell_obs)
            plan = EgoAction.from_token(rec["ego_plan"])
            action = EgoAction.from_token(rec["ego_action"])
            frame = FrameRecord(frame_id, time, tuple(obs), plan, action,
                                rec["gt_explanation"] or None)
        except (ValueError, InvalidObservation) as exc:
            raise ParseError(str(exc), line) from None
        if frame_id in seen:
            raise ParseError(f"duplicate frame_id {frame_id}", line)
        if time < last_time:
            raise ParseError("time decreases", line)
        seen.add(frame_id)
        last_time = time
        frames.append(frame)
        lines.append(line)
    return frames, lines


def write_frames(path, frames: Iterable[FrameRecord]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
    writer.writerow(CSV_HEADER)
    for fr in frames:
        cells = {col: [] for col in _CELL_LANES}
        for o in fr.observations:
            if o.cls is AgentClass.TRAFFIC_LIGHT:
                cells["tl"].append(o)
            else:
                col = {v: k for k, v in _CELL_LANES.items() if k != "tl"}[o.position]
                cells[col].append(o)
        writer.writerow([fr.frame_id, f"{fr.time:g}",
                         *(format_cell(cells[c]) for c in _CELL_LANES),
                         fr.ego_plan.token, fr.ego_action.token,
                         fr.ground_truth_explanation or ""])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def load_dataset(path, codebook: Optional[Codebook] = None) -> Dataset:
    codebook = codebook or default_codebook()
    frames, lines = _read_frames(path)
    X = [encode_frame(fr, codebook, line=line).as_array() for fr, line in zip(frames, lines)]
    return Dataset(np.array(X, dtype=np.int64).reshape(-1, N_FEATURES),
                   np.array([int(f.ego_action) for f in frames], dtype=np.int64),
                   [f.ground_truth_explanation for f in frames],
                   np.array([f.frame_id for f in frames], dtype=np.int64))


def split_dataset(dataset: Dataset, test_fraction: float = 0.2, seed: int = 0):
    """Shuffle-split into (train, test) with ``round(test_fraction * N)`` test rows.

    Both parts keep the original row order.
    """
    if not 0 < test_fraction < 1:
        raise InvalidFraction(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = len(dataset)
    if n == 0:
        raise ValueError("cannot split an empty dataset")
    n_test = int(np.floor(test_fraction * n + 0.5))
    perm = np.random.default_rng(seed).permutation(n)
    test_idx = np.sort(perm[:n_test])
    train_idx = np.sort(perm[n_test:])
    return dataset.subset(train_idx), dataset.subset(test_idx)

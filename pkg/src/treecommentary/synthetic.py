"""Seeded synthetic driving frames labelled by a fixed rule oracle.

The oracle reads only the encoded features, so a tree model can learn it
exactly. Rules, applied in order:

1. traffic light Red or Amber                        -> stop
2. ego lane blocked (dominant agent stopped, braking or crossing):
   a. outgoing lane free and plan is llc             -> llc
   b. outgoing lane free and plan is move or rlc     -> rlc
   c. otherwise                                      -> stop
3. ego lane not blocked:
   a. outgoing lane free and plan is rlc or llc      -> the planned lane change
   b. otherwise                                      -> move

Label counts follow the configured class proportions exactly (largest
remainder rounding). A noisy row keeps its label but receives a scene the
oracle assigns to a different class, so proportions do not drift with noise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig
from .scene import (
    AgentAction,
    AgentClass,
    AgentObservation,
    Codebook,
    EgoAction,
    FeatureVector,
    FrameRecord,
    LanePosition,
    default_codebook,
    encode_frame,
)

# 800 / 900 / 483 / 572 of 2755 records
DEFAULT_CLASS_COUNTS = (800, 900, 483, 572)
DEFAULT_PROPORTIONS = tuple(c / sum(DEFAULT_CLASS_COUNTS) for c in DEFAULT_CLASS_COUNTS)

_BLOCKING = {AgentAction.STOPPED, AgentAction.BRAKING, AgentAction.CROSSING}


@dataclass(frozen=True)
class SyntheticConfig:
    size: int = 2755
    class_proportions: tuple = DEFAULT_PROPORTIONS
    noise: float = 0.0
    max_attempts: int = 10_000

    def validate(self):
        if int(self.size) != self.size or self.size < 1:
            raise InvalidConfig(f"size must be a positive integer, got {self.size}")
        props = np.asarray(self.class_proportions, dtype=float)
        if props.shape != (len(EgoAction),) or (props < 0).any():
            raise InvalidConfig("class_proportions needs 4 nonnegative entries")
        if abs(props.sum() - 1.0) > 1e-6:
            raise InvalidConfig(f"class proportions sum to {props.sum():.6f}, not 1")
        if not 0.0 <= self.noise < 1.0:
            raise InvalidConfig(f"noise must lie in [0, 1), got {self.noise}")


def rule_oracle(v: FeatureVector, codebook: Codebook | None = None):
    """Label a feature vector by the frozen rules. Returns (EgoAction, reason)."""
    codebook = codebook or default_codebook()
    plan = EgoAction(v.ego_plan)
    light = codebook.pair(v.tl)[1]
    if light in (AgentAction.RED, AgentAction.AMBER):
        return EgoAction.STOP, "light"
    ego_cls, ego_act = codebook.pair(v.ego_lane)
    blocked = ego_cls is not AgentClass.NONE and ego_act in _BLOCKING
    outgo_free = v.outgo_lane == 0
    if blocked:
        if outgo_free and plan is EgoAction.LEFT_LANE_CHANGE:
            return EgoAction.LEFT_LANE_CHANGE, "overtake"
        if outgo_free and plan in (EgoAction.MOVE, EgoAction.RIGHT_LANE_CHANGE):
            return EgoAction.RIGHT_LANE_CHANGE, "overtake"
        return EgoAction.STOP, "blocked"
    if outgo_free and plan in (EgoAction.RIGHT_LANE_CHANGE, EgoAction.LEFT_LANE_CHANGE):
        return plan, "plan"
    return EgoAction.MOVE, "free" if ego_cls is AgentClass.NONE else "follow"


def allocate_counts(size: int, proportions) -> np.ndarray:
    """Largest-remainder rounding of ``size * proportions``."""
    raw = np.asarray(proportions, dtype=float) * size
    counts = np.floor(raw).astype(int)
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[: size - counts.sum()]] += 1
    return counts


_SIZES = {
    AgentClass.VEHICLE: (4.5, 0.5),
    AgentClass.BUS: (12.0, 1.0),
    AgentClass.MOTORBIKE: (2.0, 0.3),
    AgentClass.CYCLIST: (1.8, 0.2),
    AgentClass.PEDESTRIAN: (0.6, 0.1),
}
_ROAD_CLASSES = list(_SIZES)
_ROAD_CLASS_P = [0.5, 0.1, 0.15, 0.1, 0.15]
_ACTIONS = {
    AgentClass.VEHICLE: [AgentAction.MOVING, AgentAction.INDICATING,
                         AgentAction.BRAKING, AgentAction.STOPPED],
    AgentClass.CYCLIST: [AgentAction.MOVING, AgentAction.STOPPED, AgentAction.CROSSING],
    AgentClass.PEDESTRIAN: [AgentAction.MOVING, AgentAction.STOPPED, AgentAction.CROSSING],
}
_ACTIONS[AgentClass.BUS] = _ACTIONS[AgentClass.VEHICLE]
_ACTIONS[AgentClass.MOTORBIKE] = _ACTIONS[AgentClass.VEHICLE]
_LIGHT_STATES = [AgentAction.GREEN, AgentAction.AMBER, AgentAction.RED]


def _random_scene(rng: np.random.Generator) -> tuple[list[AgentObservation], EgoAction]:
    obs = []
    for lane in LanePosition:
        for _ in range(rng.choice(3, p=[0.35, 0.45, 0.2])):
            cls = _ROAD_CLASSES[rng.choice(len(_ROAD_CLASSES), p=_ROAD_CLASS_P)]
            acts = _ACTIONS[cls]
            action = acts[rng.integers(len(acts))]
            mean, sd = _SIZES[cls]
            size = round(max(0.1, rng.normal(mean, sd)), 2)
            dist = round(rng.uniform(2.0, 60.0), 1)
            obs.append(AgentObservation(cls, action, lane, size, dist))
    if rng.random() < 0.6:
        state = _LIGHT_STATES[rng.integers(3)]
        obs.append(AgentObservation(AgentClass.TRAFFIC_LIGHT, state, LanePosition.EGO_LANE,
                                    1.0, round(rng.uniform(5.0, 80.0), 1)))
    plan = EgoAction(int(rng.integers(len(EgoAction))))
    return obs, plan


_REASON_TEXT = {
    "light": {AgentAction.RED: "the traffic light is red ahead",
              AgentAction.AMBER: "the traffic light is turning amber ahead"},
    "blocked": "{agent} on ego's lane",
    "overtake": "{agent} on ego's lane and the outgoing lane is clear",
    "plan": "the outgoing lane is clear and ego plans to change lane",
    "follow": "{agent} ahead on ego's lane",
    "free": "the road ahead is clear",
}
_VERB = {
    EgoAction.STOP: "ego stops",
    EgoAction.MOVE: "ego keeps moving",
    EgoAction.RIGHT_LANE_CHANGE: "ego moves to the right lane",
    EgoAction.LEFT_LANE_CHANGE: "ego moves to the left lane",
}
_ACTION_WORD = {
    AgentAction.MOVING: "moving", AgentAction.INDICATING: "indicating",
    AgentAction.BRAKING: "braking", AgentAction.STOPPED: "stopped",
    AgentAction.CROSSING: "crossing",
}


def reference_text(v: FeatureVector, label: EgoAction, codebook: Codebook) -> str:
    """Commentary-style reference sentence for a labelled frame."""
    _, reason = rule_oracle(v, codebook)
    cls, act = codebook.pair(v.ego_lane)
    if reason == "light":
        cause = _REASON_TEXT["light"][codebook.pair(v.tl)[1]]
    else:
        agent = f"a {cls.value.lower()} is {_ACTION_WORD.get(act, '')}".rstrip()
        cause = _REASON_TEXT[reason].format(agent=agent)
    return f"{cause}, so {_VERB[label]}"


def generate_synthetic(config: SyntheticConfig = SyntheticConfig(), seed: int = 0,
                       codebook: Codebook | None = None) -> list[FrameRecord]:
    """Generate ``config.size`` frames; identical output for identical seeds."""
    config.validate()
    codebook = codebook or default_codebook()
    rng = np.random.default_rng(seed)
    counts = allocate_counts(config.size, config.class_proportions)
    labels = rng.permutation(np.repeat(np.arange(len(EgoAction)), counts))
    frames = []
    for frame_id, label in enumerate(labels):
        label = EgoAction(int(label))
        scene_class = label
        if config.noise > 0 and rng.random() < config.noise:
            others = [a for a in EgoAction if a is not label]
            scene_class = others[rng.integers(len(others))]
        for _ in range(config.max_attempts):
            obs, plan = _random_scene(rng)
            probe = FrameRecord(frame_id, frame_id * 0.1, tuple(obs), plan, label)
            v = encode_frame(probe, codebook)
            if rule_oracle(v, codebook)[0] is scene_class:
                break
        else:
            raise InvalidConfig(f"could not realise a {scene_class.token} scene in "
                                f"{config.max_attempts} attempts")
        frames.append(FrameRecord(frame_id, round(frame_id * 0.1, 1), tuple(obs), plan,
                                  label, reference_text(v, label, codebook)))
    return frames

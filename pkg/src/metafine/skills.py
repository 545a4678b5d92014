"""Atomic skill specifications: preconditions, postconditions, constraints.

Each skill is a declarative triple (preconditions, postconditions, maintained
constraints) over the predicate vocabulary, plus tolerance parameters, the
asset annotation kinds it needs, and an instruction template. The triple
doubles as the acceptance contract: postconditions are checked at stage end,
constraints at every step.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .errors import DuplicateSkill, MalformedSpec
from .predicates import Atom, Conjunction, atom, conjunction_from_json, conjunction_to_json, is_variable

# Annotation kinds an asset can carry (see assets module).
PART_REGION = "part_region"
GRASP_POSE = "grasp_pose"
ROTATION_AXIS = "rotation_axis"
HINGE_AXIS = "hinge_axis"
SLIDING_DIRECTION = "sliding_direction"
ACTUATION_AXIS = "actuation_axis"

ANNOTATION_KINDS = {
    PART_REGION,
    GRASP_POSE,
    ROTATION_AXIS,
    HINGE_AXIS,
    SLIDING_DIRECTION,
    ACTUATION_AXIS,
}

# Default tolerances; millimeter-scale positioning, small angular windows.
DEFAULT_EPS_POS = 0.005   # m
DEFAULT_EPS_ANG = 5.0     # deg
DEFAULT_EPS_CLEAR = 0.002  # m
DEFAULT_EPS_AXIS = 5.0    # deg
DEFAULT_INSERT_DEPTH_TOL = 0.002  # m
DEFAULT_HINGE_MIN_ANGLE = 30.0    # deg


@dataclass(frozen=True)
class ToleranceSet:
    eps_pos: float = DEFAULT_EPS_POS
    eps_ang: float = DEFAULT_EPS_ANG
    eps_clear: float = DEFAULT_EPS_CLEAR
    eps_axis: float = DEFAULT_EPS_AXIS

    def __post_init__(self):
        for name in ("eps_pos", "eps_ang", "eps_clear", "eps_axis"):
            v = getattr(self, name)
            if not v > 0:
                raise MalformedSpec(f"tolerance {name} must be strictly positive, got {v}")
        if self.eps_pos > 0.1:
            raise MalformedSpec(f"eps_pos {self.eps_pos} exceeds 0.1 m sanity bound")
        if self.eps_ang > 45.0:
            raise MalformedSpec(f"eps_ang {self.eps_ang} exceeds 45 deg sanity bound")

    def to_json(self) -> dict:
        return {
            "eps_pos": self.eps_pos,
            "eps_ang": self.eps_ang,
            "eps_clear": self.eps_clear,
            "eps_axis": self.eps_axis,
        }

    @staticmethod
    def from_json(doc: dict) -> "ToleranceSet":
        return ToleranceSet(**{k: float(v) for k, v in doc.items()})


@dataclass(frozen=True)
class SkillSpec:
    skill_id: str
    preconditions: Conjunction
    postconditions: Conjunction
    constraints: Conjunction
    tolerances: ToleranceSet = field(default_factory=ToleranceSet)
    required_annotations: frozenset[str] = frozenset()
    instruction_template: str = ""
    # numeric slots filled at binding time, e.g. target angles or distances
    numeric_slots: tuple[str, ...] = ()

    def __post_init__(self):
        bound_in_p = set()
        for a in self.preconditions:
            bound_in_p |= a.free_variables()
        slot_vars = bound_in_p | {"?o", "?part", "?ref", "?dir", "?axis", "?state"}
        for a in self.postconditions + self.constraints:
            loose = a.free_variables() - slot_vars
            if loose:
                raise MalformedSpec(
                    f"{self.skill_id}: variables {sorted(loose)} in postconditions/"
                    "constraints are not bound by preconditions or binding slots"
                )
        unknown = self.required_annotations - ANNOTATION_KINDS
        if unknown:
            raise MalformedSpec(f"{self.skill_id}: unknown annotation kinds {sorted(unknown)}")

    def to_json(self) -> dict:
        return {
            "skill_id": self.skill_id,
            "p": conjunction_to_json(self.preconditions),
            "q": conjunction_to_json(self.postconditions),
            "c": conjunction_to_json(self.constraints),
            "tolerances": self.tolerances.to_json(),
            "required_annotations": sorted(self.required_annotations),
            "instruction_template": self.instruction_template,
            "numeric_slots": list(self.numeric_slots),
        }

    @staticmethod
    def from_json(doc: dict) -> "SkillSpec":
        return SkillSpec(
            skill_id=doc["skill_id"],
            preconditions=conjunction_from_json(doc["p"]),
            postconditions=conjunction_from_json(doc["q"]),
            constraints=conjunction_from_json(doc["c"]),
            tolerances=ToleranceSet.from_json(doc["tolerances"]),
            required_annotations=frozenset(doc.get("required_annotations", [])),
            instruction_template=doc.get("instruction_template", ""),
            numeric_slots=tuple(doc.get("numeric_slots", ())),
        )


def _tol() -> ToleranceSet:
    return ToleranceSet()


def builtin_vocabulary() -> list[SkillSpec]:
    """The ten built-in atomic skills, in stable order.

    Numeric parameters that depend on the bound task (target angle, travel
    distance, insertion depth) appear as defaults here and are re-instantiated
    at binding time via `numeric_slots`.
    """
    t = _tol()
    e_pos, e_ang, e_axis, e_clear = t.eps_pos, t.eps_ang, t.eps_axis, t.eps_clear
    skills = [
        SkillSpec(
            "GraspPart",
            preconditions=(atom("reachable", "?o"),),
            postconditions=(
                atom("in-hand", "?o"),
                atom("grasp-stable", "?o"),
                atom("contact-at", "?o", "?part"),
            ),
            constraints=(atom("contact-at", "?o", "?part"),),
            tolerances=t,
            required_annotations=frozenset({PART_REGION, GRASP_POSE}),
            instruction_template="grasp the {part} of the {o}",
        ),
        SkillSpec(
            "PressPart",
            preconditions=(atom("reachable", "?o"),),
            postconditions=(atom("actuated", "?o", "?part"),),
            constraints=(atom("contact-at", "?o", "?part"),),
            tolerances=t,
            required_annotations=frozenset({PART_REGION, ACTUATION_AXIS}),
            instruction_template="press the {part} of the {o}",
        ),
        SkillSpec(
            "TogglePart",
            preconditions=(atom("reachable", "?o"),),
            postconditions=(atom("state-of", "?o", "?part", "?state"),),
            constraints=(atom("contact-at", "?o", "?part"),),
            tolerances=t,
            required_annotations=frozenset({PART_REGION, ACTUATION_AXIS}),
            instruction_template="toggle the {part} of the {o} to the {state} position",
        ),
        SkillSpec(
            "RotateAlong",
            preconditions=(atom("in-hand", "?o"),),
            postconditions=(atom("rotated-by", "?o", "?axis", params=(90.0, e_axis)),),
            constraints=(atom("axis-compliant", "?o", "?axis", params=(e_axis,)),),
            tolerances=t,
            required_annotations=frozenset({PART_REGION, GRASP_POSE, ROTATION_AXIS}),
            instruction_template="rotate the {o} {rotation_word} by {angle:g} degrees",
            numeric_slots=("angle",),
        ),
        SkillSpec(
            "SlideAlong",
            preconditions=(atom("in-hand", "?o"),),
            postconditions=(atom("displaced-along", "?o", "?dir", params=(0.10, 45.0)),),
            constraints=(atom("on-path", "?o", "?dir", params=(e_clear,)),),
            tolerances=t,
            required_annotations=frozenset({PART_REGION, GRASP_POSE, SLIDING_DIRECTION}),
            instruction_template="slide the {o} along its rail",
            numeric_slots=("dist",),
        ),
        SkillSpec(
            "OpenHinge",
            preconditions=(atom("in-hand", "?o"),),
            postconditions=(atom("hinge-open", "?o", "?part", params=(DEFAULT_HINGE_MIN_ANGLE,)),),
            constraints=(atom("grasp-stable", "?o"),),
            tolerances=t,
            required_annotations=frozenset({PART_REGION, GRASP_POSE, HINGE_AXIS}),
            instruction_template="open the {part} of the {o}",
            numeric_slots=("min_angle",),
        ),
        SkillSpec(
            "Align",
            preconditions=(atom("in-hand", "?o"),),
            postconditions=(
                atom("aligned", "?o", "?ref", params=(e_pos, e_ang)),
                atom("in-hand", "?o"),
            ),
            constraints=(atom("grasp-stable", "?o"),),
            tolerances=t,
            required_annotations=frozenset(),
            instruction_template="align the {o} with the {ref}",
        ),
        SkillSpec(
            "Insert",
            preconditions=(
                atom("in-hand", "?o"),
                atom("aligned", "?o", "?ref", params=(e_pos, e_ang)),
            ),
            postconditions=(atom("inserted", "?o", "?ref", params=(0.03, DEFAULT_INSERT_DEPTH_TOL)),),
            constraints=(atom("clear-of", "?o", "?ref", params=(e_clear,)),),
            tolerances=t,
            required_annotations=frozenset(),
            instruction_template="insert the {o} into the {ref}",
            numeric_slots=("depth",),
        ),
        SkillSpec(
            "MoveTo",
            preconditions=(atom("in-hand", "?o"),),
            postconditions=(atom("displaced-along", "?o", "?dir", params=(0.10, 45.0)),),
            constraints=(atom("grasp-stable", "?o"),),
            tolerances=t,
            required_annotations=frozenset(),
            instruction_template="move the {o} to the {dir}",
            numeric_slots=("dist",),
        ),
        SkillSpec(
            "Flip",
            preconditions=(atom("in-hand", "?o"),),
            postconditions=(atom("rotated-by", "?o", "?axis", params=(180.0, e_ang)),),
            constraints=(atom("grasp-stable", "?o"),),
            tolerances=t,
            required_annotations=frozenset({GRASP_POSE}),
            instruction_template="flip the {o} upside down",
            numeric_slots=("angle",),
        ),
    ]
    return skills


BUILTIN_SKILL_IDS = tuple(s.skill_id for s in builtin_vocabulary())


class SkillRegistry:
    """Skill specs keyed by id; immutable entries, setup-phase registration."""

    def __init__(self, specs: list[SkillSpec] | None = None):
        self._specs: dict[str, SkillSpec] = {}
        for spec in specs if specs is not None else builtin_vocabulary():
            self.register(spec)

    def register(self, spec: SkillSpec) -> SkillSpec:
        if spec.skill_id in self._specs:
            raise DuplicateSkill(spec.skill_id)
        self._specs[spec.skill_id] = spec
        return spec

    def get(self, skill_id: str) -> SkillSpec:
        try:
            return self._specs[skill_id]
        except KeyError:
            raise MalformedSpec(f"unknown skill {skill_id!r}") from None

    def __contains__(self, skill_id: str) -> bool:
        return skill_id in self._specs

    def __iter__(self):
        return iter(self._specs.values())

    def __len__(self) -> int:
        return len(self._specs)

    @property
    def skill_ids(self) -> list[str]:
        return list(self._specs.keys())


def registry_to_json(registry: SkillRegistry) -> str:
    return json.dumps([s.to_json() for s in registry], indent=2, sort_keys=True)


def registry_from_json(text: str) -> SkillRegistry:
    return SkillRegistry([SkillSpec.from_json(d) for d in json.loads(text)])

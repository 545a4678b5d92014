"""Skill composition graph and bound task construction.

A task is a bound subgraph of the admissible composition graph: an ordered
stage list with edge types, entity bindings, instantiated tolerances and an
instruction rendered from the skill templates. The per-stage acceptance
criteria are exactly the bound stage postconditions; the spec triple is both
the compositional constraint and the evaluation contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .assets import AssetLibrary, supports_skill
from .errors import (
    IncompatibleEdge,
    MalformedSpec,
    NoSubstitutableSlot,
    RegionInfeasible,
    UnboundSlot,
    UnsupportedSkill,
)
from .predicates import Atom, Conjunction, conjunction_from_json, conjunction_to_json, implies
from .skills import GRASP_POSE, SkillRegistry, SkillSpec, ToleranceSet

SEQUENTIAL = "sequential"
CONDITIONAL = "conditional"
PARALLEL = "parallel"

# Named workspace directions (world frame: x right, y forward, z up).
DIRECTIONS = {
    "left": (-1.0, 0.0, 0.0),
    "right": (1.0, 0.0, 0.0),
    "forward": (0.0, 1.0, 0.0),
    "back": (0.0, -1.0, 0.0),
    "up": (0.0, 0.0, 1.0),
    "down": (0.0, 0.0, -1.0),
}
REVERSE_DIRECTION = {
    "left": "right",
    "right": "left",
    "forward": "back",
    "back": "forward",
    "up": "down",
    "down": "up",
}

# Axis binding symbols: a world axis name, or "constraint" meaning the bound
# object's pose-coupled constraint axis expressed in the world frame.
AXIS_NAMES = {"x", "y", "z", "-x", "-y", "-z", "constraint"}

_SLOT_VARS = {"o": "?o", "part": "?part", "ref": "?ref", "dir": "?dir", "axis": "?axis", "state": "?state"}


def _slot_map(bindings: dict[str, str]) -> dict[str, str]:
    return {_SLOT_VARS[k]: v for k, v in bindings.items() if k in _SLOT_VARS}


def bind_atoms(
    atoms: Conjunction,
    bindings: dict[str, str],
    tolerances: ToleranceSet,
    numerics: dict[str, float],
) -> Conjunction:
    """Ground a skill conjunction: substitute entity slots, re-instantiate
    tolerance params from the stage tolerance set, apply numeric overrides."""
    sub = _slot_map(bindings)
    tol_fields = tolerances.to_json()
    out = []
    for a in atoms:
        grounded = a.substitute(sub)
        if grounded.free_variables():
            raise UnboundSlot(
                f"{a.name}: unbound slots {sorted(grounded.free_variables())} "
                f"(bindings: {sorted(bindings)})"
            )
        if grounded.params:
            new_params = []
            for spec, value in zip(grounded.definition.params, grounded.params):
                if spec.name in numerics:
                    new_params.append(float(numerics[spec.name]))
                elif spec.name in tol_fields:
                    new_params.append(float(tol_fields[spec.name]))
                else:
                    new_params.append(float(value))
            grounded = Atom(grounded.name, grounded.args, tuple(new_params))
        out.append(grounded)
    return tuple(out)


@dataclass(frozen=True)
class Stage:
    skill_id: str
    bindings: dict[str, str]
    tolerances: ToleranceSet
    numerics: dict[str, float] = field(default_factory=dict)
    clause: int = 0  # instruction sub-clause this stage belongs to
    acceptance: Conjunction = ()
    constraints: Conjunction = ()

    def to_json(self) -> dict:
        return {
            "skill_id": self.skill_id,
            "bindings": dict(self.bindings),
            "tolerances": self.tolerances.to_json(),
            "numerics": dict(self.numerics),
            "clause": self.clause,
            "acceptance": conjunction_to_json(self.acceptance),
            "constraints": conjunction_to_json(self.constraints),
        }

    @staticmethod
    def from_json(doc: dict) -> "Stage":
        return Stage(
            skill_id=doc["skill_id"],
            bindings=dict(doc["bindings"]),
            tolerances=ToleranceSet.from_json(doc["tolerances"]),
            numerics={k: float(v) for k, v in doc.get("numerics", {}).items()},
            clause=int(doc.get("clause", 0)),
            acceptance=conjunction_from_json(doc["acceptance"]),
            constraints=conjunction_from_json(doc["constraints"]),
        )


@dataclass(frozen=True)
class Edge:
    kind: str
    src: int
    dst: int | None = None
    # conditional: ordered (branch predicate, target stage); first match wins
    branches: tuple[tuple[Atom, int], ...] = ()
    else_dst: int | None = None
    # parallel: constraint conjunction monitored throughout the host (src) stage
    constraint: Conjunction = ()

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "src": self.src,
            "dst": self.dst,
            "branches": [[a.to_json(), t] for a, t in self.branches],
            "else_dst": self.else_dst,
            "constraint": conjunction_to_json(self.constraint),
        }

    @staticmethod
    def from_json(doc: dict) -> "Edge":
        return Edge(
            kind=doc["kind"],
            src=doc["src"],
            dst=doc.get("dst"),
            branches=tuple((Atom.from_json(a), t) for a, t in doc.get("branches", [])),
            else_dst=doc.get("else_dst"),
            constraint=conjunction_from_json(doc.get("constraint", [])),
        )


@dataclass(frozen=True)
class Placement:
    object_id: str
    position: tuple[float, float, float]
    yaw_deg: float = 0.0
    anchored: bool = False
    joints: dict = field(default_factory=dict)  # constraint kind -> initial value
    attributes: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "object_id": self.object_id,
            "position": list(self.position),
            "yaw_deg": self.yaw_deg,
            "anchored": self.anchored,
            "joints": dict(self.joints),
            "attributes": dict(self.attributes),
        }

    @staticmethod
    def from_json(doc: dict) -> "Placement":
        return Placement(
            object_id=doc["object_id"],
            position=tuple(doc["position"]),
            yaw_deg=float(doc.get("yaw_deg", 0.0)),
            anchored=bool(doc.get("anchored", False)),
            joints={k: float(v) for k, v in doc.get("joints", {}).items()},
            attributes=dict(doc.get("attributes", {})),
        )


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    stages: tuple[Stage, ...]
    edges: tuple[Edge, ...]
    instruction: str
    scene_init: tuple[Placement, ...]
    graph_seq: str = ""

    @property
    def stage_count(self) -> int:
        return len(self.stages)

    def placement(self, object_id: str) -> Placement | None:
        for p in self.scene_init:
            if p.object_id == object_id:
                return p
        return None

    def parallel_constraints(self, stage_index: int) -> Conjunction:
        atoms: list[Atom] = []
        for e in self.edges:
            if e.kind == PARALLEL and e.src == stage_index:
                atoms.extend(e.constraint)
        return tuple(atoms)

    def conditional_edge_from(self, stage_index: int) -> Edge | None:
        for e in self.edges:
            if e.kind == CONDITIONAL and e.src == stage_index:
                return e
        return None

    def next_sequential(self, stage_index: int) -> int | None:
        for e in self.edges:
            if e.kind == SEQUENTIAL and e.src == stage_index:
                return e.dst
        return None

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "stages": [s.to_json() for s in self.stages],
            "edges": [e.to_json() for e in self.edges],
            "instruction": self.instruction,
            "scene_init": [p.to_json() for p in self.scene_init],
            "graph_seq": self.graph_seq,
        }

    @staticmethod
    def from_json(doc: dict) -> "TaskSpec":
        return TaskSpec(
            task_id=doc["task_id"],
            stages=tuple(Stage.from_json(d) for d in doc["stages"]),
            edges=tuple(Edge.from_json(d) for d in doc["edges"]),
            instruction=doc["instruction"],
            scene_init=tuple(Placement.from_json(d) for d in doc["scene_init"]),
            graph_seq=doc.get("graph_seq", ""),
        )


def save_task(task: TaskSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(task.to_json(), indent=2, sort_keys=True) + "\n")


def load_task(path: str | Path) -> TaskSpec:
    return TaskSpec.from_json(json.loads(Path(path).read_text()))


# --- composition graph ---

class CompositionGraph:
    def __init__(self, edges: set[tuple[str, str]], nodes: list[str]):
        self.nodes = sorted(nodes)
        self.edges = set(edges)

    def successors(self, skill_id: str) -> list[str]:
        return sorted(dst for src, dst in self.edges if src == skill_id)

    def has_edge(self, src: str, dst: str) -> bool:
        return (src, dst) in self.edges

    def __eq__(self, other):
        return isinstance(other, CompositionGraph) and self.edges == other.edges


def derive_composition_graph(vocabulary: list[SkillSpec] | SkillRegistry) -> CompositionGraph:
    """Edge (i, j) iff the postconditions of i imply the preconditions of j
    under some substitution. Order-independent by construction."""
    specs = list(vocabulary)
    edges = set()
    for si in specs:
        for sj in specs:
            ok, _ = implies(si.postconditions, sj.preconditions)
            if ok:
                edges.add((si.skill_id, sj.skill_id))
    return CompositionGraph(edges, [s.skill_id for s in specs])


# --- instruction rendering ---

def render_stage_clause(skill: SkillSpec, bindings: dict[str, str], numerics: dict[str, float]) -> str:
    fields = dict(bindings)
    angle = numerics.get("angle")
    if angle is not None:
        fields["angle"] = abs(angle)
        fields["rotation_word"] = "clockwise" if angle >= 0 else "counterclockwise"
    fields.setdefault("angle", 90.0)
    fields.setdefault("rotation_word", "clockwise")
    try:
        return skill.instruction_template.format(**fields)
    except (KeyError, IndexError) as exc:
        raise UnboundSlot(f"{skill.skill_id}: instruction slot {exc} unbound") from exc


def render_instruction(
    registry: SkillRegistry, stages: list[Stage], template: str | None = None
) -> str:
    if template is not None:
        return template
    clauses = []
    seen_clause: set[int] = set()
    for s in stages:
        if s.clause in seen_clause:
            continue
        seen_clause.add(s.clause)
        clauses.append(render_stage_clause(registry.get(s.skill_id), s.bindings, s.numerics))
    return ", then ".join(clauses)


# --- task instantiation ---

def _check_bindings(skill: SkillSpec, bindings: dict[str, str], library: AssetLibrary) -> None:
    obj = bindings.get("o")
    if obj is None:
        raise UnboundSlot(f"{skill.skill_id}: 'o' binding required")
    if obj not in library:
        raise UnboundSlot(f"{skill.skill_id}: object {obj!r} not in library")
    asset = library.get(obj)
    part = bindings.get("part")
    if part is not None and asset.part(part) is None:
        raise UnboundSlot(f"{skill.skill_id}: part {part!r} not on {obj!r}")
    ref = bindings.get("ref")
    if ref is not None and ref not in library:
        raise UnboundSlot(f"{skill.skill_id}: reference {ref!r} not in library")
    d = bindings.get("dir")
    if d is not None and d not in DIRECTIONS:
        raise UnboundSlot(f"{skill.skill_id}: unknown direction {d!r}")
    ax = bindings.get("axis")
    if ax is not None and ax not in AXIS_NAMES:
        raise UnboundSlot(f"{skill.skill_id}: unknown axis {ax!r}")


def instantiate_task(
    subgraph: list[dict],
    edges: list[Edge] | None,
    library: AssetLibrary,
    registry: SkillRegistry,
    task_id: str,
    scene_init: list[Placement],
    tolerances: ToleranceSet | None = None,
    instruction: str | None = None,
) -> TaskSpec:
    """Bind a skill subgraph into a self-contained task spec.

    `subgraph` is a list of stage descriptors: {"skill": id, "bindings": {...},
    "numerics": {...}, "clause": int}. `edges` defaults to a sequential chain.
    Sequential edges must satisfy the postcondition-precondition implication
    under the stage bindings.
    """
    stages: list[Stage] = []
    for idx, desc in enumerate(subgraph):
        skill = registry.get(desc["skill"])
        bindings = dict(desc.get("bindings", {}))
        numerics = {k: float(v) for k, v in desc.get("numerics", {}).items()}
        _check_bindings(skill, bindings, library)
        asset = library.get(bindings["o"])
        ok, missing = supports_skill(asset, skill)
        if not ok:
            raise UnsupportedSkill(asset.object_id, skill.skill_id, missing)
        tol = tolerances if tolerances is not None else skill.tolerances
        acceptance = bind_atoms(skill.postconditions, bindings, tol, numerics)
        constraints = bind_atoms(skill.constraints, bindings, tol, numerics)
        stages.append(
            Stage(
                skill_id=skill.skill_id,
                bindings=bindings,
                tolerances=tol,
                numerics=numerics,
                clause=int(desc.get("clause", idx)),
                acceptance=acceptance,
                constraints=constraints,
            )
        )

    if edges is None:
        edges = [Edge(SEQUENTIAL, i, i + 1) for i in range(len(stages) - 1)]

    for e in edges:
        if e.kind == SEQUENTIAL:
            src, dst = stages[e.src], stages[e.dst]
            skill_dst = registry.get(dst.skill_id)
            bound_p = bind_atoms(skill_dst.preconditions, dst.bindings, dst.tolerances, dst.numerics)
            ok, _ = implies(src.acceptance, bound_p)
            if not ok:
                raise IncompatibleEdge(
                    f"stage {e.src} ({src.skill_id}) postconditions do not imply "
                    f"stage {e.dst} ({dst.skill_id}) preconditions under the bindings"
                )
        elif e.kind == PARALLEL:
            if not (0 <= e.src < len(stages)):
                raise MalformedSpec(f"parallel edge host {e.src} out of range")
        elif e.kind == CONDITIONAL:
            if not e.branches and e.else_dst is None:
                raise MalformedSpec("conditional edge needs at least one branch")
        else:
            raise MalformedSpec(f"unknown edge kind {e.kind!r}")

    text = render_instruction(registry, stages, instruction)
    return TaskSpec(
        task_id=task_id,
        stages=tuple(stages),
        edges=tuple(edges),
        instruction=text,
        scene_init=tuple(scene_init),
        graph_seq=">".join(s.skill_id for s in stages),
    )


def validate_task(task: TaskSpec, registry: SkillRegistry, library: AssetLibrary) -> None:
    """Re-check a (possibly deserialized) task against its own invariants."""
    for s in task.stages:
        skill = registry.get(s.skill_id)
        _check_bindings(skill, s.bindings, library)
        expected = bind_atoms(skill.postconditions, s.bindings, s.tolerances, s.numerics)
        if expected != s.acceptance:
            raise MalformedSpec(
                f"{task.task_id}: stage acceptance differs from bound postconditions"
            )
    for e in task.edges:
        if e.kind == SEQUENTIAL:
            src, dst = task.stages[e.src], task.stages[e.dst]
            skill_dst = registry.get(dst.skill_id)
            bound_p = bind_atoms(skill_dst.preconditions, dst.bindings, dst.tolerances, dst.numerics)
            ok, _ = implies(src.acceptance, bound_p)
            if not ok:
                raise IncompatibleEdge(f"{task.task_id}: edge {e.src}->{e.dst} incompatible")
    for p in task.scene_init:
        if p.object_id not in library:
            raise MalformedSpec(f"{task.task_id}: scene object {p.object_id!r} not in library")


# --- evaluation distribution and configuration sampling ---

@dataclass(frozen=True)
class RegionSpec:
    pos_min: tuple[float, float, float]
    pos_max: tuple[float, float, float]
    yaw_range: tuple[float, float] = (0.0, 0.0)

    def to_json(self) -> dict:
        return {
            "pos_min": list(self.pos_min),
            "pos_max": list(self.pos_max),
            "yaw_range": list(self.yaw_range),
        }

    @staticmethod
    def from_json(doc: dict) -> "RegionSpec":
        return RegionSpec(
            tuple(doc["pos_min"]), tuple(doc["pos_max"]), tuple(doc.get("yaw_range", (0.0, 0.0)))
        )


@dataclass(frozen=True)
class EvalDistribution:
    task_id: str
    regions: dict[str, RegionSpec]  # object_id -> sampling region
    # captured from the library so sampling is self-contained
    bounding_radii: dict[str, float]
    fixed_positions: dict[str, tuple[float, float, float]]

    def to_json(self) -> dict:
        return {
            "task_id": self.task_id,
            "regions": {k: v.to_json() for k, v in self.regions.items()},
            "bounding_radii": dict(self.bounding_radii),
            "fixed_positions": {k: list(v) for k, v in self.fixed_positions.items()},
        }

    @staticmethod
    def from_json(doc: dict) -> "EvalDistribution":
        return EvalDistribution(
            task_id=doc["task_id"],
            regions={k: RegionSpec.from_json(v) for k, v in doc["regions"].items()},
            bounding_radii={k: float(v) for k, v in doc["bounding_radii"].items()},
            fixed_positions={k: tuple(v) for k, v in doc["fixed_positions"].items()},
        )


@dataclass(frozen=True)
class Configuration:
    config_id: int
    placements: dict[str, dict]  # object_id -> {"position": [...], "yaw_deg": float}

    def to_json(self) -> dict:
        return {"config_id": self.config_id, "placements": self.placements}

    @staticmethod
    def from_json(doc: dict) -> "Configuration":
        return Configuration(int(doc["config_id"]), dict(doc["placements"]))


def make_eval_distribution(
    task: TaskSpec,
    library: AssetLibrary,
    objects: list[str] | None = None,
    pos_halfwidth: float = 0.03,
    yaw_halfwidth: float = 10.0,
) -> EvalDistribution:
    """Default distribution: jitter the primary bound objects around their
    scene_init positions inside a box, other objects stay fixed."""
    if objects is None:
        objects = sorted({s.bindings["o"] for s in task.stages})
    regions = {}
    radii = {}
    fixed = {}
    for p in task.scene_init:
        radii[p.object_id] = library.get(p.object_id).bounding_radius()
        if p.object_id in objects:
            c = np.asarray(p.position)
            lo = c - np.array([pos_halfwidth, pos_halfwidth, 0.0])
            hi = c + np.array([pos_halfwidth, pos_halfwidth, 0.0])
            regions[p.object_id] = RegionSpec(
                tuple(lo), tuple(hi), (p.yaw_deg - yaw_halfwidth, p.yaw_deg + yaw_halfwidth)
            )
        else:
            fixed[p.object_id] = p.position
    return EvalDistribution(task.task_id, regions, radii, fixed)


def _collision_free(positions: dict[str, np.ndarray], radii: dict[str, float]) -> bool:
    ids = sorted(positions)
    for i, a in enumerate(ids):
        for b in ids[i + 1 :]:
            if np.linalg.norm(positions[a] - positions[b]) < 0.8 * (radii[a] + radii[b]):
                return False
    return True


def sample_configurations(
    dist: EvalDistribution, count: int, seed: int, max_attempts: int = 1000
) -> list[Configuration]:
    """Draw `count` iid collision-free configurations; deterministic in seed."""
    if count < 0:
        raise RegionInfeasible("count must be >= 0")
    rng = np.random.default_rng(seed)
    configs: list[Configuration] = []
    for idx in range(count):
        ok = False
        for _ in range(max_attempts):
            positions = {k: np.asarray(v, dtype=float) for k, v in dist.fixed_positions.items()}
            yaws = {}
            for oid in sorted(dist.regions):
                r = dist.regions[oid]
                lo, hi = np.asarray(r.pos_min), np.asarray(r.pos_max)
                positions[oid] = lo + rng.random(3) * (hi - lo)
                ylo, yhi = r.yaw_range
                yaws[oid] = float(ylo + rng.random() * (yhi - ylo))
            if _collision_free(positions, dist.bounding_radii):
                ok = True
                break
        if not ok:
            raise RegionInfeasible(
                f"no collision-free configuration after {max_attempts} attempts"
            )
        placements = {
            oid: {"position": [float(x) for x in positions[oid]], "yaw_deg": yaws[oid]}
            for oid in sorted(dist.regions)
        }
        configs.append(Configuration(idx, placements))
    return configs


def apply_configuration(task: TaskSpec, config: Configuration | None) -> tuple[Placement, ...]:
    if config is None:
        return task.scene_init
    out = []
    for p in task.scene_init:
        override = config.placements.get(p.object_id)
        if override:
            out.append(
                replace(
                    p,
                    position=tuple(override["position"]),
                    yaw_deg=float(override.get("yaw_deg", p.yaw_deg)),
                )
            )
        else:
            out.append(p)
    return tuple(out)


# --- semantic interventions ---

PART_SUBSTITUTION = "part_substitution"
DIRECTIONAL_REVERSAL = "directional_reversal"
PROPERTY_ALTERATION = "property_alteration"

_COLOR_CYCLE = {"green": "red", "red": "blue", "blue": "green", "on": "off", "off": "on"}


def _reinstantiate(
    task: TaskSpec,
    registry: SkillRegistry,
    library: AssetLibrary,
    new_stage_descs: list[dict],
    task_id: str,
    instruction_template: str | None,
) -> TaskSpec:
    rebound = instantiate_task(
        new_stage_descs,
        list(task.edges),
        library,
        registry,
        task_id=task_id,
        scene_init=list(task.scene_init),
        instruction=instruction_template,
    )
    return rebound


def semantic_intervention(
    task: TaskSpec,
    kind: str,
    seed: int,
    registry: SkillRegistry,
    library: AssetLibrary,
) -> tuple[TaskSpec, TaskSpec]:
    """Modify one attribute-level element of the instruction, scene untouched.

    Returns (perturbed, modified): both carry the modified instruction; the
    perturbed spec keeps the ORIGINAL acceptance criteria (for scoring how
    much the change disrupts the learned behavior), the modified spec rebinds
    acceptance to the new target (for scoring execution of the new command).
    """
    rng = np.random.default_rng(seed)
    descs = [
        {
            "skill": s.skill_id,
            "bindings": dict(s.bindings),
            "numerics": dict(s.numerics),
            "clause": s.clause,
        }
        for s in task.stages
    ]

    target_idx = None
    if kind == PART_SUBSTITUTION:
        for i, s in enumerate(task.stages):
            part = s.bindings.get("part")
            if part is None:
                continue
            asset = library.get(s.bindings["o"])
            needs_grasp = GRASP_POSE in registry.get(s.skill_id).required_annotations
            options = [
                p.part_id
                for p in asset.parts
                if p.part_id != part and (not needs_grasp or asset.grasp_poses_for(p.part_id))
            ]
            if options:
                target_idx = i
                new_part = options[int(rng.integers(len(options)))]
                descs[i]["bindings"]["part"] = new_part
                break
        if target_idx is None:
            raise NoSubstitutableSlot(f"{task.task_id}: no stage with >= 2 usable parts")
    elif kind == DIRECTIONAL_REVERSAL:
        for i, s in enumerate(task.stages):
            d = s.bindings.get("dir")
            if d in REVERSE_DIRECTION:
                target_idx = i
                descs[i]["bindings"]["dir"] = REVERSE_DIRECTION[d]
                break
        if target_idx is None:
            raise NoSubstitutableSlot(f"{task.task_id}: no directional slot to reverse")
    elif kind == PROPERTY_ALTERATION:
        for i, s in enumerate(task.stages):
            st = s.bindings.get("state")
            if st in _COLOR_CYCLE:
                target_idx = i
                descs[i]["bindings"]["state"] = _COLOR_CYCLE[st]
                break
        if target_idx is None:
            raise NoSubstitutableSlot(f"{task.task_id}: no alterable property slot")
    else:
        raise NoSubstitutableSlot(f"unknown intervention kind {kind!r}")

    modified = _reinstantiate(
        task, registry, library, descs, f"{task.task_id}#mod_{kind}", None
    )
    perturbed = TaskSpec(
        task_id=f"{task.task_id}#pert_{kind}",
        stages=task.stages,  # original acceptance criteria
        edges=task.edges,
        instruction=modified.instruction,
        scene_init=task.scene_init,
        graph_seq=task.graph_seq,
    )
    return perturbed, modified

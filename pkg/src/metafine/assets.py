"""Annotated object library: parts, grasp poses, manipulation constraints.

Assets are unions of geometric primitives (boxes, cylinders, spheres) rather
than meshes; the engine only ever checks regions, axes, and distances.
Approach vectors point from free space toward the part surface.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import geometry as geo
from .errors import DuplicateObjectId, IoFailure, SchemaViolation, UnderconstrainedGeometry
from .skills import (
    ACTUATION_AXIS,
    GRASP_POSE,
    HINGE_AXIS,
    PART_REGION,
    ROTATION_AXIS,
    SLIDING_DIRECTION,
    SkillSpec,
)

PART_KINDS = {"handle", "cap", "body", "lid", "button", "switch", "face", "custom"}
CONSTRAINT_KINDS = {ROTATION_AXIS, HINGE_AXIS, SLIDING_DIRECTION, ACTUATION_AXIS}
# constraint kinds whose joint value moves the object pose
POSE_COUPLED_KINDS = {ROTATION_AXIS, HINGE_AXIS, SLIDING_DIRECTION}

_UNIT_TOL = 1e-9


def _vec(v) -> np.ndarray:
    return np.asarray(v, dtype=float)


@dataclass(frozen=True)
class ShapePrimitive:
    kind: str  # box | cylinder | sphere
    center: tuple[float, float, float]
    extents: tuple[float, float, float] | None = None  # box full side lengths
    radius: float | None = None
    height: float | None = None  # cylinder, along local z

    def bounding_radius(self) -> float:
        c = float(np.linalg.norm(self.center))
        if self.kind == "box":
            return c + float(np.linalg.norm(_vec(self.extents) / 2.0))
        if self.kind == "sphere":
            return c + float(self.radius)
        if self.kind == "cylinder":
            return c + math.hypot(float(self.radius), float(self.height) / 2.0)
        raise ValueError(self.kind)

    def box_extents(self) -> np.ndarray:
        """Axis-aligned bounding extents of the primitive, full side lengths."""
        if self.kind == "box":
            return _vec(self.extents)
        if self.kind == "sphere":
            return np.full(3, 2.0 * self.radius)
        return np.array([2.0 * self.radius, 2.0 * self.radius, float(self.height)])

    def to_json(self) -> dict:
        doc = {"kind": self.kind, "center": list(self.center)}
        if self.extents is not None:
            doc["extents"] = list(self.extents)
        if self.radius is not None:
            doc["radius"] = self.radius
        if self.height is not None:
            doc["height"] = self.height
        return doc

    @staticmethod
    def from_json(doc: dict) -> "ShapePrimitive":
        return ShapePrimitive(
            kind=doc["kind"],
            center=tuple(doc["center"]),
            extents=tuple(doc["extents"]) if "extents" in doc else None,
            radius=doc.get("radius"),
            height=doc.get("height"),
        )


@dataclass(frozen=True)
class PartAnnotation:
    part_id: str
    region_kind: str  # box | sphere
    center: tuple[float, float, float]
    extents: tuple[float, float, float] | None = None
    radius: float | None = None
    kind: str = "custom"
    provenance: str = "manual"

    def contains(self, point, margin: float = 0.0) -> bool:
        if self.region_kind == "box":
            return geo.box_contains(self.center, self.extents, point, margin)
        return geo.sphere_contains(self.center, self.radius, point, margin)

    def to_json(self) -> dict:
        doc = {
            "part_id": self.part_id,
            "region_kind": self.region_kind,
            "center": list(self.center),
            "kind": self.kind,
            "provenance": self.provenance,
        }
        if self.extents is not None:
            doc["extents"] = list(self.extents)
        if self.radius is not None:
            doc["radius"] = self.radius
        return doc

    @staticmethod
    def from_json(doc: dict) -> "PartAnnotation":
        return PartAnnotation(
            part_id=doc["part_id"],
            region_kind=doc["region_kind"],
            center=tuple(doc["center"]),
            extents=tuple(doc["extents"]) if "extents" in doc else None,
            radius=doc.get("radius"),
            kind=doc.get("kind", "custom"),
            provenance=doc.get("provenance", "manual"),
        )


@dataclass(frozen=True)
class GraspPose:
    part_id: str
    position: tuple[float, float, float]
    orientation: tuple[float, float, float, float] = (1.0, 0.0, 0.0, 0.0)
    approach: tuple[float, float, float] = (0.0, 0.0, -1.0)
    provenance: str = "manual"

    def to_json(self) -> dict:
        return {
            "part_id": self.part_id,
            "position": list(self.position),
            "orientation": list(self.orientation),
            "approach": list(self.approach),
            "provenance": self.provenance,
        }

    @staticmethod
    def from_json(doc: dict) -> "GraspPose":
        return GraspPose(
            part_id=doc["part_id"],
            position=tuple(doc["position"]),
            orientation=tuple(doc.get("orientation", (1.0, 0.0, 0.0, 0.0))),
            approach=tuple(doc.get("approach", (0.0, 0.0, -1.0))),
            provenance=doc.get("provenance", "manual"),
        )


@dataclass(frozen=True)
class ManipulationConstraint:
    kind: str  # rotation_axis | hinge_axis | sliding_direction | actuation_axis
    axis: tuple[float, float, float]
    anchor: tuple[float, float, float] = (0.0, 0.0, 0.0)
    range: tuple[float, float] = (0.0, 90.0)  # deg for revolute, m for prismatic
    part_id: str | None = None  # None = whole object
    prismatic: bool = False
    provenance: str = "manual"

    @property
    def span(self) -> float:
        return self.range[1] - self.range[0]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "axis": list(self.axis),
            "anchor": list(self.anchor),
            "range": list(self.range),
            "part_id": self.part_id,
            "prismatic": self.prismatic,
            "provenance": self.provenance,
        }

    @staticmethod
    def from_json(doc: dict) -> "ManipulationConstraint":
        return ManipulationConstraint(
            kind=doc["kind"],
            axis=tuple(doc["axis"]),
            anchor=tuple(doc.get("anchor", (0.0, 0.0, 0.0))),
            range=tuple(doc.get("range", (0.0, 90.0))),
            part_id=doc.get("part_id"),
            prismatic=doc.get("prismatic", False),
            provenance=doc.get("provenance", "manual"),
        )


@dataclass(frozen=True)
class AssetRecord:
    object_id: str
    shape: tuple[ShapePrimitive, ...]
    parts: tuple[PartAnnotation, ...] = ()
    grasp_poses: tuple[GraspPose, ...] = ()
    constraints: tuple[ManipulationConstraint, ...] = ()
    attributes: dict = field(default_factory=dict)  # inert metadata (material, color)

    def part(self, part_id: str) -> PartAnnotation | None:
        for p in self.parts:
            if p.part_id == part_id:
                return p
        return None

    def grasp_poses_for(self, part_id: str) -> list[GraspPose]:
        return [g for g in self.grasp_poses if g.part_id == part_id]

    def constraint_of_kind(self, kind: str) -> ManipulationConstraint | None:
        for c in self.constraints:
            if c.kind == kind:
                return c
        return None

    def constraint_for_part(self, part_id: str) -> ManipulationConstraint | None:
        for c in self.constraints:
            if c.part_id == part_id:
                return c
        return None

    def pose_coupled_constraint(self) -> ManipulationConstraint | None:
        for c in self.constraints:
            if c.kind in POSE_COUPLED_KINDS:
                return c
        return None

    def annotation_kinds(self) -> set[str]:
        kinds = set()
        if self.parts:
            kinds.add(PART_REGION)
        if self.grasp_poses:
            kinds.add(GRASP_POSE)
        for c in self.constraints:
            kinds.add(c.kind)
        return kinds

    def bounding_radius(self) -> float:
        return max(p.bounding_radius() for p in self.shape)

    def to_json(self) -> dict:
        return {
            "object_id": self.object_id,
            "shape": [s.to_json() for s in self.shape],
            "parts": [p.to_json() for p in self.parts],
            "grasp_poses": [g.to_json() for g in self.grasp_poses],
            "constraints": [c.to_json() for c in self.constraints],
            "attributes": dict(self.attributes),
        }

    @staticmethod
    def from_json(doc: dict) -> "AssetRecord":
        return AssetRecord(
            object_id=doc["object_id"],
            shape=tuple(ShapePrimitive.from_json(d) for d in doc["shape"]),
            parts=tuple(PartAnnotation.from_json(d) for d in doc.get("parts", [])),
            grasp_poses=tuple(GraspPose.from_json(d) for d in doc.get("grasp_poses", [])),
            constraints=tuple(
                ManipulationConstraint.from_json(d) for d in doc.get("constraints", [])
            ),
            attributes=dict(doc.get("attributes", {})),
        )


def validate_asset(asset: AssetRecord) -> None:
    """Check record invariants; raises SchemaViolation naming the field."""
    oid = asset.object_id
    if not asset.shape:
        raise SchemaViolation(oid, "shape", "at least one shape primitive required")
    for i, prim in enumerate(asset.shape):
        if prim.kind not in {"box", "cylinder", "sphere"}:
            raise SchemaViolation(oid, f"shape[{i}].kind", f"unknown kind {prim.kind!r}")
        if prim.kind == "box":
            if prim.extents is None or any(e <= 0 for e in prim.extents):
                raise SchemaViolation(oid, f"shape[{i}].extents", "must be strictly positive")
        elif prim.radius is None or prim.radius <= 0:
            raise SchemaViolation(oid, f"shape[{i}].radius", "must be strictly positive")
        if prim.kind == "cylinder" and (prim.height is None or prim.height <= 0):
            raise SchemaViolation(oid, f"shape[{i}].height", "must be strictly positive")

    seen = set()
    for p in asset.parts:
        if p.part_id in seen:
            raise SchemaViolation(oid, f"parts.{p.part_id}", "duplicate part_id")
        seen.add(p.part_id)
        if p.region_kind == "box":
            if p.extents is None or any(e <= 0 for e in p.extents):
                raise SchemaViolation(oid, f"parts.{p.part_id}.extents", "must be strictly positive")
        elif p.region_kind == "sphere":
            if p.radius is None or p.radius <= 0:
                raise SchemaViolation(oid, f"parts.{p.part_id}.radius", "must be strictly positive")
        else:
            raise SchemaViolation(oid, f"parts.{p.part_id}.region_kind", f"unknown {p.region_kind!r}")
        if p.kind not in PART_KINDS:
            raise SchemaViolation(oid, f"parts.{p.part_id}.kind", f"unknown {p.kind!r}")

    for j, g in enumerate(asset.grasp_poses):
        if g.part_id not in seen:
            raise SchemaViolation(oid, f"grasp_poses[{j}].part_id", f"unknown part {g.part_id!r}")
        if abs(float(np.linalg.norm(g.orientation)) - 1.0) > _UNIT_TOL:
            raise SchemaViolation(oid, f"grasp_poses[{j}].orientation", "quaternion must be unit norm")
        if abs(float(np.linalg.norm(g.approach)) - 1.0) > _UNIT_TOL:
            raise SchemaViolation(oid, f"grasp_poses[{j}].approach", "must be unit norm")

    for j, c in enumerate(asset.constraints):
        if c.kind not in CONSTRAINT_KINDS:
            raise SchemaViolation(oid, f"constraints[{j}].kind", f"unknown {c.kind!r}")
        if abs(float(np.linalg.norm(c.axis)) - 1.0) > 1e-6:
            raise SchemaViolation(oid, f"constraints[{j}].axis", "must be unit norm")
        if not c.range[0] < c.range[1]:
            raise SchemaViolation(oid, f"constraints[{j}].range", "min must be < max")
        if c.part_id is not None and c.part_id not in seen:
            raise SchemaViolation(oid, f"constraints[{j}].part_id", f"unknown part {c.part_id!r}")


class AssetLibrary:
    """Validated records indexed by object_id; immutable after load."""

    def __init__(self, records: list[AssetRecord] = ()):
        self._records: dict[str, AssetRecord] = {}
        for r in records:
            self.add(r)

    def add(self, record: AssetRecord) -> None:
        validate_asset(record)
        if record.object_id in self._records:
            raise DuplicateObjectId(record.object_id)
        self._records[record.object_id] = record

    def get(self, object_id: str) -> AssetRecord:
        try:
            return self._records[object_id]
        except KeyError:
            raise SchemaViolation(object_id, "object_id", "not in library") from None

    def __contains__(self, object_id: str) -> bool:
        return object_id in self._records

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self):
        for oid in sorted(self._records):
            yield self._records[oid]

    @property
    def object_ids(self) -> list[str]:
        return sorted(self._records)


def load_library(path: str | Path) -> AssetLibrary:
    """Load assets from a directory of .json files or a single array file."""
    path = Path(path)
    if not path.exists():
        raise IoFailure(f"{path} does not exist")
    docs: list[dict] = []
    try:
        if path.is_dir():
            for f in sorted(path.glob("*.json")):
                loaded = json.loads(f.read_text())
                docs.extend(loaded if isinstance(loaded, list) else [loaded])
        else:
            loaded = json.loads(path.read_text())
            docs = loaded if isinstance(loaded, list) else [loaded]
    except (OSError, json.JSONDecodeError) as exc:
        raise IoFailure(str(exc)) from exc

    library = AssetLibrary()
    for doc in docs:
        try:
            record = AssetRecord.from_json(doc)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolation(doc.get("object_id", "<unknown>"), "record", str(exc)) from exc
        library.add(record)
    return library


def save_library(library: AssetLibrary, path: str | Path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for record in library:
        out = path / f"{record.object_id}.json"
        out.write_text(json.dumps(record.to_json(), indent=2, sort_keys=True) + "\n")


def supports_skill(asset: AssetRecord, skill: SkillSpec) -> tuple[bool, set[str]]:
    """Structural support check: does the asset carry the annotations the
    skill requires? Returns (supported, missing annotation kinds)."""
    missing = skill.required_annotations - asset.annotation_kinds()
    return (not missing, set(missing))


def backfill_annotations(asset: AssetRecord, needed: set[str]) -> AssetRecord:
    """Propose missing annotations from shape geometry, flagged provenance="auto".

    Parts come from primitive decomposition (one per primitive), grasp poses
    sit at primitive centroids approaching along the shortest extent, and
    axes follow the dominant symmetry axis of the first primitive.
    """
    missing = set(needed) - asset.annotation_kinds()
    if not missing:
        return asset

    parts = list(asset.parts)
    grasp_poses = list(asset.grasp_poses)
    constraints = list(asset.constraints)

    if PART_REGION in missing:
        for i, prim in enumerate(asset.shape):
            parts.append(
                PartAnnotation(
                    part_id=f"auto_part_{i}",
                    region_kind="box",
                    center=prim.center,
                    extents=tuple(prim.box_extents()),
                    kind="custom",
                    provenance="auto",
                )
            )

    if GRASP_POSE in missing:
        hosts = parts if parts else []
        if not hosts:
            raise UnderconstrainedGeometry(
                f"{asset.object_id}: no parts to attach grasp poses to"
            )
        for i, prim in enumerate(asset.shape):
            host = parts[min(i, len(parts) - 1)]
            approach = -geo.shortest_axis(prim.box_extents())
            grasp_poses.append(
                GraspPose(
                    part_id=host.part_id,
                    position=prim.center,
                    orientation=(1.0, 0.0, 0.0, 0.0),
                    approach=tuple(approach),
                    provenance="auto",
                )
            )

    for kind in sorted(missing & CONSTRAINT_KINDS):
        prim = asset.shape[0]
        if prim.kind == "sphere":
            raise UnderconstrainedGeometry(
                f"{asset.object_id}: sphere has no symmetry axis for {kind}"
            )
        if prim.kind == "cylinder":
            axis = np.array([0.0, 0.0, 1.0])
        else:
            axis = geo.dominant_axis(prim.box_extents())
        prismatic = kind == SLIDING_DIRECTION
        constraints.append(
            ManipulationConstraint(
                kind=kind,
                axis=tuple(axis),
                anchor=prim.center,
                range=(0.0, 0.15) if prismatic else (0.0, 90.0),
                part_id=parts[0].part_id if parts else None,
                prismatic=prismatic,
                provenance="auto",
            )
        )

    proposal = replace(
        asset,
        parts=tuple(parts),
        grasp_poses=tuple(grasp_poses),
        constraints=tuple(constraints),
    )
    validate_asset(proposal)
    return proposal

"""Scene documents: a truss, its planner configuration, and task records.

Format 1 layout::

    {
      "format": 1,
      "name": "...",
      "comment": "...",              # optional
      "ground_height": 0.075,
      "nodes": {"v0": [x, y, z], ...},
      "members": [["v0", "v1"], ...],   # ids assigned 0..m-1 in order
      "config": { ... PlannerConfig.to_dict() ... },
      "tasks": [ ... ]                  # optional
    }

Task records are plain dicts with a "kind" key:
geometry {"goals": {node: [x,y,z], ...}}, topology {"node", "goal"},
locomotion {"edge": [a, b]}.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Union

from trussmotion import scenes as bundled
from trussmotion.truss import PlannerConfig, TrussGraph

SCENE_FORMAT = 1

_TASK_KINDS = ("geometry", "topology", "locomotion")


@dataclass
class Scene:
    name: str
    truss: TrussGraph
    config: PlannerConfig
    tasks: list[dict] = field(default_factory=list)
    comment: str = ""

    def to_dict(self) -> dict:
        g = self.truss
        return {
            "format": SCENE_FORMAT,
            "name": self.name,
            "comment": self.comment,
            "ground_height": g.ground_height,
            "nodes": {n: [float(x) for x in g.position(n)] for n in g.node_ids},
            "members": [list(g.member_end_ids(m)) for m in g.member_ids],
            "config": self.config.to_dict(),
            "tasks": self.tasks,
        }


def _check_task(task: Mapping) -> dict:
    kind = task.get("kind")
    if kind not in _TASK_KINDS:
        raise ValueError(f"unknown task kind {kind!r}")
    if kind == "geometry" and "goals" not in task:
        raise ValueError("geometry task needs a goals mapping")
    if kind == "topology" and ("node" not in task or "goal" not in task):
        raise ValueError("topology task needs node and goal")
    if kind == "locomotion" and len(task.get("edge", ())) != 2:
        raise ValueError("locomotion task needs a two-node edge")
    return dict(task)


def scene_from_dict(d: Mapping) -> Scene:
    fmt = d.get("format")
    if fmt != SCENE_FORMAT:
        raise ValueError(f"unsupported scene format {fmt!r}, expected {SCENE_FORMAT}")
    truss = TrussGraph.create(
        d["nodes"],
        [tuple(pair) for pair in d["members"]],
        ground_height=d.get("ground_height", 0.0),
    )
    cfg = PlannerConfig.from_dict(d["config"])
    tasks = [_check_task(t) for t in d.get("tasks", [])]
    return Scene(
        name=d.get("name", "unnamed"),
        truss=truss,
        config=cfg,
        tasks=tasks,
        comment=d.get("comment", ""),
    )


def load_scene(source: Union[str, Path]) -> Scene:
    """Load a scene by bundled name, or from a JSON file path."""
    text = None
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        text = path.read_text()
    else:
        return scene_from_dict(bundled.load(str(source)))
    return scene_from_dict(json.loads(text))


def save_scene(scene: Scene, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(scene.to_dict(), indent=2) + "\n")

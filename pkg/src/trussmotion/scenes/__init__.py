"""Bundled demo scenes.

Each scene is a JSON document (format 1) with the node layout, member
list, planner configuration, and the tasks it was built for.  Use
:func:`trussmotion.scene.load_scene` to turn one into live objects.
"""
from __future__ import annotations

import json
from importlib import resources

__all__ = ["list_scenes", "load"]


def list_scenes() -> list[str]:
    """Names of the bundled scenes, sorted."""
    names = []
    for entry in resources.files(__name__).iterdir():
        if entry.name.endswith(".json"):
            names.append(entry.name[: -len(".json")])
    return sorted(names)


def load(name: str) -> dict:
    """Return the raw scene dictionary for a bundled scene."""
    path = resources.files(__name__).joinpath(f"{name}.json")
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise KeyError(
            f"no bundled scene {name!r}; available: {', '.join(list_scenes())}"
        ) from None
    return json.loads(text)

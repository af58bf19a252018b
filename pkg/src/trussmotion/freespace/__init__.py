"""Free-space analysis for a single moving truss node.

Exposes the obstacle construction, the planar-arrangement machinery and the
enclosed-subspace enumeration built on top of them.
"""
from .obstacles import (
    InflatedObstacle,
    ObstaclePolygon,
    inflate_polygon,
    obstacle_polygons,
    singular_plane,
)
from .arrangement import (
    ObstacleSet,
    SourceFace,
    build_obstacle_set,
    polygon_intersection,
)
from .subspaces import (
    EnclosedSubspace,
    FreeSpace,
    boundary_search,
    clear_free_space_cache,
    contains,
    enumerate_subspaces,
    export_boundary_off,
    free_space,
    singular_planes,
)

__all__ = [
    "ObstaclePolygon",
    "InflatedObstacle",
    "obstacle_polygons",
    "inflate_polygon",
    "singular_plane",
    "singular_planes",
    "SourceFace",
    "ObstacleSet",
    "build_obstacle_set",
    "polygon_intersection",
    "EnclosedSubspace",
    "FreeSpace",
    "boundary_search",
    "contains",
    "enumerate_subspaces",
    "free_space",
    "clear_free_space_cache",
    "export_boundary_off",
]

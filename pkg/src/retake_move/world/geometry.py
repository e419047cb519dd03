"""Map geometry: walls, labeled regions, spawns, routes, and tactics lists."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path

import numpy as np

from .. import kernels

REGION_LABELS = frozenset({"high_ground", "defensive", "bombsite_A", "bombsite_B", "route", "open"})
PLAYER_HALF_WIDTH = 16.0
NAV_CELL = 25.0
COARSE_CELL = 200.0


class MapError(ValueError):
    """Raised for a map file that fails validation."""


@dataclass(frozen=True)
class Wall:
    name: str
    rect: tuple
    jumpable: bool = False
    cover: bool = False


@dataclass(frozen=True)
class Region:
    name: str
    rect: tuple
    labels: frozenset

    def contains(self, x, y):
        x0, y0, x1, y1 = self.rect
        return x0 <= x <= x1 and y0 <= y <= y1

    @property
    def center(self):
        x0, y0, x1, y1 = self.rect
        return (0.5 * (x0 + x1), 0.5 * (y0 + y1))


@dataclass
class MapGeometry:
    name: str
    bounds: tuple
    walls: list
    regions: list
    spawns: dict
    bombs: dict
    routes: dict = field(default_factory=dict)
    anchors: dict = field(default_factory=dict)
    flanks: list = field(default_factory=list)
    spreads: list = field(default_factory=list)

    # ------------------------------------------------------------ derived arrays
    @cached_property
    def wall_array(self):
        return np.array([w.rect for w in self.walls], dtype=np.float64).reshape(-1, 4)

    @cached_property
    def inflated_walls(self):
        h = PLAYER_HALF_WIDTH
        return self.wall_array + np.array([-h, -h, h, h])

    @cached_property
    def jumpable_mask(self):
        return np.array([w.jumpable for w in self.walls], dtype=np.uint8)

    @cached_property
    def cover_walls(self):
        return [w for w in self.walls if w.cover]

    @cached_property
    def region_index(self):
        return {r.name: r for r in self.regions}

    @property
    def extent(self):
        x0, y0, x1, y1 = self.bounds
        return (x1 - x0, y1 - y0)

    @property
    def diagonal(self):
        w, h = self.extent
        return float(np.hypot(w, h))

    def regions_with(self, label):
        return [r for r in self.regions if label in r.labels]

    def bomb_region(self, site):
        return self.regions_with(f"bombsite_{site}")[0]

    # ------------------------------------------------------------ queries
    def region_of(self, x, y):
        """Names of all (closed) regions containing the point."""
        return {r.name for r in self.regions if r.contains(x, y)}

    def in_label(self, x, y, label):
        return any(label in r.labels and r.contains(x, y) for r in self.regions)

    def point_blocked(self, x, y, inflate=True):
        walls = self.inflated_walls if inflate else self.wall_array
        for x0, y0, x1, y1 in walls.tolist():
            if x0 < x < x1 and y0 < y < y1:
                return True
        return False

    def line_of_sight(self, ax, ay, bx, by):
        return not kernels.segment_blocked(ax, ay, bx, by, self.wall_array)

    # ------------------------------------------------------------ grids
    @cached_property
    def nav_grid(self):
        """Boolean walkable grid (rows = y, cols = x) of NAV_CELL cells; jumpable walls block."""
        x0, y0, x1, y1 = self.bounds
        cols = int(np.ceil((x1 - x0) / NAV_CELL))
        rows = int(np.ceil((y1 - y0) / NAV_CELL))
        grid = np.ones((rows, cols), dtype=bool)
        h = PLAYER_HALF_WIDTH
        for wx0, wy0, wx1, wy1 in self.wall_array.tolist():
            c0 = int(np.floor((wx0 - h - x0) / NAV_CELL))
            c1 = int(np.ceil((wx1 + h - x0) / NAV_CELL))
            r0 = int(np.floor((wy0 - h - y0) / NAV_CELL))
            r1 = int(np.ceil((wy1 + h - y0) / NAV_CELL))
            grid[max(r0, 0) : max(r1, 0), max(c0, 0) : max(c1, 0)] = False
        grid[0, :] = grid[-1, :] = False
        grid[:, 0] = grid[:, -1] = False
        return grid

    def nav_cell(self, x, y):
        x0, y0, _, _ = self.bounds
        rows, cols = self.nav_grid.shape
        c = min(max(int((x - x0) // NAV_CELL), 0), cols - 1)
        r = min(max(int((y - y0) // NAV_CELL), 0), rows - 1)
        return r, c

    def nav_center(self, r, c):
        x0, y0, _, _ = self.bounds
        return (x0 + (c + 0.5) * NAV_CELL, y0 + (r + 0.5) * NAV_CELL)

    @cached_property
    def near_cover(self):
        """Walkable nav cells within two cells of a cover wall."""
        grid = self.nav_grid
        out = np.zeros_like(grid)
        rows, cols = grid.shape
        pad = 2 * NAV_CELL + PLAYER_HALF_WIDTH
        for w in self.walls:
            if not w.cover:
                continue
            wx0, wy0, wx1, wy1 = w.rect
            for r in range(rows):
                for c in range(cols):
                    cx, cy = self.nav_center(r, c)
                    if wx0 - pad <= cx <= wx1 + pad and wy0 - pad <= cy <= wy1 + pad:
                        out[r, c] = True
        return out & grid

    def walkable_point_in(self, region_name):
        """Walkable nav-cell center inside a region, nearest to the region center."""
        region = self.region_index[region_name]
        cx, cy = region.center
        grid = self.nav_grid
        best, best_d = None, np.inf
        rows, cols = grid.shape
        for r in range(rows):
            for c in range(cols):
                if not grid[r, c]:
                    continue
                px, py = self.nav_center(r, c)
                if not region.contains(px, py):
                    continue
                d = (px - cx) ** 2 + (py - cy) ** 2
                if d < best_d:
                    best, best_d = (px, py), d
        if best is None:
            raise MapError(f"region {region_name} has no walkable cell")
        return best

    @cached_property
    def coarse_cells(self):
        """Centers (n, 2) and 4-neighbour lists of the coarse occupancy graph."""
        x0, y0, x1, y1 = self.bounds
        cols = int(np.ceil((x1 - x0) / COARSE_CELL))
        rows = int(np.ceil((y1 - y0) / COARSE_CELL))
        index = {}
        centers = []
        for r in range(rows):
            for c in range(cols):
                px = x0 + (c + 0.5) * COARSE_CELL
                py = y0 + (r + 0.5) * COARSE_CELL
                if not self.point_blocked(px, py):
                    index[(r, c)] = len(centers)
                    centers.append((px, py))
        neighbors = [[] for _ in centers]
        for (r, c), i in index.items():
            for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                j = index.get((r + dr, c + dc))
                if j is not None:
                    neighbors[i].append(j)
        return np.array(centers, dtype=np.float64), neighbors

    def coarse_cell_of(self, x, y):
        centers, _ = self.coarse_cells
        d = (centers[:, 0] - x) ** 2 + (centers[:, 1] - y) ** 2
        return int(np.argmin(d))


def _rect(v, what):
    if not (isinstance(v, (list, tuple)) and len(v) == 4):
        raise MapError(f"{what}: rectangle must be [x0, y0, x1, y1]")
    x0, y0, x1, y1 = (float(a) for a in v)
    if not (x0 < x1 and y0 < y1):
        raise MapError(f"{what}: degenerate rectangle {v}")
    return (x0, y0, x1, y1)


def parse_map(doc):
    """Validate a decoded map JSON document and build a MapGeometry."""
    for key in ("bounds", "walls", "regions", "spawns", "tactics"):
        if key not in doc:
            raise MapError(f"missing key {key!r}")
    bounds = _rect(doc["bounds"], "bounds")
    walls = []
    for i, w in enumerate(doc["walls"]):
        rect = _rect(w.get("rect"), f"wall {i}")
        if rect[0] < bounds[0] or rect[1] < bounds[1] or rect[2] > bounds[2] or rect[3] > bounds[3]:
            raise MapError(f"wall {i} outside bounds")
        walls.append(Wall(w.get("name", f"wall{i}"), rect, bool(w.get("jumpable", False)), bool(w.get("cover", False))))
    regions = []
    names = set()
    for i, r in enumerate(doc["regions"]):
        name = r.get("name")
        if not name or name in names:
            raise MapError(f"region {i}: missing or duplicate name {name!r}")
        names.add(name)
        labels = frozenset(r.get("labels", []))
        bad = labels - REGION_LABELS
        if bad:
            raise MapError(f"region {name}: unknown labels {sorted(bad)}")
        regions.append(Region(name, _rect(r.get("rect"), f"region {name}"), labels))
    for site in ("A", "B"):
        if not any(f"bombsite_{site}" in r.labels for r in regions):
            raise MapError(f"no region labelled bombsite_{site}")
    spawns = doc["spawns"]
    for team in ("offense", "defense"):
        if not spawns.get(team):
            raise MapError(f"no {team} spawns")
    bombs = doc.get("bombs")
    if not bombs:
        bombs = {site: list(next(r for r in regions if f"bombsite_{site}" in r.labels).center) for site in ("A", "B")}
    tactics = doc["tactics"] or {}
    flanks = [tuple(p) for p in tactics.get("flanks", [])]
    spreads = [tuple(p) for p in tactics.get("spreads", [])]
    for entry in flanks + spreads:
        for name in entry:
            if name not in names:
                raise MapError(f"tactics entry {entry} references unknown region {name!r}")
    anchors = doc.get("anchors", {})
    for site, lst in anchors.items():
        for name in lst:
            if name not in names:
                raise MapError(f"anchor {name!r} for site {site} is not a region")
    return MapGeometry(
        name=doc.get("name", "unnamed"),
        bounds=bounds,
        walls=walls,
        regions=regions,
        spawns={k: [tuple(map(float, p)) for p in v] for k, v in spawns.items()},
        bombs={k: tuple(map(float, v)) for k, v in bombs.items()},
        routes=doc.get("routes", {}),
        anchors=anchors,
        flanks=flanks,
        spreads=spreads,
    )


def load_map(path=None):
    """Load a map JSON file; with no path, the built-in ``desk_dust`` map."""
    if path is None:
        text = resources.files("retake_move.world").joinpath("maps/desk_dust.json").read_text()
    else:
        text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MapError(f"map is not valid JSON: {exc}") from None
    return parse_map(doc)


def default_map_path():
    return str(resources.files("retake_move.world").joinpath("maps/desk_dust.json"))

"""A* over the walkable nav grid and a simple path follower."""

from __future__ import annotations

import heapq
import math

from ..world.moves import STILL, encode_move, nearest_direction

_SQRT2 = math.sqrt(2.0)
_STEPS = ((1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0), (1, 1, _SQRT2), (1, -1, _SQRT2), (-1, 1, _SQRT2), (-1, -1, _SQRT2))


def _nearest_walkable(grid, r, c):
    if grid[r, c]:
        return r, c
    rows, cols = grid.shape
    for radius in range(1, max(rows, cols)):
        best = None
        for dr in range(-radius, radius + 1):
            for dc in range(-radius, radius + 1):
                rr, cc = r + dr, c + dc
                if 0 <= rr < rows and 0 <= cc < cols and grid[rr, cc]:
                    d = dr * dr + dc * dc
                    if best is None or d < best[0]:
                        best = (d, rr, cc)
        if best is not None:
            return best[1], best[2]
    raise ValueError("no walkable cell on the grid")


def astar(grid, start, goal, cost=None):
    """8-connected A* without corner cutting; returns the list of (row, col) cells.

    ``cost`` is an optional per-cell multiplier (all entries >= ``min_cost``
    keeps the octile heuristic admissible after scaling).
    """
    start = _nearest_walkable(grid, *start)
    goal = _nearest_walkable(grid, *goal)
    rows, cols = grid.shape
    hscale = 1.0 if cost is None else float(cost.min())

    def h(r, c):
        dr, dc = abs(r - goal[0]), abs(c - goal[1])
        return hscale * (max(dr, dc) + (_SQRT2 - 1.0) * min(dr, dc))

    g = {start: 0.0}
    came = {}
    heap = [(h(*start), 0.0, start)]
    while heap:
        _, gc, node = heapq.heappop(heap)
        if node == goal:
            path = [node]
            while node in came:
                node = came[node]
                path.append(node)
            return path[::-1]
        if gc > g.get(node, math.inf):
            continue
        r, c = node
        for dr, dc, step in _STEPS:
            rr, cc = r + dr, c + dc
            if not (0 <= rr < rows and 0 <= cc < cols) or not grid[rr, cc]:
                continue
            if dr and dc and not (grid[r + dr, c] and grid[r, c + dc]):
                continue
            w = step if cost is None else step * 0.5 * (cost[r, c] + cost[rr, cc])
            ng = gc + w
            if ng < g.get((rr, cc), math.inf):
                g[(rr, cc)] = ng
                came[(rr, cc)] = node
                heapq.heappush(heap, (ng + h(rr, cc), ng, (rr, cc)))
    return []


class PathPlanner:
    """Caches paths between nav cells; cover-hugging is a cheaper cost near cover walls."""

    def __init__(self, geometry, cover_discount=0.0):
        self.map = geometry
        self.grid = geometry.nav_grid
        self.cost = None
        if cover_discount:
            self.cost = 1.0 - cover_discount * geometry.near_cover.astype(float)
        self._cache = {}

    def cells(self, start_xy, goal_xy):
        key = (self.map.nav_cell(*start_xy), self.map.nav_cell(*goal_xy))
        path = self._cache.get(key)
        if path is None:
            path = astar(self.grid, key[0], key[1], self.cost)
            self._cache[key] = path
        return path

    def points(self, start_xy, goal_xy):
        """World-space waypoints (cell centers) ending at the exact goal point."""
        pts = [self.map.nav_center(r, c) for r, c in self.cells(start_xy, goal_xy)]
        if pts:
            pts[-1] = tuple(goal_xy)
        return pts

    def route(self, start_xy, via_points):
        pts = []
        cur = start_xy
        for v in via_points:
            seg = self.points(cur, v)
            pts.extend(seg[1:] if pts else seg)
            cur = v
        return pts


class PathFollower:
    """Turns a waypoint list into 16-direction movement commands."""

    def __init__(self, points, reach=20.0, lookahead=2):
        self.points = list(points)
        self.index = 0
        self.reach = reach
        self.lookahead = lookahead

    @property
    def done(self):
        return self.index >= len(self.points)

    def target(self, x, y):
        # Skip ahead to the closest of the next few waypoints so a missed one cannot trap the follower.
        window = self.points[self.index : self.index + self.lookahead + 2]
        if window:
            d = [(px - x) ** 2 + (py - y) ** 2 for px, py in window]
            self.index += d.index(min(d))
        while self.index < len(self.points):
            px, py = self.points[self.index]
            if (px - x) ** 2 + (py - y) ** 2 > self.reach**2:
                break
            self.index += 1
        if self.done:
            return None
        return self.points[min(self.index + self.lookahead - 1, len(self.points) - 1)]

    def command(self, x, y, speed, jump=0):
        tgt = self.target(x, y)
        if tgt is None:
            return STILL
        return encode_move(nearest_direction(math.degrees(math.atan2(tgt[1] - y, tgt[0] - x))), speed, jump)


def heading_command(x, y, tx, ty, speed, jump=0):
    if (tx - x) ** 2 + (ty - y) ** 2 < 1e-9:
        return STILL
    return encode_move(nearest_direction(math.degrees(math.atan2(ty - y, tx - x))), speed, jump)

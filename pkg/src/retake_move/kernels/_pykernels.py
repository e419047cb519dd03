"""Pure-Python reference versions of the hot geometry and transport kernels.

Every function here has a twin in ``_ckernels.pyx`` that performs the same
floating-point operations in the same order, so both backends return
bitwise-identical results.  Walls are ``(m, 4)`` float64 arrays of
``[x0, y0, x1, y1]`` rectangles.
"""

import numpy as np

_PARALLEL_EPS = 1e-12


def _slab(p0, p1, d0, d1, x0, y0, x1, y1, t0, t1):
    # Clip the parametric interval [t0, t1] of p + t*d against a closed rectangle.
    if -_PARALLEL_EPS < d0 < _PARALLEL_EPS:
        if p0 < x0 or p0 > x1:
            return 1.0, 0.0
    else:
        ta = (x0 - p0) / d0
        tb = (x1 - p0) / d0
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
        if t0 > t1:
            return t0, t1
    if -_PARALLEL_EPS < d1 < _PARALLEL_EPS:
        if p1 < y0 or p1 > y1:
            return 1.0, 0.0
    else:
        ta = (y0 - p1) / d1
        tb = (y1 - p1) / d1
        if ta > tb:
            ta, tb = tb, ta
        if ta > t0:
            t0 = ta
        if tb < t1:
            t1 = tb
    return t0, t1


def segment_blocked(ax, ay, bx, by, walls):
    """True when the closed segment a-b touches any wall rectangle."""
    dx = bx - ax
    dy = by - ay
    for x0, y0, x1, y1 in walls.tolist():
        t0, t1 = _slab(ax, ay, dx, dy, x0, y0, x1, y1, 0.0, 1.0)
        if t0 <= t1:
            return True
    return False


def visibility_matrix(xy, walls):
    """Symmetric (n, n) uint8 matrix of unobstructed lines of sight."""
    n = xy.shape[0]
    out = np.ones((n, n), dtype=np.uint8)
    pts = xy.tolist()
    for i in range(n):
        for j in range(i + 1, n):
            blocked = segment_blocked(pts[i][0], pts[i][1], pts[j][0], pts[j][1], walls)
            out[i, j] = out[j, i] = 0 if blocked else 1
    return out


def points_visible(origins, points, walls):
    """(n, m) uint8 matrix: is points[j] visible from origins[i]."""
    n = origins.shape[0]
    m = points.shape[0]
    out = np.zeros((n, m), dtype=np.uint8)
    org = origins.tolist()
    pts = points.tolist()
    for i in range(n):
        for j in range(m):
            if not segment_blocked(org[i][0], org[i][1], pts[j][0], pts[j][1], walls):
                out[i, j] = 1
    return out


def ray_wall_distance(ox, oy, dx, dy, walls, max_t):
    """Smallest ray parameter in [0, max_t] at which the ray enters a wall."""
    best = max_t
    for x0, y0, x1, y1 in walls.tolist():
        t0, t1 = _slab(ox, oy, dx, dy, x0, y0, x1, y1, 0.0, max_t)
        if t0 <= t1 and t0 < best:
            best = t0
    return best


def ray_aabb(ox, oy, dx, dy, x0, y0, x1, y1, max_t):
    """Entry parameter of the ray into one box, or -1.0 on a miss."""
    t0, t1 = _slab(ox, oy, dx, dy, x0, y0, x1, y1, 0.0, max_t)
    if t0 <= t1:
        return t0
    return -1.0


def sweep_move(x, y, dx, dy, walls, passable, xmin, ymin, xmax, ymax):
    """Axis-separated sweep of a point through inflated walls.

    Returns ``(x, y, hit_x, hit_y)``.  Walls flagged passable, or that already
    contain the point strictly, do not block.
    """
    rows = walls.tolist()
    flags = passable.tolist()
    hit_x = False
    hit_y = False
    nx = x + dx
    if dx != 0.0:
        for k in range(len(rows)):
            if flags[k]:
                continue
            x0, y0, x1, y1 = rows[k]
            if not (y > y0 and y < y1):
                continue
            if x <= x0 and nx > x0:
                nx = x0
                hit_x = True
            elif x >= x1 and nx < x1:
                nx = x1
                hit_x = True
    if nx < xmin:
        nx = xmin
        hit_x = True
    elif nx > xmax:
        nx = xmax
        hit_x = True
    ny = y + dy
    if dy != 0.0:
        for k in range(len(rows)):
            if flags[k]:
                continue
            x0, y0, x1, y1 = rows[k]
            if not (nx > x0 and nx < x1):
                continue
            if y <= y0 and ny > y0:
                ny = y0
                hit_y = True
            elif y >= y1 and ny < y1:
                ny = y1
                hit_y = True
    if ny < ymin:
        ny = ymin
        hit_y = True
    elif ny > ymax:
        ny = ymax
        hit_y = True
    return nx, ny, hit_x, hit_y


def transport(supply, demand, cost, tol=1e-15):
    """Exact transportation plan by successive shortest paths with potentials.

    ``supply`` (S,), ``demand`` (D,) are non-negative masses, ``cost`` (S, D)
    non-negative.  Returns the (S, D) flow matrix.
    """
    S = supply.shape[0]
    D = demand.shape[0]
    excess = np.array(supply, dtype=np.float64)
    deficit = np.array(demand, dtype=np.float64)
    cost = np.asarray(cost, dtype=np.float64)
    flow = np.zeros((S, D), dtype=np.float64)
    pot_s = np.zeros(S, dtype=np.float64)
    pot_d = cost.min(axis=0) if S else np.zeros(D)
    inf = np.inf

    while True:
        if not (excess > tol).any() or not (deficit > tol).any():
            break
        dist_s = np.where(excess > tol, 0.0, inf)
        dist_d = np.full(D, inf)
        done_s = np.zeros(S, dtype=bool)
        done_d = np.zeros(D, dtype=bool)
        pred_s = np.full(S, -1, dtype=np.int64)
        pred_d = np.full(D, -1, dtype=np.int64)
        target = -1
        while True:
            cand_s = np.where(done_s, inf, dist_s)
            cand_d = np.where(done_d, inf, dist_d)
            i = int(np.argmin(cand_s))
            j = int(np.argmin(cand_d))
            if cand_s[i] == inf and cand_d[j] == inf:
                break
            if cand_s[i] <= cand_d[j]:
                done_s[i] = True
                red = cost[i] + pot_s[i] - pot_d
                red = np.where(red > 0.0, red, 0.0)
                nd = dist_s[i] + red
                better = (~done_d) & (nd < dist_d)
                dist_d = np.where(better, nd, dist_d)
                pred_d = np.where(better, i, pred_d)
            else:
                done_d[j] = True
                if deficit[j] > tol:
                    target = j
                    break
                red = -(cost[:, j] + pot_s - pot_d[j])
                red = np.where(red > 0.0, red, 0.0)
                nd = dist_d[j] + red
                better = (~done_s) & (flow[:, j] > 0.0) & (nd < dist_s)
                dist_s = np.where(better, nd, dist_s)
                pred_s = np.where(better, j, pred_s)
        if target < 0:
            break
        reach = dist_d[target]
        pot_s = pot_s + np.minimum(dist_s, reach)
        pot_d = pot_d + np.minimum(dist_d, reach)

        # Bottleneck along the alternating path back to a source.
        amount = deficit[target]
        j = target
        while True:
            i = int(pred_d[j])
            jj = int(pred_s[i])
            if jj < 0:
                if excess[i] < amount:
                    amount = excess[i]
                break
            if flow[i, jj] < amount:
                amount = flow[i, jj]
            j = jj
        j = target
        deficit[target] -= amount
        while True:
            i = int(pred_d[j])
            flow[i, j] += amount
            jj = int(pred_s[i])
            if jj < 0:
                excess[i] -= amount
                break
            flow[i, jj] -= amount
            if flow[i, jj] < 0.0:
                flow[i, jj] = 0.0
            j = jj
    return flow

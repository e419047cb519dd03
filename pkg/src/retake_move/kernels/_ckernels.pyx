# cython: language_level=3
"""Compiled twins of the kernels in ``_pykernels``.

Arithmetic is written in the same order as the Python versions so results
agree bit for bit.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()

cdef double _PARALLEL_EPS = 1e-12


cdef inline bint _slab(double p0, double p1, double d0, double d1,
                       double x0, double y0, double x1, double y1,
                       double* t0, double* t1) noexcept nogil:
    cdef double ta, tb, tmp
    if -_PARALLEL_EPS < d0 < _PARALLEL_EPS:
        if p0 < x0 or p0 > x1:
            return False
    else:
        ta = (x0 - p0) / d0
        tb = (x1 - p0) / d0
        if ta > tb:
            tmp = ta
            ta = tb
            tb = tmp
        if ta > t0[0]:
            t0[0] = ta
        if tb < t1[0]:
            t1[0] = tb
        if t0[0] > t1[0]:
            return False
    if -_PARALLEL_EPS < d1 < _PARALLEL_EPS:
        if p1 < y0 or p1 > y1:
            return False
    else:
        ta = (y0 - p1) / d1
        tb = (y1 - p1) / d1
        if ta > tb:
            tmp = ta
            ta = tb
            tb = tmp
        if ta > t0[0]:
            t0[0] = ta
        if tb < t1[0]:
            t1[0] = tb
    return t0[0] <= t1[0]


cdef inline bint _blocked(double ax, double ay, double bx, double by,
                          const double[:, ::1] walls) noexcept nogil:
    cdef Py_ssize_t k
    cdef double t0, t1
    cdef double dx = bx - ax
    cdef double dy = by - ay
    for k in range(walls.shape[0]):
        t0 = 0.0
        t1 = 1.0
        if _slab(ax, ay, dx, dy, walls[k, 0], walls[k, 1], walls[k, 2], walls[k, 3], &t0, &t1):
            return True
    return False


def segment_blocked(double ax, double ay, double bx, double by, walls):
    cdef const double[:, ::1] w = np.ascontiguousarray(walls, dtype=np.float64).reshape(-1, 4)
    return bool(_blocked(ax, ay, bx, by, w))


def visibility_matrix(xy, walls):
    cdef const double[:, ::1] p = np.ascontiguousarray(xy, dtype=np.float64)
    cdef const double[:, ::1] w = np.ascontiguousarray(walls, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t n = p.shape[0]
    out = np.ones((n, n), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] o = out
    cdef Py_ssize_t i, j
    cdef cnp.uint8_t v
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                v = 0 if _blocked(p[i, 0], p[i, 1], p[j, 0], p[j, 1], w) else 1
                o[i, j] = v
                o[j, i] = v
    return out


def points_visible(origins, points, walls):
    cdef const double[:, ::1] org = np.ascontiguousarray(origins, dtype=np.float64)
    cdef const double[:, ::1] pts = np.ascontiguousarray(points, dtype=np.float64)
    cdef const double[:, ::1] w = np.ascontiguousarray(walls, dtype=np.float64).reshape(-1, 4)
    cdef Py_ssize_t n = org.shape[0]
    cdef Py_ssize_t m = pts.shape[0]
    out = np.zeros((n, m), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] o = out
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n):
            for j in range(m):
                if not _blocked(org[i, 0], org[i, 1], pts[j, 0], pts[j, 1], w):
                    o[i, j] = 1
    return out


def ray_wall_distance(double ox, double oy, double dx, double dy, walls, double max_t):
    cdef const double[:, ::1] w = np.ascontiguousarray(walls, dtype=np.float64).reshape(-1, 4)
    cdef double best = max_t
    cdef double t0, t1
    cdef Py_ssize_t k
    for k in range(w.shape[0]):
        t0 = 0.0
        t1 = max_t
        if _slab(ox, oy, dx, dy, w[k, 0], w[k, 1], w[k, 2], w[k, 3], &t0, &t1):
            if t0 < best:
                best = t0
    return best


def ray_aabb(double ox, double oy, double dx, double dy,
             double x0, double y0, double x1, double y1, double max_t):
    cdef double t0 = 0.0
    cdef double t1 = max_t
    if _slab(ox, oy, dx, dy, x0, y0, x1, y1, &t0, &t1):
        return t0
    return -1.0


def sweep_move(double x, double y, double dx, double dy, walls, passable,
               double xmin, double ymin, double xmax, double ymax):
    cdef const double[:, ::1] w = np.ascontiguousarray(walls, dtype=np.float64).reshape(-1, 4)
    cdef const cnp.uint8_t[::1] pas = np.ascontiguousarray(passable, dtype=np.uint8)
    cdef Py_ssize_t k
    cdef bint hit_x = False
    cdef bint hit_y = False
    cdef double nx = x + dx
    cdef double ny
    if dx != 0.0:
        for k in range(w.shape[0]):
            if pas[k]:
                continue
            if not (y > w[k, 1] and y < w[k, 3]):
                continue
            if x <= w[k, 0] and nx > w[k, 0]:
                nx = w[k, 0]
                hit_x = True
            elif x >= w[k, 2] and nx < w[k, 2]:
                nx = w[k, 2]
                hit_x = True
    if nx < xmin:
        nx = xmin
        hit_x = True
    elif nx > xmax:
        nx = xmax
        hit_x = True
    ny = y + dy
    if dy != 0.0:
        for k in range(w.shape[0]):
            if pas[k]:
                continue
            if not (nx > w[k, 0] and nx < w[k, 2]):
                continue
            if y <= w[k, 1] and ny > w[k, 1]:
                ny = w[k, 1]
                hit_y = True
            elif y >= w[k, 3] and ny < w[k, 3]:
                ny = w[k, 3]
                hit_y = True
    if ny < ymin:
        ny = ymin
        hit_y = True
    elif ny > ymax:
        ny = ymax
        hit_y = True
    return nx, ny, bool(hit_x), bool(hit_y)


def transport(supply, demand, cost, double tol=1e-15):
    cdef const double[::1] sup = np.ascontiguousarray(supply, dtype=np.float64)
    cdef const double[::1] dem = np.ascontiguousarray(demand, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(cost, dtype=np.float64)
    cdef Py_ssize_t S = sup.shape[0]
    cdef Py_ssize_t D = dem.shape[0]
    flow_arr = np.zeros((S, D), dtype=np.float64)
    cdef double[:, ::1] flow = flow_arr
    excess_arr = np.array(sup, dtype=np.float64)
    deficit_arr = np.array(dem, dtype=np.float64)
    cdef double[::1] excess = excess_arr
    cdef double[::1] deficit = deficit_arr
    pot_s_arr = np.zeros(S, dtype=np.float64)
    pot_d_arr = np.asarray(cost, dtype=np.float64).min(axis=0) if S else np.zeros(D)
    pot_d_arr = np.ascontiguousarray(pot_d_arr, dtype=np.float64)
    cdef double[::1] pot_s = pot_s_arr
    cdef double[::1] pot_d = pot_d_arr
    dist_s_arr = np.empty(S, dtype=np.float64)
    dist_d_arr = np.empty(D, dtype=np.float64)
    cdef double[::1] dist_s = dist_s_arr
    cdef double[::1] dist_d = dist_d_arr
    done_s_arr = np.empty(S, dtype=np.uint8)
    done_d_arr = np.empty(D, dtype=np.uint8)
    cdef cnp.uint8_t[::1] done_s = done_s_arr
    cdef cnp.uint8_t[::1] done_d = done_d_arr
    pred_s_arr = np.empty(S, dtype=np.int64)
    pred_d_arr = np.empty(D, dtype=np.int64)
    cdef cnp.int64_t[::1] pred_s = pred_s_arr
    cdef cnp.int64_t[::1] pred_d = pred_d_arr

    cdef Py_ssize_t i, j, jj, bi, bj, target
    cdef double bs, bd, red, nd, reach, amount
    cdef bint any_s, any_d

    with nogil:
        while True:
            any_s = False
            for i in range(S):
                if excess[i] > tol:
                    any_s = True
                    break
            any_d = False
            for j in range(D):
                if deficit[j] > tol:
                    any_d = True
                    break
            if not any_s or not any_d:
                break
            for i in range(S):
                dist_s[i] = 0.0 if excess[i] > tol else INFINITY
                done_s[i] = 0
                pred_s[i] = -1
            for j in range(D):
                dist_d[j] = INFINITY
                done_d[j] = 0
                pred_d[j] = -1
            target = -1
            while True:
                bi = 0
                bs = INFINITY
                for i in range(S):
                    if not done_s[i] and dist_s[i] < bs:
                        bs = dist_s[i]
                        bi = i
                bj = 0
                bd = INFINITY
                for j in range(D):
                    if not done_d[j] and dist_d[j] < bd:
                        bd = dist_d[j]
                        bj = j
                if bs == INFINITY and bd == INFINITY:
                    break
                if bs <= bd:
                    i = bi
                    done_s[i] = 1
                    for j in range(D):
                        red = c[i, j] + pot_s[i] - pot_d[j]
                        if not (red > 0.0):
                            red = 0.0
                        nd = dist_s[i] + red
                        if not done_d[j] and nd < dist_d[j]:
                            dist_d[j] = nd
                            pred_d[j] = i
                else:
                    j = bj
                    done_d[j] = 1
                    if deficit[j] > tol:
                        target = j
                        break
                    for i in range(S):
                        red = -(c[i, j] + pot_s[i] - pot_d[j])
                        if not (red > 0.0):
                            red = 0.0
                        nd = dist_d[j] + red
                        if not done_s[i] and flow[i, j] > 0.0 and nd < dist_s[i]:
                            dist_s[i] = nd
                            pred_s[i] = j
            if target < 0:
                break
            reach = dist_d[target]
            for i in range(S):
                pot_s[i] = pot_s[i] + (dist_s[i] if dist_s[i] < reach else reach)
            for j in range(D):
                pot_d[j] = pot_d[j] + (dist_d[j] if dist_d[j] < reach else reach)

            amount = deficit[target]
            j = target
            while True:
                i = pred_d[j]
                jj = pred_s[i]
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
                i = pred_d[j]
                flow[i, j] += amount
                jj = pred_s[i]
                if jj < 0:
                    excess[i] -= amount
                    break
                flow[i, jj] -= amount
                if flow[i, jj] < 0.0:
                    flow[i, jj] = 0.0
                j = jj
    return flow_arr

"""
Negative gradient flow on a scene: batched fixed-step RK4 in R^3 with
renormalisation to the sphere after every step.
"""
import logging
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from core.errors import DidNotConverge
from geometry.scene import normalize

logger = logging.getLogger(__name__)

CHUNK_SIZE = 4096
CAPTURE_RTOL = 1e-9
UNASSIGNED = -1
SEPARATRIX = -2


def rk4_step(field, x, h):
    k1 = field(x)
    k2 = field(x + 0.5 * h * k1)
    k3 = field(x + 0.5 * h * k2)
    k4 = field(x + h * k3)
    return normalize(x + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0)


def _direction_field(scene, direction):
    if direction > 0:
        return scene.descent
    return lambda x: -scene.descent(x)


def _nearest(points, targets):
    # targets are the few critical points of one index
    d = np.linalg.norm(points[:, None, :] - targets[None, :, :], axis=-1)
    return np.argmin(d, axis=1), np.min(d, axis=1)


def trace_limits(scene, points, direction=1):
    """
    Limit critical point of the flow through each point.

    Forward (``direction=1``) trajectories stop once f drops below the lowest
    non-minimum critical value: each component of that sublevel set holds a
    single minimum. Backward trajectories stop once f exceeds the highest
    non-maximum critical value. Trajectories that come within ``stop_radius``
    of a saddle or run out of steps are marked SEPARATRIX.

    Returns:
        numpy.ndarray: index into the minima (forward) or maxima (backward)
        of the scene's Morse function, or SEPARATRIX
    """
    f = scene.morse_function
    ode = scene.ode
    targets = f.positions(0 if direction > 0 else 2)
    saddles = f.positions(1)
    margin = CAPTURE_RTOL * max(f.value_range(), 1.0)
    if direction > 0:
        level = f.forward_capture_level() - margin

        def captured(values):
            return values < level
    else:
        level = f.backward_capture_level() + margin

        def captured(values):
            return values > level

    field = _direction_field(scene, direction)
    x = normalize(np.asarray(points, dtype=float).reshape(-1, 3))
    result = np.full(len(x), UNASSIGNED, dtype=int)
    active = np.arange(len(x))
    for _ in range(ode.max_steps + 1):
        if active.size == 0:
            break
        pts = x[active]
        nearest, dist = _nearest(pts, targets)
        done = captured(f.value(pts)) | (dist < ode.stop_radius)
        result[active[done]] = nearest[done]
        if len(saddles):
            _, saddle_dist = _nearest(pts, saddles)
            stuck = ~done & (saddle_dist < ode.stop_radius)
            result[active[stuck]] = SEPARATRIX
            done = done | stuck
        active = active[~done]
        if active.size:
            x[active] = rk4_step(field, x[active], ode.step)
    result[active] = SEPARATRIX
    return result


def trace_limits_parallel(scene, points, direction=1, threads=1):
    """trace_limits over fixed-size chunks; the result does not depend on ``threads``."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    chunks = [points[i:i + CHUNK_SIZE] for i in range(0, len(points), CHUNK_SIZE)]
    if not chunks:
        return np.zeros(0, dtype=int)
    if threads <= 1 or len(chunks) == 1:
        parts = [trace_limits(scene, chunk, direction) for chunk in chunks]
    else:
        parts = Parallel(n_jobs=threads, backend="threading")(
            delayed(trace_limits)(scene, chunk, direction) for chunk in chunks)
    return np.concatenate(parts)


@dataclass(frozen=True, eq=False)
class FlowCurve:
    """
    A descending flow line between critical points.

    ``points`` run from ``source`` (higher index) to ``target`` and start and
    end exactly at the two critical points. ``sign`` is the side of the saddle
    the curve leaves along (+1 or -1 times e_u or e_s), ``manifold`` says
    which of the two.
    """
    source: str
    target: str
    saddle: str
    manifold: str
    sign: int
    points: np.ndarray

    @property
    def key(self):
        return self.source, self.target


def _trace_curves(scene, seeds, direction, start_ids):
    """Follow each seed until it lands within stop_radius of an extremum, keeping the path."""
    f = scene.morse_function
    ode = scene.ode
    kind = 0 if direction > 0 else 2
    targets = f.points_of_index(kind)
    target_pos = f.positions(kind)
    others = [cp for cp in f.points_of_index(1)]
    field = _direction_field(scene, direction)
    x = normalize(np.asarray(seeds, dtype=float))
    paths = [[p.copy()] for p in x]
    ends = [None] * len(x)
    active = np.arange(len(x))
    for _ in range(ode.max_steps):
        nearest, dist = _nearest(x[active], target_pos)
        arrived = dist < ode.stop_radius
        for i, t in zip(active[arrived], nearest[arrived]):
            ends[i] = targets[t]
        for cp in others:
            near = np.linalg.norm(x[active] - np.array(cp.position), axis=1) < ode.stop_radius
            for i in active[near & ~arrived]:
                if cp.id != start_ids[i]:
                    raise DidNotConverge(f"flow line from {start_ids[i]} runs into saddle {cp.id}")
        active = active[~arrived]
        if active.size == 0:
            break
        x[active] = rk4_step(field, x[active], ode.step)
        for i in active:
            paths[i].append(x[i].copy())
    if active.size:
        raise DidNotConverge(f"{active.size} flow line(s) did not reach an extremum "
                             f"within {ode.max_steps} steps")
    return [np.array(p) for p in paths], ends


def saddle_branches(scene, saddle_ids=None):
    """All four branches at each saddle: (saddle, manifold, sign) triples."""
    ids = saddle_ids or [cp.id for cp in scene.morse_function.points_of_index(1)]
    return [(sid, manifold, sign) for sid in ids for manifold in ("unstable", "stable")
            for sign in (1, -1)]


def flow_curves(scene, branches):
    """Compute the given saddle branches in two batched integrations."""
    f = scene.morse_function
    curves = [None] * len(branches)
    for manifold, direction in (("unstable", 1), ("stable", -1)):
        picked = [i for i, b in enumerate(branches) if b[1] == manifold]
        if not picked:
            continue
        seeds = []
        start_ids = []
        for i in picked:
            sid, _, sign = branches[i]
            e_u, e_s = f.saddle_frames[sid]
            axis = np.array(e_u if manifold == "unstable" else e_s)
            seeds.append(np.array(f.point(sid).position) + sign * scene.ode.seed_offset * axis)
            start_ids.append(sid)
        paths, ends = _trace_curves(scene, seeds, direction, start_ids)
        for i, path, end in zip(picked, paths, ends):
            sid, _, sign = branches[i]
            start = np.array(f.point(sid).position)
            full = np.vstack([start, path, np.array(end.position)])
            if manifold == "unstable":
                curves[i] = FlowCurve(sid, end.id, sid, manifold, sign, full)
            else:
                curves[i] = FlowCurve(end.id, sid, sid, manifold, sign, full[::-1].copy())
    for c in curves:
        logger.debug(f"flow line {c.source} -> {c.target}: {len(c.points)} points")
    return curves


def flow_curve(scene, from_saddle, direction, manifold="unstable"):
    """
    The flow line leaving (``unstable``) or entering (``stable``) a saddle on
    the ``direction`` side (+1 or -1) of its eigenvector.
    """
    sign = 1 if direction in (1, "+") else -1
    return flow_curves(scene, [(from_saddle, manifold, sign)])[0]


def named_flow_curves(scene):
    """Every saddle branch of the scene keyed by (source, target)."""
    curves = flow_curves(scene, saddle_branches(scene))
    named = {}
    for c in curves:
        if c.key in named:
            raise DidNotConverge(f"two flow lines join {c.source} and {c.target}")
        named[c.key] = c
    return named

"""
s2-example: the worked examples on the round sphere, analytically and from
the gradient flow.

Families
--------
s            psi_s = (y + s) omega_0 with f = x^2 + 2y^2 + 3z^2
t            psi_t = (1 + t x + t z) omega_0
metric-eps   omega_0 with a shear bump of strength eps on the equator flow line
exact-alpha  d alpha for a bump one-form along two flow lines
perfect      p * omega_0 with the height function
"""
import logging
import math

import numpy as np

from core.errors import CrossCheckFailed, InequalityViolated
from core.morse_core import inequality_report
from data.file_io import FileIO
from geometry.flow import named_flow_curves
from geometry.forms import area_form, exterior_derivative, family_s, family_t, localized_one_form
from geometry.scene import ODESettings, SurfaceScene
from geometry.sphere_lab import (
    analytic_height_data,
    analytic_morse_data,
    classify_moduli,
    exact_form_cpsi,
    integrate_over_moduli,
    scene_to_morse_data,
    stokes_residuals,
)

logger = logging.getLogger(__name__)

FAMILIES = ("s", "t", "metric-eps", "exact-alpha", "perfect")
MODES = ("analytic", "numeric", "both")
NUMERIC_ONLY = ("metric-eps", "exact-alpha")
DEFAULT_PARAMS = {"s": 0.3, "t": 0.2, "metric-eps": 0.2, "exact-alpha": 1.0, "perfect": 1.0}
DEFAULT_GRID = (64, 128)
DEFAULT_STEP = 5e-3
CROSS_CHECK_RTOL = 0.01

_R = math.sqrt(0.5)
BUMP_CENTER = (_R, _R, 0.0)
BUMP_RADIUS = 0.5
ALPHA_CENTERS = ((0.0, _R, _R), (_R, _R, 0.0))
ALPHA_DIRECTIONS = ((0.0, _R, -_R), (_R, -_R, 0.0))
ALPHA_RADIUS = 0.3


def _psi(family, param):
    if family == "s":
        return family_s(param)
    if family == "t":
        return family_t(param)
    if family == "perfect":
        return area_form().scaled(param)
    if family == "metric-eps":
        return area_form()
    return exterior_derivative(bump_one_form(param))


def bump_one_form(amplitude):
    """Positive along the flow lines p2+ -> p1+ and p1+ -> p0+, zero near the others."""
    return localized_one_form(ALPHA_CENTERS, ALPHA_DIRECTIONS, radius=ALPHA_RADIUS,
                              amplitude=amplitude, tag=f"bump({amplitude})")


def _scene(family, param, grid, step):
    ode = ODESettings(step=step)
    if family == "perfect":
        return SurfaceScene.height(grid, ode)
    scene = SurfaceScene.quadratic(grid, ode)
    if family == "metric-eps":
        return scene.perturbed(BUMP_CENTER, BUMP_RADIUS, param)
    return scene


def _pairs_dict(values):
    return {f"{r}->{q}": v for (r, q), v in sorted(values.items())}


def _analytic(family, param):
    psi = _psi(family, param)
    if family == "perfect":
        data = analytic_height_data(psi)
    else:
        data = analytic_morse_data(psi)
    return data, {"cpsi": _pairs_dict(data.psi_integrals)}


def _numeric(family, param, grid, step, threads, cells_csv):
    psi = _psi(family, param)
    scene = _scene(family, param, grid, step)
    decomp = classify_moduli(scene, threads=threads)
    curves = named_flow_curves(scene)
    r0 = 0 if family == "exact-alpha" else None
    data = scene_to_morse_data(scene, psi, decomp, curves, name=f"{family}:numeric", r0=r0)
    integrals = integrate_over_moduli(decomp, psi)
    extra = {
        "scene": scene.describe(),
        "cpsi": _pairs_dict(integrals.values),
        "cpsi_errors": _pairs_dict(integrals.errors),
        "region_areas": _pairs_dict(decomp.areas()),
        "separatrix_fraction": decomp.separatrix_fraction(),
        "rank_tolerance": data.psi_tolerance,
    }
    if family == "exact-alpha":
        alpha = bump_one_form(param)
        extra["determinant"] = exact_form_cpsi(alpha, scene, curves).to_dict()
        residuals = stokes_residuals(decomp, alpha, psi, curves)
        extra["stokes"] = {f"{r}->{q}": {"boundary": b, "region": a}
                           for (r, q), (b, a) in sorted(residuals.items())}
    if cells_csv:
        FileIO(".").write_csv(decomp.to_frame(), cells_csv)
    return data, extra


def cross_check(analytic, numeric):
    """max |numeric - analytic| / max(max |analytic|, pi)"""
    keys = sorted(set(analytic.psi_integrals) | set(numeric.psi_integrals))
    diff = max((abs(numeric.psi_integrals.get(k, 0.0) - analytic.psi_integrals.get(k, 0.0))
                for k in keys), default=0.0)
    scale = max(max((abs(v) for v in analytic.psi_integrals.values()), default=0.0), math.pi)
    return diff / scale


def cmd_s2_example(config):
    """
    Run one sphere example.

    Returns:
        tuple: (payload dict, CSV rows)

    Raises:
        CrossCheckFailed: analytic and numeric c(psi) differ by more than 1%
        InequalityViolated: a report failed (the report is attached)
    """
    p = config.params
    family = p["family"]
    if family not in FAMILIES:
        raise ValueError(f"unknown family '{family}'")
    param = float(p.get("param") if p.get("param") is not None else DEFAULT_PARAMS[family])
    if not np.isfinite(param):
        raise ValueError("param must be finite")
    mode = p.get("mode") or "analytic"
    if mode not in MODES:
        raise ValueError(f"unknown mode '{mode}'")
    if family in NUMERIC_ONLY and mode != "numeric":
        logger.warning(f"family '{family}' has no closed form; running numerically")
        mode = "numeric"
    grid = tuple(p.get("grid") or DEFAULT_GRID)
    step = float(p.get("step") or DEFAULT_STEP)

    payload = {"command": "s2-example", "family": family, "param": param, "mode": mode}
    datasets = []
    if mode in ("analytic", "both"):
        data, extra = _analytic(family, param)
        payload["analytic"] = extra
        datasets.append(("analytic", data))
    if mode in ("numeric", "both"):
        payload["grid"] = list(grid)
        payload["step"] = step
        data, extra = _numeric(family, param, grid, step, config.threads, p.get("cells_csv"))
        payload["numeric"] = extra
        datasets.append(("numeric", data))

    if mode == "both":
        rel = cross_check(datasets[0][1], datasets[1][1])
        payload["cross_check"] = {"relative_difference": rel, "tolerance": CROSS_CHECK_RTOL,
                                  "passed": rel <= CROSS_CHECK_RTOL}
        if rel > CROSS_CHECK_RTOL:
            raise CrossCheckFailed(f"analytic and numeric c(psi) differ by {rel:.2%}", report=payload)

    rows = []
    payload["reports"] = {}
    for path, data in datasets:
        report = inequality_report(data, raise_on_violation=False)
        payload["reports"][path] = report.to_dict()
        rows.extend(report.to_rows())
        if not report.passed:
            raise InequalityViolated(f"{data.name}: a cone Morse check failed", report=report)
    logger.info(f"s2-example {family} ({mode}) finished")
    return payload, rows

"""Experiment runner: sampling -> fitting -> certification -> comparison.

Every random batch comes from a stream derived from ``(seed, purpose,
run_id)``, so results do not depend on execution order and certification
batches never share a stream with the batch a set was fitted on.
"""

import csv
import io
import json
import os
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .bridge import check_thm4, check_thm5, format_table, joint_parameterization, matched_params
from .certify import (
    conformal_adjust,
    conformal_index,
    empirical_conformal_certify,
    holdout_certify,
    max_discard_k,
    scenario_certify,
    scenario_discard,
    split_conformal_certify,
)
from .dynamics import (
    Gaussian,
    SampleBatch,
    SamplingSpec,
    UniformBall,
    UniformBox,
    derive_seed,
    draw_samples,
    duffing,
)
from .errors import DomainError, InfeasibleError
from .setrep import Ellipsoid, fit_mvee

__all__ = [
    "ExperimentConfig",
    "load_config",
    "cmd_sample",
    "cmd_fit",
    "cmd_certify",
    "cmd_bridge",
    "run_fig2",
    "run_fig3",
    "render_svg",
    "FIG3_SIZES",
]

# stream tags passed to derive_seed
FIT, TEST, CALIB, SYNTH = 0, 1, 2, 3

FIG3_SIZES = {"large": 72347, "small": 1047}


@dataclass
class ExperimentConfig:
    # Duffing parameters, horizon and initial set are placeholders: the
    # benchmark's published constants are not available here.
    zeta: float = 0.3
    t0: float = 0.0
    t1: float = 2.0
    h: float = 1e-3
    initial: object = field(default_factory=lambda: UniformBall(center=(0.5, 0.0), radius=0.5))
    disturbance: Optional[UniformBox] = None
    n_train: int = 1500
    m_test: int = 1500
    beta: float = 1e-9
    alpha: float = 0.05
    repetitions: int = 50
    refit: bool = False
    fig3_fit: str = "batch"
    fit_tol: float = 1e-7
    seed: int = 42
    out_dir: str = "out"

    def __post_init__(self):
        for name in ("n_train", "m_test", "repetitions"):
            if int(getattr(self, name)) < 1:
                raise DomainError(f"{name} must be positive")
        if not 0.0 < self.beta < 1.0 or not 0.0 < self.alpha < 1.0:
            raise DomainError("beta and alpha must lie in (0, 1)")
        if self.fig3_fit not in ("batch", "separate"):
            raise DomainError("fig3_fit must be 'batch' or 'separate'")

    def system(self):
        return duffing(zeta=self.zeta, t0=self.t0, t1=self.t1, h=self.h)

    def sampling(self, *stream):
        return SamplingSpec(self.initial, self.disturbance, derive_seed(self.seed, *stream))


def _distribution(table):
    kind = table.get("kind", "ball")
    if kind == "ball":
        return UniformBall(tuple(table["center"]), float(table["radius"]))
    if kind == "box":
        return UniformBox(tuple(table["low"]), tuple(table["high"]))
    if kind == "gaussian":
        return Gaussian(tuple(table["mean"]), tuple(map(tuple, table["cov"])))
    raise DomainError(f"unknown distribution kind {kind!r}")


def load_config(path=None, **overrides):
    """Read a TOML experiment file; keyword overrides win over file values.

    Recognised tables: ``[system]`` (zeta, t0, t1, h), ``[initial]``
    (kind = ball | box | gaussian), ``[disturbance]`` (kind = none | box) and
    ``[experiment]``; ``seed`` and ``out_dir`` may sit at top level.
    """
    data = {}
    if path is not None:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    kwargs = {}
    kwargs.update({k: v for k, v in data.get("system", {}).items() if k != "model"})
    if "initial" in data:
        kwargs["initial"] = _distribution(data["initial"])
    dist = data.get("disturbance", {})
    if dist.get("kind", "none") != "none":
        kwargs["disturbance"] = _distribution(dist)
    kwargs.update(data.get("experiment", {}))
    for key in ("seed", "out_dir"):
        if key in data:
            kwargs[key] = data[key]
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise DomainError(f"bad config: {exc}") from None


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _csv_text(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _write(path, text):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
    return path


# -- single-step commands --------------------------------------------------------


def cmd_sample(config, n=None, path=None):
    """Draw ``n`` (default ``n_train``) samples from the fitting stream and write a CSV."""
    n = config.n_train if n is None else n
    batch = draw_samples(config.system(), config.sampling(FIT), n)
    path = path or os.path.join(config.out_dir, "samples.csv")
    _write(path, batch.to_csv())
    return batch, path


def cmd_fit(samples_path, tol=1e-7, path=None):
    batch = SampleBatch.from_csv(samples_path)
    E = fit_mvee(batch, tol=tol)
    if path is not None:
        _write(path, E.to_json())
    return E


def cmd_certify(ellipsoid_path, samples_path, method, beta, alpha=None, exact=False, path=None):
    """Certify a stored ellipsoid against a stored batch.

    ``alpha`` is the conformal error rate for split-conformal and the
    accuracy epsilon for scenario-discard.  Returns the certificate and, for
    methods that move the set, the adjusted ellipsoid.
    """
    with open(ellipsoid_path) as fh:
        E = Ellipsoid.from_json(fh.read())
    batch = SampleBatch.from_csv(samples_path)
    adjusted = None
    if method == "holdout":
        cert = holdout_certify(E, batch, beta)
    elif method == "empirical-conformal":
        cert = empirical_conformal_certify(E, batch, beta)
    elif method in ("split-conformal", "scenario-discard"):
        if alpha is None:
            raise DomainError(f"{method} needs --alpha")
        if method == "split-conformal":
            adjusted, cert = split_conformal_certify(E, batch, alpha, beta)
        else:
            adjusted, cert = scenario_certify(E, batch, alpha, beta, exact=exact)
    else:
        raise DomainError(f"unknown method {method!r}")
    if path is not None:
        _write(path, cert.to_json())
    return cert, adjusted


def cmd_bridge(beta, config=None, S_cap=10**8):
    """Run every equivalence check; returns (reports, joint-parameter summary)."""
    reports = []
    for M in (10, 100, 1500, 72347):
        for k in (0, 1, 5, 50):
            if k < M:
                reports.append(check_thm4(k, M, beta))

    try:
        jp = joint_parameterization(beta, S_cap=S_cap)
        joint = {"feasible": True, "S": jp.S, "epsilon": jp.epsilon, "k_discard": jp.k_discard,
                 "residuals": list(jp.residuals)}
    except InfeasibleError as exc:
        S, eps = exc.last
        joint = {"feasible": False, "message": str(exc), "last_S": S, "last_epsilon": eps}

    # Synthetic batch with matched indices: exact threshold equality expected
    config = config or ExperimentConfig()
    S, eps = 1047, 0.05
    rng = np.random.default_rng(derive_seed(config.seed, SYNTH))
    batch = SampleBatch(rng.standard_normal((S, 2)))
    unit = Ellipsoid(np.eye(2), np.zeros(2))
    reports.append(check_thm5(unit, batch, matched_params(S, eps, beta)))
    # Same batch at the closed-form discard count: an index gap is expected
    k = max_discard_k(S, eps, beta)
    reports.append(check_thm5(unit, batch, replace(matched_params(S, eps, beta), k_discard=k)))
    return reports, joint


# -- figure experiments ---------------------------------------------------------------


def run_fig2(config, path=None):
    """Holdout vs. empirical conformal over ``repetitions`` fresh test batches.

    Each run scores the same test batch with both certifiers.  The set is
    fitted once from the training stream unless ``config.refit`` is set.
    Returns rows ``(run_id, method, k, epsilon)``.
    """
    sys = config.system()
    E = None
    if not config.refit:
        E = fit_mvee(draw_samples(sys, config.sampling(FIT), config.n_train), tol=config.fit_tol)
    rows = []
    for run in range(config.repetitions):
        if config.refit:
            E = fit_mvee(draw_samples(sys, config.sampling(FIT, run), config.n_train), tol=config.fit_tol)
        test = draw_samples(sys, config.sampling(TEST, run), config.m_test)
        ho = holdout_certify(E, test, config.beta)
        ec = empirical_conformal_certify(E, test, config.beta)
        rows.append((run, ho.method.value, ho.violations, ho.epsilon))
        rows.append((run, ec.method.value, ec.violations, ec.epsilon))
    if path is not None:
        _write(path, _csv_text(["run_id", "method", "k", "epsilon"], rows))
    return rows


@dataclass
class Fig3Result:
    rows: list
    initial: Ellipsoid
    conformal: Ellipsoid
    scenario: Ellipsoid
    batch: SampleBatch


def run_fig3(config, mode="small", path=None, svg_path=None, K=None):
    """Split conformal vs. scenario discarding on one shared batch.

    ``mode`` picks K = N (72,347 for "large", 1,047 for "small"); ``K``
    overrides it.  With ``fig3_fit = "batch"`` the initial ellipsoid is the
    scenario program solved on the shared batch itself; with "separate" it
    is fitted on ``n_train`` samples from an independent stream.
    Rows: ``(method, K, removed_count, threshold, volume_before, volume_after)``.
    """
    if K is None:
        if mode not in FIG3_SIZES:
            raise DomainError(f"mode must be one of {sorted(FIG3_SIZES)}")
        K = FIG3_SIZES[mode]
    sys = config.system()
    batch = draw_samples(sys, config.sampling(CALIB), K)
    if config.fig3_fit == "batch":
        E = fit_mvee(batch, tol=config.fit_tol)
    else:
        E = fit_mvee(draw_samples(sys, config.sampling(FIT), config.n_train), tol=config.fit_tol)

    eps = config.alpha
    cp = conformal_adjust(E, batch, config.alpha)
    k = max_discard_k(K, eps, config.beta, 1)
    so, c_star = scenario_discard(E, batch, k)
    before = E.volume()
    rows = [
        ("split-conformal", K, K - conformal_index(K, config.alpha), cp.level, before, cp.volume()),
        ("scenario-discard", K, k, c_star, before, so.volume()),
    ]
    if path is not None:
        _write(path, _csv_text(["method", "K", "removed_count", "threshold", "volume_before", "volume_after"], rows))
    if svg_path is not None:
        _write(svg_path, render_svg([
            ("conformal initial", E, "#002676", 1.0),
            ("conformal adjusted", cp, "#002676", 0.35),
            ("scenario initial", E, "#ff0080", 1.0),
            ("scenario adjusted", so, "#ff0080", 0.35),
        ], points=batch.states))
    return Fig3Result(rows, E, cp, so, batch)


def render_svg(outlines, points=None, size=600, pad=30):
    """SVG text with one path per ``(label, ellipsoid, colour, opacity)`` outline."""
    curves = [E.boundary(240) for _, E, _, _ in outlines]
    allpts = np.vstack(curves + ([points] if points is not None else []))
    lo, hi = allpts.min(axis=0), allpts.max(axis=0)
    scale = (size - 2 * pad) / float(max(hi - lo))

    def xy(p):
        return pad + (p[0] - lo[0]) * scale, size - pad - (p[1] - lo[1]) * scale

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
           f'<rect width="{size}" height="{size}" fill="white"/>']
    if points is not None:
        step = max(1, len(points) // 2000)
        for p in points[::step]:
            x, y = xy(p)
            out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1" fill="#888888"/>')
    for i, ((label, _, colour, opacity), curve) in enumerate(zip(outlines, curves)):
        d = " ".join(("M" if j == 0 else "L") + "{:.3f},{:.3f}".format(*xy(p)) for j, p in enumerate(curve)) + " Z"
        dash = ' stroke-dasharray="4,3"' if i >= 2 else ""
        out.append(f'<path d="{d}" fill="none" stroke="{colour}" stroke-opacity="{opacity}" stroke-width="2"{dash}>'
                   f"<title>{label}</title></path>")
        out.append(f'<text x="{pad}" y="{16 + 14 * i}" font-size="12" fill="{colour}" fill-opacity="{max(opacity, 0.6)}">'
                   f"{label}</text>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def reports_json(reports, joint):
    return json.dumps({"reports": [r.to_dict() for r in reports], "joint_parameterization": joint}, indent=2)


def bridge_table(reports, joint):
    lines = [format_table(reports), ""]
    if joint["feasible"]:
        lines.append(f"joint parameterization: S={joint['S']} epsilon={joint['epsilon']:.6g} k={joint['k_discard']}")
    else:
        lines.append(f"joint parameterization: infeasible ({joint['message']})")
    return "\n".join(lines)

"""Synthetic instances, parameter sweeps, trace files and SVG plots."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .graph import Graph, WgmModel, grid_graph, random_connected_support
from .objectives import Dataset, GradientAccount
from .solvers import METHODS, DivergenceError, SolverConfig, run_solver

__all__ = [
    "ExperimentSpec",
    "SpecError",
    "TraceRow",
    "TraceSet",
    "CSV_HEADER",
    "default_m",
    "gen_instance",
    "run_sweep",
    "write_traces",
    "read_traces",
    "emit_plot",
    "read_spec",
    "parse_spec",
]

CSV_HEADER = ("method", "seed", "s", "g", "eta", "B", "b", "epoch", "data_points",
              "residual", "est_error", "support_size", "elapsed_ms")


class SpecError(ValueError):
    """Malformed experiment spec; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key


def default_m(s: int) -> int:
    return max(60, math.ceil(2.5 * s))


def gen_instance(graph: Graph, model: WgmModel, m: int | None = None,
                 noise_sigma: float = 0.0, seed: int = 0):
    """Noisy linear measurements of a graph-sparse signal.

    ``x*`` has standard normal values on a random connected support; ``A``
    has iid standard normal entries so that ``A^T A / m`` is close to the
    identity on sparse vectors. Returns ``(dataset, x_star)``.
    """
    m = default_m(model.s) if m is None else int(m)
    if m < 1:
        raise ValueError("need at least one observation")
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be nonnegative")
    rng = np.random.default_rng(seed)
    supp = random_connected_support(graph, model.s, model.g, rng)
    x_star = np.zeros(graph.num_vertices)
    x_star[supp] = rng.standard_normal(len(supp))
    a = rng.standard_normal((m, graph.num_vertices))
    y = a @ x_star
    if noise_sigma > 0:
        y = y + noise_sigma * rng.standard_normal(m)
    return Dataset(a, y), x_star


# batch sizes may be given symbolically in specs
_SYMBOLIC = {"s", "n", "n/2"}


def _resolve(value, s, n):
    if value == "s":
        return s
    if value == "n":
        return n
    if value == "n/2":
        return max(1, n // 2)
    return int(value)


@dataclass(frozen=True)
class ExperimentSpec:
    rows: int = 16
    cols: int = 16
    s_values: tuple = (32,)
    g: int = 1
    eta_values: tuple = (0.01,)
    methods: tuple = ("graph-svrg",)
    B_values: tuple = ("s",)
    b_values: tuple = (1,)
    m_observations: int | None = None
    noise_sigma: float = 0.0
    trials: int = 1
    seed_base: int = 42
    x_axis: str = "epochs"
    max_epochs: float = 50.0
    residual_stop: float = 0.0
    scsg_option: str = "geometric"

    def __post_init__(self):
        for name in ("s_values", "eta_values", "methods", "B_values", "b_values"):
            val = tuple(getattr(self, name))
            if not val:
                raise SpecError(name, "sweep list is empty")
            object.__setattr__(self, name, val)
        for meth in self.methods:
            if meth not in METHODS:
                raise SpecError("methods", f"unknown method {meth!r}")
        if self.trials < 1:
            raise SpecError("trials", "need at least one trial")
        if self.x_axis not in ("epochs", "data_points"):
            raise SpecError("x_axis", "must be 'epochs' or 'data_points'")
        for name in ("B_values", "b_values"):
            for v in getattr(self, name):
                if not (v in _SYMBOLIC or (isinstance(v, int) and v >= 1)):
                    raise SpecError(name, f"bad batch size {v!r}")


class TraceRow(NamedTuple):
    method: str
    seed: int
    s: int
    g: int
    eta: float
    B: int
    b: int
    epoch: float
    data_points: int
    residual: float
    est_error: float | None
    support_size: int
    elapsed_ms: int | None

    @property
    def point(self):
        """Sweep coordinates without the seed."""
        return (self.method, self.s, self.g, self.eta, self.B, self.b)


@dataclass
class TraceSet:
    rows: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def runs(self):
        """``{(point, seed): [rows]}`` in row order."""
        out = {}
        for r in self.rows:
            out.setdefault((r.point, r.seed), []).append(r)
        return out

    def points(self):
        return sorted({r.point for r in self.rows}, key=_point_key)

    def first_below(self, level, key="epoch"):
        """``{point: [value per seed]}`` where value is the epoch (or data
        points) of the first checkpoint at or below ``level``, else ``inf``."""
        out = {}
        for (point, seed), rows in sorted(self.runs().items(),
                                          key=lambda kv: (_point_key(kv[0][0]), kv[0][1])):
            hit = next((getattr(r, key) for r in rows if r.residual <= level), math.inf)
            out.setdefault(point, []).append(float(hit))
        return out


def _point_key(point):
    method, s, g, eta, B, b = point
    return (s, g, eta, B, b, method)


def _row_key(r):
    return (_point_key(r.point), r.seed, r.data_points)


def _run_task(task):
    graph_dims, model, m, noise, eta, method, B, b, seed, spec_fields = task
    graph = grid_graph(*graph_dims)
    dataset, x_star = gen_instance(graph, model, m, noise, seed)
    n = dataset.n
    B_val = min(_resolve(B, model.s, n), n)
    b_val = min(_resolve(b, model.s, n), n)
    if method in ("sto-iht", "graph-sto-iht"):
        B_val = max(B_val, b_val)  # single-loop methods only use b
    else:
        b_val = min(b_val, B_val)
    config = SolverConfig(method=method, eta=eta, model=model, batch_B=B_val,
                          minibatch_b=b_val, seed=seed, **spec_fields)
    account = GradientAccount()
    label = (method, seed, model.s, model.g, eta, B_val, b_val)
    try:
        _, trace = run_solver(dataset, graph, config, account, x_star)
        failed = False
    except DivergenceError as exc:
        trace, failed = exc.trace, True
    rows = [TraceRow(*label, *vals) for vals in trace.rows()]
    if failed:
        dp = account.sample_gradients_evaluated
        rows.append(TraceRow(*label, dp / n, dp, math.nan, None, 0, None))
    return rows


def _tasks(spec: ExperimentSpec):
    extra = {"max_epochs": spec.max_epochs, "residual_stop": spec.residual_stop,
             "scsg_option": spec.scsg_option}
    for s in spec.s_values:
        model = WgmModel(int(s), spec.g)
        for eta in spec.eta_values:
            for B in spec.B_values:
                for b in spec.b_values:
                    for method in spec.methods:
                        for trial in range(spec.trials):
                            yield ((spec.rows, spec.cols), model, spec.m_observations,
                                   spec.noise_sigma, float(eta), method, B, b,
                                   spec.seed_base + trial, extra)


def run_sweep(spec: ExperimentSpec, jobs: int = 1, progress=None) -> TraceSet:
    """Run every sweep point, method and trial; rows come back sorted by sweep
    coordinates, seed and data points regardless of ``jobs``.

    Trial ``t`` uses seed ``seed_base + t`` for both the instance and the
    solver, so methods at the same point see the same data.
    """
    tasks = list(_tasks(spec))
    rows = []
    if jobs <= 1:
        for task in tasks:
            rows.extend(_run_task(task))
            if progress:
                progress(task)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for task, res in zip(tasks, pool.map(_run_task, tasks)):
                rows.extend(res)
                if progress:
                    progress(task)
    rows.sort(key=_row_key)
    return TraceSet(rows)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_traces(traces: TraceSet, path, include_timing: bool = False) -> None:
    """Write the trace CSV. Wall-clock times are left blank unless
    ``include_timing`` so that repeated sweeps give identical bytes."""
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in traces.rows:
        vals = list(r)
        if not include_timing:
            vals[-1] = None
        w.writerow([_fmt(v) for v in vals])
    try:
        path.write_text(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write traces to {path}: {exc.strerror}") from exc


def read_traces(path) -> TraceSet:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise OSError(f"cannot read traces from {path}: {exc.strerror}") from exc
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_HEADER:
        raise ValueError(f"{path}: unexpected header {header}")
    rows = []
    for k, rec in enumerate(reader, start=2):
        if len(rec) != len(CSV_HEADER):
            raise ValueError(f"{path}: line {k} has {len(rec)} fields")
        rows.append(TraceRow(
            rec[0], int(rec[1]), int(rec[2]), int(rec[3]), float(rec[4]),
            int(rec[5]), int(rec[6]), float(rec[7]), int(rec[8]), float(rec[9]),
            float(rec[10]) if rec[10] else None, int(rec[11]),
            int(rec[12]) if rec[12] else None))
    return TraceSet(rows)


_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#17becf", "#7f7f7f", "#bcbd22")


def _band(traces: TraceSet, key: str):
    """Per point: sorted x values with median and quartiles of log10 residual."""
    out = {}
    for point in traces.points():
        by_x = {}
        for r in traces.rows:
            if r.point != point or not np.isfinite(r.residual):
                continue
            by_x.setdefault(getattr(r, key), []).append(math.log10(max(r.residual, 1e-16)))
        xs = sorted(by_x)
        if not xs:
            continue
        q = np.array([np.percentile(by_x[x], [25, 50, 75]) for x in xs])
        out[point] = (np.array(xs, dtype=float), q)
    return out


def emit_plot(traces: TraceSet, path, x_axis: str = "epochs", title: str = "") -> None:
    """Static SVG: median log residual per (method, sweep point) as a polyline
    with the interquartile range shaded."""
    key = "epoch" if x_axis == "epochs" else "data_points"
    bands = _band(traces, key)
    W, H, L, R, T, Bm = 720, 440, 70, 200, 30, 50
    pw, ph = W - L - R, H - T - Bm
    if bands:
        xmax = max(float(xs[-1]) for xs, _ in bands.values()) or 1.0
        ylo = math.floor(min(float(q.min()) for _, q in bands.values()))
        yhi = math.ceil(max(float(q.max()) for _, q in bands.values()))
    else:
        xmax, ylo, yhi = 1.0, -1, 0
    if yhi == ylo:
        yhi = ylo + 1

    def sx(v):
        return L + pw * v / xmax

    def sy(v):
        return T + ph * (yhi - v) / (yhi - ylo)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" '
           f'viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">',
           f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>',
           f'<text x="{L}" y="18" font-size="13">{_esc(title)}</text>',
           f'<rect x="{L}" y="{T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for e in range(ylo, yhi + 1):
        y = sy(e)
        out.append(f'<line x1="{L - 4}" y1="{y:.2f}" x2="{L + pw}" y2="{y:.2f}" '
                   f'stroke="#ddd"/>')
        out.append(f'<text x="{L - 8}" y="{y + 4:.2f}" text-anchor="end">1e{e}</text>')
    for k in range(6):
        v = xmax * k / 5
        out.append(f'<text x="{sx(v):.2f}" y="{T + ph + 16}" text-anchor="middle">'
                   f'{v:.4g}</text>')
    out.append(f'<text x="{L + pw / 2}" y="{H - 10}" text-anchor="middle">'
               f'{"epoch" if key == "epoch" else "data points"}</text>')
    out.append(f'<text x="16" y="{T + ph / 2}" transform="rotate(-90 16 {T + ph / 2})" '
               f'text-anchor="middle">residual ||Ax - y||</text>')
    for k, (point, (xs, q)) in enumerate(bands.items()):
        color = _COLORS[k % len(_COLORS)]
        upper = " ".join(f"{sx(x):.2f},{sy(v):.2f}" for x, v in zip(xs, q[:, 2]))
        lower = " ".join(f"{sx(x):.2f},{sy(v):.2f}"
                         for x, v in zip(xs[::-1], q[::-1, 0]))
        out.append(f'<polygon points="{upper} {lower}" fill="{color}" '
                   f'fill-opacity="0.2" stroke="none"/>')
        med = " ".join(f"{sx(x):.2f},{sy(v):.2f}" for x, v in zip(xs, q[:, 1]))
        out.append(f'<polyline points="{med}" fill="none" stroke="{color}" '
                   f'stroke-width="1.5"/>')
        method, s, g, eta, B, b = point
        label = f"{method} s={s} g={g} eta={eta:g} B={B} b={b}"
        ly = T + 14 + 16 * k
        out.append(f'<line x1="{L + pw + 10}" y1="{ly - 4}" x2="{L + pw + 28}" '
                   f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{L + pw + 32}" y="{ly}">{_esc(label)}</text>')
    out.append("</svg>")
    path = Path(path)
    try:
        path.write_text("\n".join(out) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write plot to {path}: {exc.strerror}") from exc


def _esc(text):
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))


# spec-file keys and how to parse their values
def _int_list(v):
    return tuple(int(x) for x in _split(v))


def _float_list(v):
    return tuple(float(x) for x in _split(v))


def _batch_list(v):
    return tuple(x if x in _SYMBOLIC else int(x) for x in _split(v))


def _split(v):
    return [x.strip() for x in v.split(",") if x.strip()]


def _opt_int(v):
    return None if v.strip().lower() in ("", "auto", "default") else int(v)


_KEYS = {
    "rows": ("rows", int),
    "cols": ("cols", int),
    "s": ("s_values", _int_list),
    "g": ("g", int),
    "eta": ("eta_values", _float_list),
    "methods": ("methods", lambda v: tuple(_split(v))),
    "B": ("B_values", _batch_list),
    "b": ("b_values", _batch_list),
    "m": ("m_observations", _opt_int),
    "noise": ("noise_sigma", float),
    "trials": ("trials", int),
    "seed": ("seed_base", int),
    "x_axis": ("x_axis", str.strip),
    "epochs": ("max_epochs", float),
    "stop": ("residual_stop", float),
    "option": ("scsg_option", str.strip),
}

SPEC_KEYS = tuple(_KEYS)


def parse_spec(text: str, overrides: dict | None = None) -> ExperimentSpec:
    """Parse ``key = value`` lines (``#`` starts a comment). ``overrides`` maps
    keys to raw string values and wins over the text."""
    raw = {}
    for k, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SpecError(f"line {k}", f"expected 'key = value', got {line!r}")
        key, val = (part.strip() for part in line.split("=", 1))
        raw[key] = val
    raw.update(overrides or {})
    kwargs = {}
    for key, val in raw.items():
        if key not in _KEYS:
            raise SpecError(key, f"unknown key; expected one of {', '.join(_KEYS)}")
        name, conv = _KEYS[key]
        try:
            kwargs[name] = conv(val)
        except ValueError as exc:
            raise SpecError(key, f"cannot parse {val!r} ({exc})") from None
    return ExperimentSpec(**kwargs)


def read_spec(path, overrides: dict | None = None) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(str(path), f"cannot read spec file ({exc.strerror})") from exc
    return parse_spec(text, overrides)


def spec_fields():
    return [f.name for f in fields(ExperimentSpec)]

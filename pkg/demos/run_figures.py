"""Run the sweep specs in demos/specs and write one CSV and SVG per spec.

Usage: python3 demos/run_figures.py [OUTDIR] [--jobs N]

The component-count sweep reruns components.spec for g = 1, 2, 4. With three
trials and 30 epochs each spec takes between a few seconds and a few minutes
on one core.
"""
import argparse
from pathlib import Path

from graphiht.harness import emit_plot, read_spec, run_sweep, write_traces

HERE = Path(__file__).resolve().parent


def run(name, spec, out, jobs):
    traces = run_sweep(spec, jobs=jobs)
    write_traces(traces, out / f"{name}.csv")
    emit_plot(traces, out / f"{name}.svg", spec.x_axis, title=name)
    hits = traces.first_below(1e-3)
    print(f"{name}: {len(traces)} rows")
    for point, vals in hits.items():
        method, s, g, eta, B, b = point
        finals = [r.residual for r in traces.rows if r.point == point]
        print(f"  {method:14s} s={s:<4d} g={g} eta={eta:<6g} B={B:<4d} b={b:<4d} "
              f"last residual {finals[-1]:.3g}  epochs to 1e-3 {sorted(vals)}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out", nargs="?", default="figures")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for path in sorted((HERE / "specs").glob("*.spec")):
        if path.stem == "components":
            for g in (1, 2, 4):
                run(f"components_g{g}", read_spec(path, {"g": str(g)}), out, args.jobs)
        else:
            run(path.stem, read_spec(path), out, args.jobs)


if __name__ == "__main__":
    main()

"""Command-line front end: ``levymf <command> [options]``.

Every run writes ``manifest.json`` into ``--out`` with the resolved
configuration; ``levymf --manifest <file>`` reruns it (``--out`` and
``--threads`` may be overridden without changing any CSV byte).

Exit codes: 0 success (possibly with per-cell failures listed in the
manifest), 1 total failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys

import numpy as np

from . import __version__
from . import io as lio
from .errors import ParameterError, ProtocolError

log = logging.getLogger("levymf")

FORMATS = ("csv", "json", "svg")


class ConfigError(Exception):
    pass


def parse_grid(text):
    """``"a:b:step"`` (inclusive of ``b`` up to rounding) or ``"x,y,z"``."""
    text = str(text).strip()
    try:
        if ":" in text:
            a, b, step = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ValueError("step must be positive")
            n = int(math.floor((b - a) / step + 1e-9)) + 1
            return [round(a + k * step, 12) for k in range(n)]
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from None


def parse_ints(text):
    try:
        return [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad integer list {text!r}") from exc


class Run:
    """Output directory, format selection and the manifest being assembled."""

    def __init__(self, command, config, seed, threads, out, formats):
        self.command = command
        self.config = config
        self.seed = seed
        self.threads = threads
        self.out = out
        self.formats = formats
        self.outputs = []
        self.failures = []
        os.makedirs(out, exist_ok=True)

    def path(self, name):
        self.outputs.append(name)
        return os.path.join(self.out, name)

    def table(self, name, header, rows):
        rows = list(rows)
        if "csv" in self.formats:
            lio.write_csv(self.path(name + ".csv"), header, rows)
        if "json" in self.formats:
            recs = [dict(zip(header, (_jsonable(v) for v in r))) for r in rows]
            lio.atomic_write_text(self.path(name + ".json"), json.dumps(recs, indent=1) + "\n")

    def svg(self, name, fn, *args, **kw):
        if "svg" in self.formats:
            fn(self.path(name + ".svg"), *args, **kw)

    def manifest(self, extra=None):
        m = {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "seed_rule": lio.SEED_RULE,
            "threads": self.threads,
            "format": sorted(self.formats),
            "outputs": self.outputs,
            "failures": self.failures,
            "version": __version__,
        }
        if extra:
            m.update(extra)
        lio.atomic_write_text(os.path.join(self.out, "manifest.json"), json.dumps(m, indent=2, default=_jsonable) + "\n")


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (tuple, list)):
        return [_jsonable(x) for x in v]
    return v


# ---------------------------------------------------------------------------
# commands


def cmd_fit(run, cfg):
    from . import stable

    W = lio.read_weight_file(cfg["weights"])
    rows, cols = W.shape
    x = W.astype(float).ravel()
    st = stable.fit(x)
    ga = stable.fit_gaussian(x)
    report = {
        "file": cfg["weights"],
        "rows": rows,
        "cols": cols,
        "stable": st.to_dict(),
        "gaussian": ga.to_dict(),
        "pvalue_ratio": (st.ks_pvalue / ga.ks_pvalue) if ga.ks_pvalue > 0 else None,
        "Dw_stable": stable.normalized_scale(st.params.sigma, st.params.alpha, rows, cols),
        "Dw_gaussian": stable.normalized_scale(ga.params.sigma, 2.0, rows, cols),
    }
    text = json.dumps(report, indent=2, default=_jsonable) + "\n"
    lio.atomic_write_text(run.path("fit.json"), text)
    print(text, end="")


def cmd_sample(run, cfg):
    from . import stable

    p = stable.StableParams(cfg["alpha"], cfg["beta"], cfg["sigma"], cfg["mu"])
    x = stable.sample(p, cfg["rows"] * cfg["cols"], lio.derive_seed(run.seed, "sample"))
    lio.write_weight_file(run.path("samples.bin"), x.reshape(cfg["rows"], cfg["cols"]))
    run.outputs.append("samples.bin.json")


def cmd_meanfield(run, cfg):
    from . import meanfield as mf

    q = mf.trajectory(cfg["alpha"], cfg["dw"], cfg["db"], cfg["q0"], cfg["layers"])
    run.table("trajectory", ["layer", "q"], [(l, v) for l, v in enumerate(q)])
    fp = mf.fixed_point(cfg["alpha"], cfg["dw"], cfg["db"], cfg["q0"])
    run.table("fixed_point", ["alpha", "Dw", "Db", "qstar", "iterations", "converged"],
              [(cfg["alpha"], cfg["dw"], cfg["db"], fp.qstar, fp.iterations, fp.converged)])
    run.svg("trajectory", _plot("line_svg"), np.arange(q.size), [q], "layer", "q")


def cmd_transition_line(run, cfg):
    from . import meanfield as mf

    rows = []
    for a in parse_grid(cfg["alphas"]):
        try:
            r = mf.transition_line([a], cfg["db"], cfg["threshold"], cfg["q0"])[0]
            rows.append((r[0], r[1], r[1] ** (1.0 / r[0]), r[2], r[3]))
        except Exception as exc:
            run.failures.append({"alpha": a, "error": f"{type(exc).__name__}: {exc}"})
    if not rows:
        raise RuntimeError("no transition point could be computed")
    run.table("transition_line", ["alpha", "Dw_bar", "dw_root", "qstar", "iterations"], rows)
    run.svg("transition_line", _plot("line_svg"), [r[0] for r in rows], [[r[2] for r in rows]], "alpha", "Dw_bar^(1/alpha)")


def cmd_spectrum(run, cfg):
    from . import spectra as sp

    a, Dw = cfg["alpha"], cfg["dw_root"] ** cfg["alpha"]
    model = sp.SpectralModel.build(a, Dw, cfg["db"], n_mc=cfg["n_mc"], seed=lio.derive_seed(run.seed, "model"))
    rd = sp.radial_density(model, n_radii=cfg["n_radii"])
    run.table("density", ["radius", "rho", "ystar"], zip(rd.radii, rd.density, rd.ystar))
    extra = {"total_mass": rd.total_mass, "characteristic_radius": sp.characteristic_radius(model),
             "qstar": model.qstar, "clamped": int(rd.clamped.sum())}
    z = np.array([], dtype=complex)
    if cfg["realizations"] > 0:
        z = sp.jacobian_eigenvalues(a, Dw, cfg["N"], cfg["realizations"], lio.derive_seed(run.seed, "empirical"),
                                    Db=cfg["db"], qstar=model.qstar)
        run.table("empirical", ["re", "im"], zip(z.real, z.imag))
    run.svg("spectrum", _plot("spectrum_svg"), z, rd.radii, rd.density)
    return extra


def cmd_phase_diagram(run, cfg):
    from . import phase as ph

    grid = ph.phase_diagram(parse_grid(cfg["alphas"]), parse_grid(cfg["dw_roots"]), cfg["db"],
                            tuple(parse_ints(cfg["f2_L"])), cfg["n_mc"], run.seed, run.threads)
    for key, err in sorted(grid.errors.items(), key=str):
        run.failures.append({"job": list(key), "error": err})
    if np.all(np.isnan(grid.ratio_f1)):
        raise RuntimeError("every phase-grid cell failed")
    run.table("phase_grid", grid.header, grid.rows())
    run.table("contours", ["L", "alpha", "dw_root"],
              [(L, a, d) for L, pts in grid.contours().items() for a, d in pts])
    run.table("transition", ["alpha", "Dw_bar", "dw_root"],
              [(a, d, d ** (1.0 / a)) for a, d in zip(grid.alphas, grid.Dw_bar)])
    run.svg("phase_diagram", _plot("heatmap_svg"), grid.alphas, grid.dw_roots, grid.max_L, "max L",
            grid.Dw_bar ** (1.0 / grid.alphas), grid.contours())
    return {"total_mass_range": [float(np.nanmin(grid.total_mass)), float(np.nanmax(grid.total_mass))]}


def cmd_manifold(run, cfg):
    from . import geometry as geo
    from . import network as nw

    if cfg["alphas"] and cfg["dw_roots"]:
        layers = tuple(parse_ints(cfg["cv_layers"]))
        cmap = geo.cv_phase_map(parse_grid(cfg["alphas"]), parse_grid(cfg["dw_roots"]), cfg["ensembles"],
                                run.seed, layers, run.threads, N=cfg["N"], L=cfg["L"],
                                n_points=cfg["points"], q0=cfg["q0"], Db=cfg["db"])
        for key, err in sorted(cmap.errors.items()):
            run.failures.append({"job": list(key), "error": err})
        if np.all(np.isnan(cmap.cv_mean)):
            raise RuntimeError("every cv-map cell failed")
        run.table("cv_map", cmap.header, cmap.rows())
        run.table("transition", ["alpha", "dw_root"], list(zip(cmap.alphas, cmap.transition)))
        for k, layer in enumerate(layers):
            name = "cv_map" if k == len(layers) - 1 else f"cv_map_L{layer}"
            run.svg(name, _plot("heatmap_svg"), cmap.alphas, cmap.dw_roots, cmap.cv_mean[:, :, k],
                    f"cv at layer {layer}", cmap.transition)
        return None
    a = cfg["alpha"]
    spec = nw.NetworkSpec(alpha=a, Dw=cfg["dw_root"] ** a, Db=cfg["db"], N=cfg["N"], L=cfg["L"])
    net = nw.init(spec, lio.derive_seed(run.seed, "net"))
    circle = geo.great_circle(cfg["N"], cfg["q0"], cfg["points"], lio.derive_seed(run.seed, "circle"), a)
    cloud = geo.propagate(net, circle)
    coords, variances, cvs = [], [], []
    for l, pts in enumerate(cloud.points):
        proj, var = geo.pca(pts, 3)
        coords += [(t, l, *p) for t, p in zip(cloud.thetas, proj)]
        variances += [(l, k + 1, v) for k, v in enumerate(var[:10])]
        c = geo.pairwise_cv(pts)
        cvs.append((l, c.cv, c.collapsed))
    run.table("cloud", ["theta", "layer", "coord1", "coord2", "coord3"], coords)
    run.table("pc_variances", ["layer", "component", "variance"], variances)
    run.table("cv", ["layer", "cv", "collapsed"], cvs)
    run.svg("cv", _plot("line_svg"), [c[0] for c in cvs], [[c[1] for c in cvs]], "layer", "pairwise cv")
    return None


def cmd_fractal(run, cfg):
    from . import multifractal as mfr

    qs = parse_grid(cfg["q_grid"])
    sizes = parse_ints(cfg["sizes"])
    if cfg["alphas"] and cfg["dw_roots"]:
        grid = mfr.dq_grid(parse_grid(cfg["alphas"]), parse_grid(cfg["dw_roots"]), qs, sizes, cfg["realizations"],
                           lio.derive_seed(run.seed, "fractal"), cfg["db"], run.threads)
        for key, err in sorted(grid.errors.items()):
            run.failures.append({"job": list(key), "error": err})
        if np.all(np.isnan(grid.Dq)):
            raise RuntimeError("every fractal-grid cell failed")
        run.table("dq_grid", grid.header, grid.rows())
        k = int(np.argmin(np.abs(np.array(qs) - 2.0)))
        run.svg("dq_grid", _plot("heatmap_svg"), grid.alphas, grid.dw_roots, grid.Dq[:, :, k],
                f"D_q at q = {qs[k]:g}", grid.transition)
        return None
    a = cfg["alpha"]
    est = mfr.dq_spectrum(a, cfg["dw_root"] ** a, qs, sizes, cfg["realizations"], lio.derive_seed(run.seed, "fractal"),
                          Db=cfg["db"])
    run.table("dq", ["q", "Dq_mean", "Dq_std", "fit_r2", "reported"], [e.to_row() for e in est])
    run.svg("dq", _plot("line_svg"), qs, [[e.Dq_mean for e in est]], "q", "D_q", yerr=[[e.Dq_std for e in est]])


def _plot(name):
    from . import plotting

    return getattr(plotting, name)


COMMANDS = {
    "fit": cmd_fit,
    "sample": cmd_sample,
    "meanfield": cmd_meanfield,
    "transition-line": cmd_transition_line,
    "spectrum": cmd_spectrum,
    "phase-diagram": cmd_phase_diagram,
    "manifold": cmd_manifold,
    "fractal": cmd_fractal,
}


def build_parser():
    p = argparse.ArgumentParser(prog="levymf", description="Mean-field theory of heavy-tailed random networks.")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--threads", type=int, default=1, help="worker processes for grid sweeps")
    p.add_argument("--out", default=None, help="output directory (default: ./out)")
    p.add_argument("--format", default="csv,svg", help="comma list from csv,json,svg")
    p.add_argument("--manifest", default=None, help="rerun the configuration stored in a manifest")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("fit", help="fit stable and Gaussian laws to a weight file")
    s.add_argument("weights")

    s = sub.add_parser("sample", help="write stable samples as a weight file")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--beta", type=float, default=0.0)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--mu", type=float, default=0.0)
    s.add_argument("--rows", type=int, default=1)
    s.add_argument("--cols", type=int, default=100_000)

    s = sub.add_parser("meanfield", help="fluctuation-parameter trajectory and fixed point")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--dw", type=float, required=True)
    s.add_argument("--db", type=float, default=0.0)
    s.add_argument("--q0", type=float, default=1.0)
    s.add_argument("--layers", type=int, default=20)

    s = sub.add_parser("transition-line", help="ordered transition Dw_bar(alpha)")
    s.add_argument("--alphas", default="1.0:2.0:0.05")
    s.add_argument("--db", type=float, default=0.0)
    s.add_argument("--q0", type=float, default=1.0)
    s.add_argument("--threshold", type=float, default=0.01)

    s = sub.add_parser("spectrum", help="theoretical and empirical Jacobian spectra")
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--dw-root", type=float, required=True)
    s.add_argument("--db", type=float, default=0.0)
    s.add_argument("--n-mc", type=int, default=100_000)
    s.add_argument("--n-radii", type=int, default=200)
    s.add_argument("--N", type=int, default=1000)
    s.add_argument("--realizations", type=int, default=5)

    s = sub.add_parser("phase-diagram", help="Jacobian-average ratios over an (alpha, Dw^(1/alpha)) grid")
    s.add_argument("--alphas", default="1.0:2.0:0.05")
    s.add_argument("--dw-roots", default="0.25:3.0:0.05")
    s.add_argument("--db", type=float, default=0.0)
    s.add_argument("--n-mc", type=int, default=100_000)
    s.add_argument("--f2-L", default=",".join(str(L) for L in range(1, 102, 10)))

    s = sub.add_parser("manifold", help="propagate a great circle; cv maps with --alphas/--dw-roots")
    s.add_argument("--alpha", type=float, default=1.2)
    s.add_argument("--dw-root", type=float, default=1.5)
    s.add_argument("--db", type=float, default=0.0)
    s.add_argument("--N", type=int, default=500)
    s.add_argument("--L", type=int, default=20)
    s.add_argument("--points", type=int, default=200)
    s.add_argument("--q0", type=float, default=1.0)
    s.add_argument("--alphas", default=None)
    s.add_argument("--dw-roots", default=None)
    s.add_argument("--ensembles", type=int, default=100)
    s.add_argument("--cv-layers", default="5,10,15,20")

    s = sub.add_parser("fractal", help="fractal dimensions of Jacobian eigenvectors; grids with --alphas/--dw-roots")
    s.add_argument("--alpha", type=float, default=1.2)
    s.add_argument("--dw-root", type=float, default=1.5)
    s.add_argument("--alphas", default=None)
    s.add_argument("--dw-roots", default=None)
    s.add_argument("--db", type=float, default=0.0)
    s.add_argument("--q-grid", default="0.5,1.5,2,3,4")
    s.add_argument("--sizes", default="256,512,1024,2048,4096")
    s.add_argument("--realizations", type=int, default=20)
    return p


GLOBAL_KEYS = ("seed", "threads", "out", "format", "manifest", "verbose", "command")


def _resolve(args):
    if args.manifest:
        try:
            with open(args.manifest) as fh:
                m = json.load(fh)
            command, config, seed = m["command"], m["config"], m["seed"]
            formats = set(m.get("format", ["csv", "svg"]))
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"cannot read manifest {args.manifest}: {exc}") from None
        out = args.out or os.path.dirname(os.path.abspath(args.manifest))
        return command, config, seed, formats, out
    if not args.command:
        raise ConfigError("a command is required")
    config = {k: v for k, v in vars(args).items() if k not in GLOBAL_KEYS}
    formats = {f.strip() for f in args.format.split(",") if f.strip()}
    if not formats <= set(FORMATS):
        raise ConfigError(f"unknown format in {args.format!r}; choose from {FORMATS}")
    return args.command, config, args.seed, formats, args.out or "out"


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("levymf: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        command, config, seed, formats, out = _resolve(args)
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        run = Run(command, config, seed, args.threads, out, formats)
        extra = COMMANDS[command](run, config)
    except (ConfigError, ParameterError, ProtocolError) as exc:
        print(f"levymf: configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        log.debug("failure", exc_info=True)
        print(f"levymf: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    run.manifest(extra)
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command line interface.

Every subcommand accepts, after its name, the global options ``--seed``, ``--threads``,
``--out``, ``--format`` and ``--config``.  A config file holds ``key =
value`` lines whose keys are option names (dashes or underscores); explicit
command line options override it, and it overrides the built-in defaults.

Exit codes: 0 success, 2 hypothesis violation, 3 accuracy failure, 4 I/O
error, 1 any other library error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from . import bandlimited_quasi as bq
from . import interpolator as ip
from . import lagrange_kernel as lk
from . import multiplier_analysis as ma
from . import theta_multiplier as tm
from .errors import AccuracyError, CardinalError, HypothesisError, ParameterError

EXIT_OK, EXIT_OTHER, EXIT_HYPOTHESIS, EXIT_ACCURACY, EXIT_IO = 0, 1, 2, 3, 4


def _floats(text: str) -> list:
    return [math.inf if t.strip() == "inf" else float(t) for t in str(text).split(",") if t.strip()]


def _p(text: str):
    return "inf" if str(text).strip() == "inf" else float(text)


def read_config(path: str) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for num, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{num}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


class _Parser(argparse.ArgumentParser):
    """Reports usage errors as :class:`ParameterError` (exit code 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ParameterError(message)


def _common() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--threads", type=int, default=1)
    g.add_argument("--out", default="-", help="output path, '-' for stdout")
    g.add_argument("--format", choices=("csv", "json"), default="csv")
    g.add_argument("--config", default=None, help="key = value defaults file")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="gausscardinal",
                     description="Cardinal interpolation with Gaussians.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        return sub.add_parser(name, parents=[common], help=help_)

    s = add("multiplier", "evaluate m_h or its derivatives")
    s.add_argument("--h", type=float, required=True)
    s.add_argument("--xi", type=_floats, required=True, help="comma separated frequencies")
    s.add_argument("--deriv", type=int, choices=(0, 1, 2), default=0)

    s = add("lagrange", "Lagrange coefficients and samples")
    s.add_argument("--h", type=float, required=True)
    s.add_argument("--dim", type=int, choices=(1, 2), default=1)
    s.add_argument("--n", type=int, default=None, help="coefficient radius N")
    s.add_argument("--fine", type=int, default=8)

    s = add("interp", "interpolate lattice data")
    s.add_argument("--h", type=float, required=True)
    s.add_argument("--data", required=True, help="CSV with columns j1[,j2],value")
    s.add_argument("--fine", type=int, default=8)
    s.add_argument("--route", choices=("point", "spectral"), default="spectral")

    s = add("cutoff", "tabulate the smooth cutoff")
    s.add_argument("--eps", type=float, default=1.0)

    s = add("quasi", "band-limited quasi-interpolant of lattice data")
    s.add_argument("--h", type=float, required=True)
    s.add_argument("--eps", type=float, default=1.0)
    s.add_argument("--data", required=True)
    s.add_argument("--fine", type=int, default=8)

    s = add("analyze", "bracket multiplier norms")
    s.add_argument("--h-list", type=_floats, required=True)
    s.add_argument("--p", type=_p, default="inf")
    s.add_argument("--budget", type=int, default=200)

    s = add("decay", "inverse transform profile of m_h")
    s.add_argument("--h", type=float, required=True)
    s.add_argument("--xmax", type=float, default=20.0)
    s.add_argument("--samples", type=int, default=2001)

    s = add("sweep", "convergence, log-factor or quasi-rate sweep")
    s.add_argument("--target", default="bspline3")
    s.add_argument("--dim", type=int, default=1)
    s.add_argument("--p", type=_p, default=2.0)
    s.add_argument("--k", type=int, default=3)
    s.add_argument("--h-list", type=_floats, default=None)
    s.add_argument("--kind", choices=("convergence", "logfactor", "quasi"), default="convergence")
    s.add_argument("--fine", type=int, default=8)
    s.add_argument("--eps", type=float, default=1.0)

    s = add("stability", "estimate Q_p(h) over random band-limited functions")
    s.add_argument("--eps", type=float, default=1.0)
    s.add_argument("--p", type=_p, default=2.0)
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--h-list", type=_floats, default=_floats("0.5,0.25,0.125,0.0625,0.03125"))
    s.add_argument("--trials", type=int, default=32)

    add("verify", "run the deterministic invariant suite")
    return parser


def _config_path(argv) -> str | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def parse_args(argv=None):
    """Parse ``argv`` with config-file defaults layered under the command line."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    path = _config_path(argv)
    command = next((t for t in argv if t in COMMANDS), None)
    if path and command:
        cfg = read_config(path)
        sub = parser._subparsers._group_actions[0].choices[command]  # noqa: SLF001
        actions = {a.dest: a for a in sub._actions}  # noqa: SLF001
        unknown = sorted(set(cfg) - set(actions))
        if unknown:
            raise ParameterError(f"unknown config keys: {', '.join(unknown)}")
        for key in cfg:
            actions[key].required = False
        sub.set_defaults(**cfg)
    return parser.parse_args(argv)


def _table(blocks, fmt: str) -> str:
    """Render ``[(header, rows), ...]`` as consecutive CSV blocks or one JSON object."""
    if fmt == "json":
        obj = {"blocks": [{"columns": list(hdr), "rows": [[float(v) if isinstance(v, (float, np.floating))
                                                           else v for v in r] for r in rows]}
                          for hdr, rows in blocks]}
        return json.dumps(obj, sort_keys=True, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for i, (hdr, rows) in enumerate(blocks):
        if i:
            buf.write("\n")
        w.writerow(hdr)
        w.writerows([[repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r]
                     for r in rows])
    return buf.getvalue()


def _write(text: str, path: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def read_lattice_csv(path: str, h: float, decay_flag: bool = True) -> ip.SampledField:
    """Load ``j1[,j2],value`` rows into a centred cube of samples."""
    with open(path, encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]
    if not rows:
        raise ParameterError(f"{path}: no data rows")
    dim = len(rows[0]) - 1
    if dim not in (1, 2) or any(len(r) != dim + 1 for r in rows):
        raise ParameterError(f"{path}: expected columns j1[,j2],value")
    idx = np.array([[int(float(c)) for c in r[:dim]] for r in rows])
    vals = np.array([float(r[dim]) for r in rows])
    N = int(np.abs(idx).max()) + 1
    cube = np.zeros((2 * N + 1,) * dim)
    cube[tuple((idx + N).T)] = vals
    return ip.SampledField(h, cube, decay_flag)


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _grid_rows(nodes, values):
    if values.ndim == 1:
        return (("x", "value"), list(zip(nodes, values)))
    X1, X2 = np.meshgrid(nodes, nodes, indexing="ij")
    return (("x1", "x2", "value"), list(zip(X1.ravel(), X2.ravel(), values.ravel())))


def cmd_multiplier(a):
    ctx = tm.MultiplierContext(a.h)
    fn = {0: tm.m, 1: tm.m_prime, 2: tm.m_second}[a.deriv]
    xi = np.asarray(a.xi, dtype=float)
    vals = np.atleast_1d(np.asarray(fn(ctx, xi)))
    return _table([(("xi", "value"), list(zip(xi, vals)))], a.format)


def cmd_lagrange(a):
    grid = lk.GridSpec(a.h, a.dim, coeff_radius=a.n)
    table = lk.chi_table(grid, a.fine)
    blocks = []
    j = np.arange(-grid.N, grid.N + 1)
    if table.coeffs is not None:
        if a.dim == 1:
            blocks.append((("j", "b_j"), [(int(i), b) for i, b in zip(j, table.coeffs)]))
        else:
            J1, J2 = np.meshgrid(j, j, indexing="ij")
            blocks.append((("j1", "j2", "b_j"), [(int(p), int(q), b) for p, q, b in
                                                 zip(J1.ravel(), J2.ravel(), table.coeffs.ravel())]))
    if a.dim == 1:
        blocks.append((("x", "chi"), list(zip(table.nodes, table.samples))))
    else:
        X1, X2 = np.meshgrid(table.nodes, table.nodes, indexing="ij")
        blocks.append((("x1", "x2", "chi"),
                       list(zip(X1.ravel(), X2.ravel(), table.samples.ravel()))))
    return _table(blocks, a.format)


def cmd_interp(a):
    field = read_lattice_csv(a.data, a.h)
    if a.route == "spectral":
        nodes, vals = ip.interpolate_grid_spectral(field, tm.MultiplierContext(a.h), a.fine)
        hdr, rows = _grid_rows(nodes, vals)
        return _table([(hdr, rows)], a.format)
    N = lk.recommended_coeff_radius(a.h)
    box = a.h * field.radius
    table = lk.chi_table(lk.GridSpec(a.h, field.dim, coeff_radius=N))
    keep = int(math.floor(box * a.fine / a.h + 1e-9))
    nodes = (a.h / a.fine) * np.arange(-keep, keep + 1)
    if field.dim == 1:
        vals = np.asarray(ip.interpolate_point(field, table, nodes))
    else:
        pts = np.stack(np.meshgrid(nodes, nodes, indexing="ij"), axis=-1)
        vals = np.asarray(ip.interpolate_point(field, table, pts))
    return _table([_grid_rows(nodes, vals)], a.format)


def cmd_cutoff(a):
    spec = bq.build_cutoff(a.eps)
    t = spec.table_nodes[spec.table_nodes <= spec.phi_radius]
    return _table([(("xi", "rho_hat"), list(zip(spec.freq_grid, spec.rho_hat_values))),
                   (("t", "phi"), list(zip(t, bq.phi_eval(spec, t))))], a.format)


def cmd_quasi(a):
    field = read_lattice_csv(a.data, a.h)
    qi = bq.quasi_interpolant(field, bq.build_cutoff(a.eps))
    nodes, vals = qi.grid(a.fine)
    return _table([_grid_rows(nodes, vals)], a.format)


def cmd_analyze(a):
    rows = []
    for h in a.h_list:
        est = ma.mp_norm_bounds(tm.MultiplierContext(h), a.p, a.budget, a.seed)
        rows.append((h, "inf" if est.p == math.inf else est.p, est.lower, est.upper))
    return _table([(("h", "p", "lower", "upper"), rows)], a.format)


def cmd_decay(a):
    prof = ma.inverse_transform_profile(tm.MultiplierContext(a.h), a.xmax, a.samples)
    return _table([(("x", "value"), list(zip(prof.x, prof.values))),
                   (("c1", "c2"), [(prof.c1, prof.c2)])], a.format)


def _config(a, **extra):
    from .experiments.runs import RunConfig

    return RunConfig(seed=a.seed, threads=a.threads, **extra)


def cmd_sweep(a):
    from .experiments import runs, targets
    from .experiments.report import emit_report

    target = targets.by_name(a.target, a.dim)
    hs = a.h_list
    if hs is None:
        hs = [2.0**-i for i in (range(1, 5) if a.dim > 1 else range(2, 7))]
    cfg = _config(a, fine_factor=a.fine, eps=a.eps)
    if a.kind == "convergence":
        rep = runs.run_convergence(target, a.p, a.k, hs, cfg)
    elif a.kind == "logfactor":
        rep = runs.run_logfactor_probe(target, hs, a.p, a.k, cfg)
    else:
        rep = runs.run_quasi_rate(target, bq.build_cutoff(a.eps), hs, a.p, a.k, cfg)
    return emit_report(rep, a.format)


def cmd_stability(a):
    from .experiments import runs
    from .experiments.report import emit_report

    rep = runs.run_stability(a.eps, a.p, a.k, a.h_list, a.trials, _config(a, eps=a.eps))
    return emit_report(rep, a.format)


def cmd_verify(a):
    from .experiments.report import emit_report
    from .experiments.verify import run_verify

    rep = run_verify(a.seed, a.threads)
    text = emit_report(rep, a.format)
    if not rep.extras["all_passed"]:
        failed = [k[:-7] for k, v in rep.extras.items() if k.endswith("_passed") and not v]
        _write(text, a.out)
        raise AccuracyError(f"invariant checks failed: {', '.join(failed)}")
    return text


COMMANDS = {
    "multiplier": cmd_multiplier,
    "lagrange": cmd_lagrange,
    "interp": cmd_interp,
    "cutoff": cmd_cutoff,
    "quasi": cmd_quasi,
    "analyze": cmd_analyze,
    "decay": cmd_decay,
    "sweep": cmd_sweep,
    "stability": cmd_stability,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        text = COMMANDS[args.command](args)
        _write(text, args.out)
    except HypothesisError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except AccuracyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ACCURACY
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CardinalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER
    return EXIT_OK

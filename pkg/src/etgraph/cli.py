"""Command line interface: ``etgraph <subcommand> ...``.

Exit codes: 0 success, 2 validation error, 3 numerical non-convergence.
Errors are reported as a JSON object on stderr.  Output files are written
to a temporary name and renamed into place.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import graph as gr
from . import numerics, quantize, scatmat, spectral, stats

EXIT_OK, EXIT_VALIDATION, EXIT_NONCONVERGENCE = 0, 2, 3
FAMILIES = [f.value for f in scatmat.Family]


class UsageError(Exception):
    pass


class NonConvergence(Exception):
    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail or {}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- output helpers --------------------------------------------------------------


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def emit(text: str, out) -> None:
    if out:
        atomic_write(out, text)
    else:
        sys.stdout.write(text)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _load_graph(path) -> gr.GraphTopology:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"graph file not found: {path}")
    return gr.read_graph(p)


def _assignment(g, args):
    return quantize.uniform_assignment(
        g, args.family, prime=getattr(args, "prime", None),
        char_index=getattr(args, "char_index", None), seed=getattr(args, "seed", None),
    )


# -- subcommands ---------------------------------------------------------------------


def cmd_construct(args):
    fam = scatmat.Family(args.family)
    if fam is scatmat.Family.ET_FIVE:
        dim = 5 if args.dim is None else args.dim
    elif fam is scatmat.Family.ET_CHARACTER and args.dim is None and args.prime is not None:
        dim = args.prime + 1
    elif args.dim is None:
        raise UsageError(f"--dim is required for family {fam.value}")
    else:
        dim = args.dim
    if fam is scatmat.Family.ET_SEARCHED:
        return cmd_search(argparse.Namespace(dim=dim, seed=args.seed, max_iters=args.max_iters,
                                             out=args.out))
    s = scatmat.build_family(fam, dim, prime=args.prime, char_index=args.char_index)
    emit(numerics.dumps_matrix(s.sigma) + "\n", args.out)


def cmd_search(args):
    if args.seed is None:
        raise UsageError("et-search requires --seed")
    res = scatmat.et_search(args.dim, args.seed, args.max_iters)
    if isinstance(res, scatmat.SearchFailure):
        raise NonConvergence(
            f"no ET matrix found in dimension {args.dim}",
            {"dim": res.dim, "seed": res.seed, "iterations": res.iterations,
             "restarts": res.restarts, "best_residual": res.best_residual,
             "final_residual": res.final_residual},
        )
    emit(numerics.dumps_matrix(res.sigma) + "\n", args.out)


def cmd_graph(args):
    if args.kind == "complete":
        g = gr.complete_graph(args.V)
    else:
        if args.v is None or args.seed is None:
            raise UsageError("--kind regular requires --v and --seed")
        g = gr.random_regular(args.v, args.V, args.seed)
    emit(gr.dumps_graph(g) + "\n", args.out)


def cmd_graph_spectrum(args):
    mu = gr.connectivity_spectrum(_load_graph(args.graph))
    emit(csv_text(["index", "mu"], [(i, float(m)) for i, m in enumerate(mu)]), args.out)


def cmd_quantize(args):
    g = _load_graph(args.graph)
    if args.emit == "W":
        A = quantize.build_W(g)
    else:
        if args.emit == "U" and args.seed is None:
            raise UsageError("--emit U draws random phases and requires --seed")
        assign = _assignment(g, args)
        if args.emit == "M":
            A = quantize.build_M(g, assign)
        else:
            rng = stats.realization_rng(args.seed, 0)
            A = quantize.build_U(g, assign, quantize.random_phases(g, rng))
    emit(numerics.dumps_matrix(A) + "\n", args.out)


def _r_pattern_M(g, r: float) -> np.ndarray:
    # (1-r)/(v-1) W + r J, J the bond reversal
    v = g.regular_degree()
    W = quantize.build_W(g).astype(float)
    return (1 - r) / (v - 1) * W + r * g.bond_index.reversal_matrix()


def cmd_spectrum(args):
    g = _load_graph(args.graph)
    v = g.regular_degree()
    if v is None:
        raise UsageError("spectrum needs a regular graph")
    named = {"et": "et-hadamard", "fourier": "fourier", "neumann": "neumann"}
    if args.r in named:
        family = named[args.r]
        r = spectral.family_r(family, v)
    else:
        try:
            r = float(args.r)
        except ValueError:
            raise UsageError(f"--r must be et, fourier, neumann or a number, got {args.r!r}") from None
        if not 0 <= r <= 1:
            raise UsageError("--r must lie in [0, 1]")
        family = None
    rows = []
    if args.method in ("theorem", "both"):
        for z in spectral.spectrum_via_theorem(g, r).values:
            rows.append((float(z.real), float(z.imag), "theorem"))
    if args.method in ("direct", "both"):
        M = spectral.family_M(g, family) if family else _r_pattern_M(g, r)
        for z in spectral.spectrum_direct(M, r).values:
            rows.append((float(z.real), float(z.imag), "direct"))
    emit(csv_text(["re", "im", "source"], rows), args.out)


def cmd_gaps(args):
    g = _load_graph(args.graph)
    rows = [(row.family, row.r, row.gap, f"eps={row.epsilon!r};holds={int(row.condition)}")
            for row in spectral.gap_comparison(g)]
    emit(csv_text(["family", "r", "gap", "condition_flags"], rows), args.out)


def cmd_orbits(args):
    g = _load_graph(args.graph)
    if args.nmax < 1:
        raise UsageError("--nmax must be >= 1")
    rows = [(n, spectral.count_nb_closed_walks(g, n)) for n in range(1, args.nmax + 1)]
    emit(csv_text(["n", "trace_Wn"], rows), args.out)


def bass_sample_points(n: int, radius: float) -> np.ndarray:
    """Deterministic points on a circle, offset from the real axis."""
    k = np.arange(n)
    return radius * np.exp(2j * np.pi * (k + 0.5) / n)


def cmd_bass_check(args):
    g = _load_graph(args.graph)
    if g.regular_degree() is None:
        raise UsageError("bass-check needs a regular graph")
    rows = [(float(u.real), float(u.imag), quantize.bass_identity_residual(g, u))
            for u in bass_sample_points(args.samples, args.radius)]
    emit(csv_text(["re_u", "im_u", "residual"], rows), args.out)


def stats_artifacts(g, args) -> dict[str, str]:
    """CSV/JSON contents for the stats subcommand, keyed by file name."""
    assign = _assignment(g, args)
    ens = stats.sample_ensemble(g, assign, args.realizations, args.seed, jobs=args.jobs)
    spacings = stats.ensemble_spacings(ens)
    out = {}
    if args.emit in ("ps", "both"):
        hist = stats.spacing_density(spacings, args.bins, args.s_max)
        mids = hist.mids
        out["ps.csv"] = csv_text(
            ["s_mid", "density", "goe_ref", "gue_ref"],
            zip(mids, hist.density, stats.surmise_pdf("GOE", mids), stats.surmise_pdf("GUE", mids)),
        )
    if args.emit in ("vl", "both"):
        L = np.linspace(args.L_min, args.L_max, args.L_points)
        nv = stats.number_variance(ens, L, windows=args.windows)
        out["vl.csv"] = csv_text(
            ["L", "V", "stderr", "goe_ref", "gue_ref"],
            zip(L, nv.variance, nv.stderr, stats.number_variance_asymptotic("GOE", L),
                stats.number_variance_asymptotic("GUE", L)),
        )
    summary = {
        "ks": {k: stats.ks_distance(spacings, k) for k in ("GOE", "GUE")}
        if spacings.size >= stats.MIN_KS_SAMPLES else None,
        "gap": spectral.spectrum_direct(quantize.build_M(g, assign)).gap,
        "n_spacings": int(spacings.size),
        "graph": {"V": g.V, "B": g.B},
        "engineering_defaults": {
            "note": "ensemble size, bins and window sampling are implementation choices",
            "bins": args.bins, "s_max": args.s_max, "windows": args.windows,
        },
        "config": {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "jobs")},
    }
    out["summary.json"] = json.dumps(summary, indent=2, sort_keys=True) + "\n"
    return out


def cmd_stats(args):
    if args.seed is None:
        raise UsageError("stats requires --seed")
    if args.realizations < 1:
        raise UsageError("--realizations must be >= 1")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    g = _load_graph(args.graph)
    files = stats_artifacts(g, args)
    for name, text in files.items():
        atomic_write(Path(args.out) / name, text)


# -- parser ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="etgraph", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    c = sub.add_parser("construct", help="build a vertex scattering matrix")
    c.add_argument("--family", required=True, choices=FAMILIES)
    c.add_argument("--dim", type=int, help="matrix dimension v")
    c.add_argument("--prime", type=int, help="prime P for et-character (dimension P+1)")
    c.add_argument("--char-index", type=int, help="character index m in [1, P-2]; default Legendre")
    c.add_argument("--seed", type=int, help="seed for et-search")
    c.add_argument("--max-iters", type=int, default=5000, help="et-search iteration budget")
    c.add_argument("--out", help="output path (default stdout)")
    c.set_defaults(func=cmd_construct)

    s = sub.add_parser("search", help="alternating-projection search for an ET matrix")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--max-iters", type=int, default=5000)
    s.add_argument("--out")
    s.set_defaults(func=cmd_search)

    g = sub.add_parser("graph", help="generate a graph as JSON")
    g.add_argument("--kind", required=True, choices=["complete", "regular"])
    g.add_argument("--V", type=int, required=True, help="number of vertices")
    g.add_argument("--v", type=int, help="valency (regular graphs)")
    g.add_argument("--seed", type=int, help="seed (regular graphs)")
    g.add_argument("--out")
    g.set_defaults(func=cmd_graph)

    gs = sub.add_parser("graph-spectrum", help="connectivity eigenvalues as CSV")
    gs.add_argument("--graph", required=True)
    gs.add_argument("--out")
    gs.set_defaults(func=cmd_graph_spectrum)

    q = sub.add_parser("quantize", help="emit U, M or W for a graph")
    q.add_argument("--graph", required=True)
    q.add_argument("--family", choices=FAMILIES, default="et-hadamard")
    q.add_argument("--prime", type=int)
    q.add_argument("--char-index", type=int)
    q.add_argument("--seed", type=int, help="phase seed (required for U and et-search)")
    q.add_argument("--emit", required=True, choices=["U", "M", "W"])
    q.add_argument("--out")
    q.set_defaults(func=cmd_quantize)

    sp = sub.add_parser("spectrum", help="classical spectrum via closed form and/or diagonalization")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--r", required=True, help="et, fourier, neumann or a numeric r in [0, 1]")
    sp.add_argument("--method", choices=["theorem", "direct", "both"], default="both")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_spectrum)

    gp = sub.add_parser("gaps", help="spectral gaps for ET, Fourier and Neumann")
    gp.add_argument("--graph", required=True)
    gp.add_argument("--out")
    gp.set_defaults(func=cmd_gaps)

    o = sub.add_parser("orbits", help="trace(W^n) for n = 1..nmax")
    o.add_argument("--graph", required=True)
    o.add_argument("--nmax", type=int, required=True)
    o.add_argument("--out")
    o.set_defaults(func=cmd_orbits)

    b = sub.add_parser("bass-check", help="Bass identity residuals at sample points")
    b.add_argument("--graph", required=True)
    b.add_argument("--samples", type=int, default=20)
    b.add_argument("--radius", type=float, default=0.3)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bass_check)

    st = sub.add_parser("stats", help="random-phase spectral statistics")
    st.add_argument("--graph", required=True)
    st.add_argument("--family", choices=FAMILIES, required=True)
    st.add_argument("--prime", type=int)
    st.add_argument("--char-index", type=int)
    st.add_argument("--realizations", type=int, required=True)
    st.add_argument("--seed", type=int, required=True)
    st.add_argument("--emit", choices=["ps", "vl", "both"], default="both")
    st.add_argument("--out", required=True, help="output directory")
    st.add_argument("--jobs", type=int, default=1, help="worker processes")
    st.add_argument("--bins", type=int, default=50)
    st.add_argument("--s-max", type=float, default=4.0)
    st.add_argument("--windows", type=int, default=stats.DEFAULT_WINDOWS)
    st.add_argument("--L-min", type=float, default=0.5)
    st.add_argument("--L-max", type=float, default=5.0)
    st.add_argument("--L-points", type=int, default=10)
    st.set_defaults(func=cmd_stats)
    return p


def _fail(code: int, kind: str, message: str, detail=None) -> int:
    err = {"error": kind, "message": message}
    if detail:
        err["detail"] = detail
    sys.stderr.write(json.dumps(err) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.func(args)
    except UsageError as exc:
        return _fail(EXIT_VALIDATION, "usage", str(exc))
    except NonConvergence as exc:
        return _fail(EXIT_NONCONVERGENCE, "nonconvergence", str(exc), exc.detail)
    except numerics.ConvergenceError as exc:
        return _fail(EXIT_NONCONVERGENCE, "nonconvergence", str(exc))
    except (gr.GenerationError,) as exc:
        return _fail(EXIT_NONCONVERGENCE, "generation", str(exc), {"attempts": exc.attempts})
    except (ValueError, OSError) as exc:
        return _fail(EXIT_VALIDATION, "validation", str(exc))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: ``python -m slconv <command> --problem FILE --out DIR``.

Exit codes: 0 success, 2 bad input, 3 solver failure, 4 inconsistent data.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__
from .charfield import ProductDelta, mean_check, recover_v
from .forward import Spectrum, eigenvalues, omega_of
from .inverse import InconsistentDataError, invert
from .numgrid import l2_weighted
from .problem import ProblemError, dump_problem, load_problem
from .stability_lab import records_to_csv, spread, stability_sweep, theorem1_comparison

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_DATA = 0, 2, 3, 4


class _Run:
    """Output directory bookkeeping for one command."""

    def __init__(self, command, pf, out_dir):
        self.command = command
        self.pf = pf
        self.out = out_dir
        self.files = []
        self.results = {}
        os.makedirs(out_dir, exist_ok=True)

    def write(self, name, text):
        with open(os.path.join(self.out, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        if name not in self.files:
            self.files.append(name)

    def finish(self, status, message=""):
        self.write("problem.resolved.txt", dump_problem(self.pf))
        manifest = {
            "command": self.command,
            "version": __version__,
            "status": status,
            "message": message,
            "files": sorted(self.files + ["manifest.json"]),
            "config": self.pf.config(),
            "results": self.results,
        }
        with open(os.path.join(self.out, "manifest.json"), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")


def _jsonable(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _num(x):
    return repr(float(x))


def _eig_csv(sp: Spectrum) -> str:
    rows = ["n,re_lambda,im_lambda,re_kappa,im_kappa"]
    for n, lam, k in zip(sp.indices, sp.lambdas, sp.remainders):
        rows.append(f"{n},{_num(lam.real)},{_num(lam.imag)},{_num(k.real)},{_num(k.imag)}")
    return "\n".join(rows) + "\n"


def _v_csv(v) -> str:
    rows = ["x,re_v,im_v"]
    for x, z in zip(v.grid.nodes, v.values):
        rows.append(f"{_num(x)},{_num(z.real)},{_num(z.imag)}")
    return "\n".join(rows) + "\n"


def _m_csv(M) -> str:
    rows = ["x,re_m,im_m,re_m_weighted,im_m_weighted"]
    for x, z in zip(M.grid.nodes, M.values):
        w = (np.pi - x) * z
        rows.append(f"{_num(x)},{_num(z.real)},{_num(z.imag)},{_num(w.real)},{_num(w.imag)}")
    return "\n".join(rows) + "\n"


def _trace_txt(trace) -> str:
    d = trace.as_dict()
    lines = [f"delta0 = {d['delta0']!r}"]
    for st, (a, b), it, r in zip(d["stages"], d["blocks"], d["iterations"], d["residuals"]):
        lines.append(f"block = {st} {a!r} {b!r} iterations={it} residual={r!r}")
    for k in ("final_residual", "mean_residual", "z_mean"):
        lines.append(f"{k} = {float(d[k])!r}")
    return "\n".join(lines) + "\n"


def _spectrum(pf, q):
    if pf.spectrum is None:
        raise ProblemError("this command needs a spectrum block in the problem file")
    if pf.spectrum.size < 1:
        raise ProblemError("empty spectrum")
    return Spectrum(pf.spectrum, omega_of(q))


def _kv(pf, K):
    return pf.Kv if pf.Kv is not None else min(K, pf.grid_panels // 2)


def cmd_forward(pf, run):
    q, M = pf.function("q"), pf.function("M")
    sp = eigenvalues(q, M, pf.K, threads=pf.threads)
    run.write("eigenvalues.csv", _eig_csv(sp))
    run.results["omega"] = sp.omega
    return EXIT_OK


def cmd_recover_v(pf, run):
    q = pf.function("q")
    sp = _spectrum(pf, q)
    Kv = _kv(pf, sp.count)
    v = recover_v(ProductDelta(sp, sp.omega), Kv, pf.grid)
    run.write("v.csv", _v_csv(v))
    run.results["series_terms"] = Kv
    run.results["mean_residual"] = mean_check(v, sp.omega)
    return EXIT_OK


def _invert_into(run, sp, q, pf, prefix=""):
    M, trace = invert(sp, q, _kv(pf, sp.count))
    run.write(prefix + "m.csv", _m_csv(M))
    run.write(prefix + "trace.txt", _trace_txt(trace))
    run.results[prefix + "trace"] = trace.as_dict()
    return M


def _reference_error(run, M, pf, key):
    if isinstance(pf.M, str) and pf.M.strip().lower() == "zero":
        ref = pf.function("M")
        run.results[key] = l2_weighted(M.values - ref.values, pf.grid)
        run.results[key + "_kind"] = "absolute"
        return
    ref = pf.function("M")
    den = l2_weighted(ref.values, pf.grid)
    run.results[key] = l2_weighted(M.values - ref.values, pf.grid) / den
    run.results[key + "_kind"] = "relative"


def cmd_invert(pf, run):
    q = pf.function("q")
    sp = _spectrum(pf, q)
    M = _invert_into(run, sp, q, pf)
    _reference_error(run, M, pf, "m_weighted_error")
    return EXIT_OK


def cmd_roundtrip(pf, run):
    q, Mref = pf.function("q"), pf.function("M")
    stage = "forward"
    try:
        if pf.spectrum is not None:
            sp = _spectrum(pf, q)
        else:
            sp = eigenvalues(q, Mref, pf.K, threads=pf.threads)
        run.write("eigenvalues.csv", _eig_csv(sp))
        stage = "invert"
        M = _invert_into(run, sp, q, pf)
        run.write("m_reference.csv", _m_csv(Mref))
        _reference_error(run, M, pf, "m_weighted_error")
        stage = "reforward"
        sp2 = eigenvalues(q, M, sp.count, threads=pf.threads)
        run.write("eigenvalues_roundtrip.csv", _eig_csv(sp2))
    except Exception as e:
        e.stage_tag = getattr(e, "stage", stage)
        raise
    half = max(1, sp.count // 2)
    run.results["eigenvalue_max_diff_first_half"] = float(
        np.max(np.abs(sp2.lambdas[:half] - sp.lambdas[:half])))
    return EXIT_OK


def cmd_stability(pf, run):
    q, M = pf.function("q"), pf.function("M")
    recs = stability_sweep(q, M, pf.K, pf.eps, shape=pf.shape, mixed=pf.mixed,
                           seed=pf.seed, threads=pf.threads, mode=pf.mode)
    run.write("stability.csv", records_to_csv(recs))
    ok = sum(r.status == "ok" for r in recs)
    cmp = theorem1_comparison(recs, pf.grid)
    run.results["rows"] = len(recs)
    run.results["rows_ok"] = ok
    run.results["ratio_spread"] = spread(recs)
    run.results["norm_equivalence_ok"] = all(c.ok for c in cmp if c is not None)
    return EXIT_OK if ok >= 0.8 * len(recs) else EXIT_SOLVER


COMMANDS = {
    "forward": cmd_forward,
    "recover-v": cmd_recover_v,
    "invert": cmd_invert,
    "roundtrip": cmd_roundtrip,
    "stability": cmd_stability,
}


def build_parser():
    p = argparse.ArgumentParser(prog="slconv", description=(
        "Forward and inverse Dirichlet spectral problems for a Sturm-Liouville "
        "operator with a convolution term."))
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--problem", required=True, help="problem file or a run manifest.json")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--grid", type=int, help="number of grid panels (even, >= 64)")
    p.add_argument("--K", type=int, help="number of eigenvalues")
    p.add_argument("--Kv", type=int, help="cosine-series terms for v")
    p.add_argument("--threads", type=int, help="worker threads")
    p.add_argument("--seed", type=int, help="perturbation seed")
    return p


class _ArgError(Exception):
    pass


def _parse(argv):
    p = build_parser()
    p.error = lambda msg: (_ for _ in ()).throw(_ArgError(msg))
    return p.parse_args(argv)


def main(argv=None) -> int:
    try:
        args = _parse(sys.argv[1:] if argv is None else argv)
    except _ArgError as e:
        print(f"slconv: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    try:
        pf = load_problem(args.problem)
        for flag, key in (("grid", "grid_panels"), ("K", "K"), ("Kv", "Kv"),
                          ("threads", "threads"), ("seed", "seed")):
            val = getattr(args, flag)
            if val is not None:
                setattr(pf, key, val)
        pf.validate()
    except (ProblemError, ValueError) as e:
        print(f"slconv: input error: {e}", file=sys.stderr)
        return EXIT_INPUT
    run = _Run(args.command, pf, args.out)
    t0 = time.perf_counter()
    try:
        code = COMMANDS[args.command](pf, run)
    except InconsistentDataError as e:
        code, msg = EXIT_DATA, f"inconsistent data: {e}"
    except ProblemError as e:
        code, msg = EXIT_INPUT, f"input error: {e}"
    except Exception as e:
        tag = getattr(e, "stage_tag", None) or getattr(e, "stage", None)
        msg = f"solver error{f' in {tag}' if tag else ''}: {type(e).__name__}: {e}"
        code = EXIT_SOLVER
    else:
        msg = ""
    run.results["wall_seconds"] = round(time.perf_counter() - t0, 3)
    run.finish("ok" if code == EXIT_OK else "failed", msg)
    if msg:
        print(f"slconv: {msg}", file=sys.stderr)
    return code

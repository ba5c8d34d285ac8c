"""Command-line entry point: one subcommand per pipeline.

Every subcommand writes its result as JSON (or CSV where noted) to --out, or
to stdout when --out is absent, plus a manifest ``<out>.manifest.json`` with
the argument vector, input and output hashes and the measured constants.
Exit codes: 0 ok, 2 configuration error, 3 violated precondition, 4 numerical
failure."""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import ConfigError, FraccurError, NumericalError, PreconditionError

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_NUMERIC = 0, 2, 3, 4


# execution context -------------------------------------------------------------

@dataclass
class Parallel:
    """Worker pool owned by the CLI; results always come back in input order."""

    threads: int = 1

    def map(self, fn, items) -> list:
        items = list(items)
        if self.threads <= 1 or len(items) <= 1:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            return list(pool.map(fn, items))


def _threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get("FRACCUR_THREADS", "1")
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"FRACCUR_THREADS must be an integer, got {env!r}") from exc
    if n < 1:
        raise ConfigError("--threads must be at least 1")
    return n


# serialization -------------------------------------------------------------------

def jsonable(obj):
    """Plain JSON types; objects without a JSON form are dropped (None)."""
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            j = jsonable(v)
            if j is not None or v is None:
                out[str(k)] = j
        return out
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, str) or obj is None:
        return obj
    if hasattr(obj, "to_json_dict"):
        return obj.to_json_dict()
    return None


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=1) + "\n"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _strip_threads(argv: list[str]) -> list[str]:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--threads":
            skip = True
            continue
        if a.startswith("--threads="):
            continue
        out.append(a)
    return out


class Emitter:
    """Collects outputs of one run and writes the manifest."""

    def __init__(self, args, argv: list[str]) -> None:
        self.args = args
        self.argv = _strip_threads(argv)
        self.outputs: list[str] = []
        self.inputs: list[str] = []
        self.measured: dict = {}

    def input(self, path) -> None:
        if path and os.path.isfile(path):
            self.inputs.append(str(path))

    def write_text(self, path, text: str) -> None:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
        self.outputs.append(str(path))

    def result(self, obj, csv_text: str | None = None) -> None:
        """Main result: CSV when --out ends in .csv and a CSV form exists, JSON otherwise."""
        out = getattr(self.args, "out", None)
        if out:
            if out.endswith(".csv") and csv_text is not None:
                self.write_text(out, csv_text)
            else:
                self.write_text(out, dumps(obj))
            self.manifest(out)
        else:
            sys.stdout.write(csv_text if (csv_text is not None and getattr(self.args, "report", "") == "csv")
                             else dumps(obj))

    def manifest(self, out) -> None:
        params = {k: v for k, v in sorted(vars(self.args).items()) if k not in ("func", "threads")}
        man = {
            "tool": "fraccur",
            "version": __version__,
            "numpy": np.__version__,
            "subcommand": self.args.command,
            "argv": self.argv,
            "parameters": params,
            "inputs": {p: sha256_file(p) for p in self.inputs},
            "outputs": {os.path.basename(p): sha256_file(p) for p in self.outputs},
            "measured": self.measured,
        }
        with open(str(out) + ".manifest.json", "w", newline="\n") as fh:
            fh.write(dumps(man))


# argument helpers ----------------------------------------------------------------

def parse_levels(text: str) -> list[int]:
    """'2..8' -> [2, ..., 8]; '3,5,7' -> [3, 5, 7]."""
    try:
        if ".." in text:
            a, b = text.split("..")
            lv = list(range(int(a), int(b) + 1))
        else:
            lv = [int(x) for x in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad level range {text!r}") from exc
    if not lv:
        raise ConfigError(f"empty level range {text!r}")
    return lv


def _kv(text: str) -> dict[str, str]:
    out = {}
    for item in filter(None, text.split(",")):
        k, sep, v = item.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value, got {item!r}")
        out[k.strip()] = v.strip()
    return out


def resolve_set(spec: str):
    """Built-in sets and regions.

    Regions: disk[:r=..,cx=..,cy=..], square[:d=..,side=..], snowflake:<level>,
      star:<seed>, or a {0,1} grid function JSON (used as a raster set).
    Sets: koch:<level>, cantor:<depth>, circle."""
    from . import fractal
    from .sobolev import GridFunction

    kind, _, rest = spec.partition(":")
    try:
        if kind == "disk":
            kv = _kv(rest)
            return fractal.disk((float(kv.get("cx", 0)), float(kv.get("cy", 0))), float(kv.get("r", 1)))
        if kind == "square":
            kv = _kv(rest)
            return fractal.square(int(kv.get("d", 2)), float(kv.get("lo", 0)), float(kv.get("side", 1)))
        if kind == "snowflake":
            return fractal.koch_snowflake(int(rest or 5))
        if kind == "koch":
            return fractal.koch_curve(int(rest or 5))
        if kind == "cantor":
            return fractal.cantor_product(1 / 3, 2, int(rest) if rest else None)
        if kind == "circle":
            return fractal.CircleSet((0.0, 0.0), 1.0)
        if kind == "star":
            return fractal.star_domain(np.random.default_rng(int(rest or 0)))
    except ValueError as exc:
        raise ConfigError(f"bad set spec {spec!r}: {exc}") from exc
    if os.path.isfile(spec):
        return fractal.RasterSet(GridFunction.load(spec))
    raise ConfigError(f"unknown set {spec!r}")


def resolve_chain(spec: str):
    """A chain JSON file, or unit:<d> (the unit cube), boundary:unit:<d>,
    points:<x>,<y> (the 0-chain [[x]] - [[y]] on the line at level 4)."""
    from .grid import CubicalChain, load_chain

    if os.path.isfile(spec):
        return load_chain(spec)
    kind, _, rest = spec.partition(":")
    try:
        if kind == "unit":
            d = int(rest or 1)
            return CubicalChain.box((0,) * d, (1,) * d, 0)
        if kind == "boundary":
            return resolve_chain(rest).boundary()
        if kind == "points":
            x, y = (int(v) for v in rest.split(","))
            return CubicalChain.point((x,), 4) - CubicalChain.point((y,), 4)
    except ValueError as exc:
        raise ConfigError(f"bad chain spec {spec!r}: {exc}") from exc
    raise ConfigError(f"no chain file or built-in chain named {spec!r}")


def resolve_function(spec: str, level: int, d: int = 1):
    """A grid function JSON file, region:<set spec> (indicator rasterized at
    level), or a function mini-language spec sampled on [0, 1]^d at level."""
    from .holder import parse_function
    from .sobolev import GridFunction, sample_function

    if os.path.isfile(spec):
        return GridFunction.load(spec)
    if spec.startswith("region:"):
        return resolve_set(spec[len("region:"):]).rasterize(level)
    f = parse_function(spec, d)
    n = 1 << level
    return sample_function(lambda x: f.evaluate(x)[:, 0], level, (0,) * d, (n,) * d)


def resolve_map(spec: str, d: int):
    from .holder import parse_function

    return parse_function(spec, d)


def load_form(path: str, d_default: int = 2):
    """Form JSON: {"d": 2, "m": 1, "alpha": optional, "terms": [{"coef": [spec or number, ...],
    "diffs": ["dx0", "d:<function spec>", ...], "weight": 1.0}]}."""
    from .holder import parse_function
    from .young import FormTerm, SampledForm

    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read form {path}: {exc}") from exc
    try:
        d = int(obj.get("d", d_default))
        m = int(obj["m"])
        terms = []
        for t in obj["terms"]:
            coefs = tuple(c if isinstance(c, (int, float)) else parse_function(c, d) for c in t.get("coef", [1.0]))
            diffs = []
            for D in t.get("diffs", []):
                if D.startswith("dx"):
                    diffs.append(int(D[2:]))
                elif D.startswith("d:"):
                    diffs.append(parse_function(D[2:], d))
                else:
                    raise ConfigError(f"bad differential {D!r}")
            terms.append(FormTerm(tuple(float(c) if isinstance(c, (int, float)) else c for c in coefs),
                                  tuple(diffs), float(t.get("weight", 1.0))))
        alpha = obj.get("alpha")
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed form {path}: {exc}") from exc
    return SampledForm(d, m, terms, None if alpha is None else float(alpha))


# subcommands ---------------------------------------------------------------------

def cmd_flatnorm(args, em: Emitter, par: Parallel) -> None:
    from .flatnorm import flat_norm

    em.input(args.chain)
    T = resolve_chain(args.chain)
    r = flat_norm(T, pad=args.pad, method=args.method)
    em.measured["value"] = r.value
    em.result({"value": r.value, "witness": r.witness_S, "residual": r.residual, "diagnostics": r.diagnostics})


def cmd_deform(args, em: Emitter, par: Parallel) -> None:
    from .deform import deform

    em.input(args.chain)
    T = resolve_chain(args.chain)
    r = deform(T, eps=args.eps)
    em.measured.update(r.ratios)
    em.result({"level": r.level, "P": r.P, "mass_P": r.P.mass(), "mass_R": r.R.mass(), "mass_S": r.S.mass(),
               "flat_bound": r.flat_bound, "ratios": r.ratios})


def cmd_gagliardo(args, em: Emitter, par: Parallel) -> None:
    from .sobolev import gagliardo

    em.input(args.fn)
    u = resolve_function(args.fn, args.level, args.d)
    r = gagliardo(u, args.alpha)
    em.measured["value"] = r.value
    em.result({"value": r.value, "result": vars(r)})


def cmd_perimeter(args, em: Emitter, par: Parallel) -> None:
    from .sobolev import GridFunction, frac_perimeter

    em.input(args.set)
    if os.path.isfile(args.set):
        A = GridFunction.load(args.set)
    else:
        A = resolve_set(args.set).rasterize(args.level)
    v = frac_perimeter(A, args.alpha)
    em.measured["value"] = v
    em.result({"value": v, "alpha": args.alpha, "level": A.level})


def cmd_decompose(args, em: Emitter, par: Parallel) -> None:
    from .sobolev import dyadic_decompose, thm41_certificate

    em.input(args.fn)
    u = resolve_function(args.fn, args.level, args.d)
    c = thm41_certificate(u, args.alpha, args.depth)
    em.measured.update(ratio=c.ratio, cost=c.cost, gagliardo=c.gagliardo)
    out = vars(c).copy()
    if args.emit_parts:
        dec = dyadic_decompose(u, args.depth)
        em.write_text(args.emit_parts, dumps({"parts": [p.to_json_dict() for p in dec.parts]}))
    em.result(out)


def _occupancy(A):
    from .fractal import Region

    return A.boundary if isinstance(A, Region) else A


def cmd_boxdim(args, em: Emitter, par: Parallel) -> None:
    from .fractal import box_count, box_dimension

    A = _occupancy(resolve_set(args.set))
    levels = parse_levels(args.levels)
    counts = par.map(lambda k: box_count(A, k), levels)
    slope, rms = box_dimension(A, levels)
    em.measured.update(dimension=slope, rms=rms)
    csv = "level,count\n" + "".join(f"{k},{n}\n" for k, n in zip(levels, counts))
    em.result({"dimension": slope, "rms": rms, "levels": levels, "counts": counts}, csv)


def decomposition_json(dec) -> dict:
    notes = {k: v for k, v in dec.notes.items() if k != "whitney"}
    return {"alpha": dec.alpha, "cost": dec.cost, "terms": dec.terms(),
            "stats": [vars(s) for s in dec.stats], "parts": [p.to_json_dict() for p in dec.parts],
            "notes": notes}


def cmd_whitney(args, em: Emitter, par: Parallel) -> None:
    from .fractal import Region, whitney_chain

    U = resolve_set(args.set)
    if not isinstance(U, Region):
        raise ConfigError(f"{args.set!r} is not an open region")
    dec = whitney_chain(U, args.alpha, args.kmax)
    n = dec.notes
    w = n["whitney"]
    bounds = {k: w.count_bound(k) for k in range(w.k0 + 1, w.kmax + 1)}
    em.measured.update(ratio=n["ratio"], verdict=n["verdict"], covered_measure=n["covered_measure"])
    if args.emit_decomposition:
        em.write_text(args.emit_decomposition, dumps(decomposition_json(dec)))
    csv = "level,count,bound,term\n" + "".join(
        f"{k},{w.counts[k]},{bounds.get(k, '')},{t!r}\n" for k, t in zip(range(w.k0, w.kmax + 1), dec.terms()))
    em.result({"k0": w.k0, "counts": w.counts, "count_bounds": bounds, "boundary_counts": w.boundary_counts,
               "cost": dec.cost, "terms": dec.terms(), "ratio": n["ratio"], "tail": n["tail"],
               "verdict": n["verdict"], "covered_measure": n["covered_measure"],
               "domain_measure": n["domain_measure"]}, csv)


def cmd_push(args, em: Emitter, par: Parallel) -> None:
    from .pushforward import holder_pushforward

    em.input(args.chain)
    T = resolve_chain(args.chain)
    f = resolve_map(args.map, T.d)
    gamma = f.gamma if args.gamma is None else args.gamma
    run = holder_pushforward(f, gamma, T, args.alpha, n_max=args.n_max, tol=args.tol)
    em.measured.update(ratio=run.ratio, expected_ratio=run.expected_ratio, verdict=run.verdict)
    if args.emit_chain:
        em.write_text(args.emit_chain, dumps(run.final.to_json_dict()))
    csv = "stage,level,distance,deform_error\n" + "".join(
        f"{i + 1},{lv},{dv!r},{de!r}\n" for i, (lv, dv, de) in
        enumerate(zip(run.stage_levels[1:], run.distances, run.deform_errors)))
    em.result({"beta": run.beta, "gamma": run.gamma, "alpha": run.alpha, "stage_levels": run.stage_levels,
               "distances": run.distances, "deform_errors": run.deform_errors, "ratio": run.ratio,
               "expected_ratio": run.expected_ratio, "tail": run.tail, "verdict": run.verdict,
               "final_mass": run.final.mass(), "notes": run.notes}, csv)


def cmd_degree(args, em: Emitter, par: Parallel) -> None:
    from .fractal import Region
    from .pushforward import boundary_polyline, degree_field, degree_regularity

    U = resolve_set(args.set)
    if not isinstance(U, Region) or U.d != 2:
        raise ConfigError(f"{args.set!r} is not a planar region")
    f = resolve_map(args.map, 2)
    if args.level is not None:
        level = args.level
    else:
        img = f.evaluate(boundary_polyline(U, 1e-2))
        extent = float(np.max(img.max(0) - img.min(0)))
        level = max(0, int(round(math.log2(args.grid / max(extent, 1e-12)))))
    deg = degree_field(f, args.gamma, U, level)
    vals = deg.field.values[deg.unflagged()]
    hist = {str(int(k)): int(n) for k, n in zip(*np.unique(vals, return_counts=True))}
    summary = {"level": level, "box": [list(deg.field.lo), list(deg.field.hi)], "tol": deg.tol,
               "unflagged_histogram": hist, "flagged": int(deg.flags.sum())}
    if args.beta is not None:
        summary["regularity"] = degree_regularity(deg, args.beta)
        em.measured["regularity"] = summary["regularity"]
    buf = io.StringIO()
    _degree_csv(deg, buf)
    if args.out and args.out.endswith(".csv"):
        em.write_text(args.out, buf.getvalue())
        em.write_text(args.out[:-4] + ".json", dumps(summary))
        em.manifest(args.out)
    else:
        em.result(summary, buf.getvalue())


def _degree_csv(deg, fh) -> None:
    u = deg.field
    h = u.h
    idx = np.indices(u.shape).reshape(u.d, -1).T
    centers = (idx + np.asarray(u.lo) + 0.5) * h
    vals = np.rint(u.values.reshape(-1)).astype(int)
    flags = deg.flags.reshape(-1).astype(int)
    fh.write("y1,y2,degree,flag\n")
    for (y1, y2), v, fl in zip(centers, vals, flags):
        fh.write(f"{y1:.17g},{y2:.17g},{v},{fl}\n")


def _series_csv(r) -> str:
    rows = ["level,sum,increment"]
    for i, (lv, s) in enumerate(zip(r.levels, r.sums)):
        inc = repr(r.increments[i - 1]) if i else ""
        rows.append(f"{lv},{s!r},{inc}")
    return "\n".join(rows) + "\n"


def _series_json(r) -> dict:
    return {"value": r.value, "levels": r.levels, "sums": r.sums, "increments": r.increments,
            "ratio": r.ratio, "expected_ratio": r.expected_ratio, "verdict": r.verdict, "error": r.error}


def cmd_young(args, em: Emitter, par: Parallel) -> None:
    from .holder import parse_function
    from .young import young_1d

    r = young_1d(parse_function(args.g0, 1), parse_function(args.g1, 1), args.levels)
    em.measured.update(ratio=r.ratio, verdict=r.verdict)
    em.result(_series_json(r), _series_csv(r))


def cmd_zust(args, em: Emitter, par: Parallel) -> None:
    from .holder import parse_function
    from .young import zust_integral

    specs = [args.g0, args.g1, args.g2, args.g3][: args.d + 1]
    if any(s is None for s in specs):
        raise ConfigError(f"--d {args.d} needs --g0 .. --g{args.d}")
    r = zust_integral([parse_function(s, args.d) for s in specs], args.levels)
    em.measured.update(ratio=r.ratio, verdict=r.verdict)
    em.result(_series_json(r), _series_csv(r))


def cmd_wedge(args, em: Emitter, par: Parallel) -> None:
    from .young import wedge_eval

    for p in (args.omega, args.eta, args.chain):
        em.input(p)
    om, et = load_form(args.omega), load_form(args.eta)
    T = resolve_chain(args.chain)
    r = wedge_eval(om, et, T, n_max=args.n_max, tol=args.tol)
    em.measured.update(value=r.value, tail=r.tail)
    em.result({"value": r.value, "tail": r.tail, "alpha": r.alpha, "beta": r.beta,
               "partial_sums": r.partial_sums, "terms": r.terms, "envelope": r.envelope,
               "stages": r.n_used})


def cmd_selftest(args, em: Emitter, par: Parallel) -> int:
    from .selftest import run_selftest

    results = run_selftest(par)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    failed = sum(1 for _, ok, _ in results if not ok)
    print(f"{len(results) - failed}/{len(results)} passed")
    return EXIT_OK if failed == 0 else EXIT_NUMERIC


def cmd_corpus(args, em: Emitter, par: Parallel) -> None:
    from .corpus import write_corpus

    index = write_corpus(args.dir, par)
    print(f"{len(index)} objects written to {args.dir}")


def cmd_replay(args, em: Emitter, par: Parallel) -> int:
    """Re-run a manifest's argument vector and compare output hashes."""
    try:
        with open(args.manifest) as fh:
            man = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read manifest {args.manifest}: {exc}") from exc
    expected = man.get("outputs", {})
    base = os.path.dirname(os.path.abspath(args.manifest))
    cwd = os.getcwd()
    try:
        os.chdir(base)
        code = main(list(man["argv"]))
    finally:
        os.chdir(cwd)
    if code != EXIT_OK:
        return code
    bad = [n for n, h in expected.items() if sha256_file(os.path.join(base, n)) != h]
    for n in bad:
        print(f"hash mismatch: {n}")
    print("replay identical" if not bad else "replay differs")
    return EXIT_OK if not bad else EXIT_NUMERIC


# parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fraccur", description="Fractional currents toolkit.")
    p.add_argument("--version", action="version", version=f"fraccur {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: FRACCUR_THREADS or 1)")
    common.add_argument("--out", default=None, help="output file (stdout if absent)")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text):
        sp = sub.add_parser(name, parents=[common], help=help_text)
        sp.set_defaults(func=fn)
        return sp

    sp = add("flatnorm", cmd_flatnorm, "flat norm of a cubical chain")
    sp.add_argument("--chain", required=True)
    sp.add_argument("--pad", type=int, default=2)
    sp.add_argument("--method", choices=["auto", "simplex", "highs"], default="auto")

    sp = add("deform", cmd_deform, "deform a chain onto the dyadic grid")
    sp.add_argument("--chain", required=True)
    sp.add_argument("--eps", default="1/16")

    for name, fn, what in (("gagliardo", cmd_gagliardo, "Gagliardo W^{alpha,1} seminorm"),
                           ("decompose", cmd_decompose, "dyadic decomposition cost against the seminorm")):
        sp = add(name, fn, what)
        sp.add_argument("--fn", required=True, help="grid function JSON, region:<set>, or function spec")
        sp.add_argument("--alpha", type=float, required=True)
        sp.add_argument("--level", type=int, default=8, help="sampling level for built-in functions")
        sp.add_argument("--d", type=int, default=1, help="dimension for function specs")
        if name == "decompose":
            sp.add_argument("--depth", type=int, default=None)
            sp.add_argument("--emit-parts", default=None)

    sp = add("perimeter", cmd_perimeter, "fractional perimeter of a set")
    sp.add_argument("--set", required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--level", type=int, default=8)

    sp = add("boxdim", cmd_boxdim, "box-counting dimension")
    sp.add_argument("--set", required=True)
    sp.add_argument("--levels", default="2..8")
    sp.add_argument("--report", choices=["json", "csv"], default="json")

    sp = add("whitney", cmd_whitney, "Whitney decomposition and cost series")
    sp.add_argument("--set", required=True)
    sp.add_argument("--kmax", type=int, default=8)
    sp.add_argument("--alpha", type=float, default=0.5)
    sp.add_argument("--emit-decomposition", default=None)
    sp.add_argument("--report", choices=["json", "csv"], default="json")

    sp = add("push", cmd_push, "Hölder pushforward of a chain")
    sp.add_argument("--chain", default="unit:1")
    sp.add_argument("--map", required=True)
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--alpha", type=float, default=0.0)
    sp.add_argument("--tol", type=float, default=1e-3)
    sp.add_argument("--n-max", type=int, default=8)
    sp.add_argument("--emit-chain", default=None)
    sp.add_argument("--report", choices=["json", "csv"], default="json")

    sp = add("degree", cmd_degree, "Brouwer degree field of a planar map")
    sp.add_argument("--set", required=True)
    sp.add_argument("--map", required=True)
    sp.add_argument("--grid", type=int, default=256, help="cells across the image")
    sp.add_argument("--level", type=int, default=None, help="grid level (overrides --grid)")
    sp.add_argument("--gamma", type=float, default=None)
    sp.add_argument("--beta", type=float, default=None)
    sp.add_argument("--report", choices=["json", "csv"], default="json")

    sp = add("young", cmd_young, "one-dimensional Young integral")
    sp.add_argument("--g0", required=True)
    sp.add_argument("--g1", required=True)
    sp.add_argument("--levels", type=int, default=12)
    sp.add_argument("--report", choices=["json", "csv"], default="json")

    sp = add("zust", cmd_zust, "Riemann sums of g0 dg1 ^ ... ^ dgd")
    sp.add_argument("--d", type=int, default=2)
    for i in range(4):
        sp.add_argument(f"--g{i}", default=None)
    sp.add_argument("--levels", type=int, default=10)
    sp.add_argument("--report", choices=["json", "csv"], default="json")

    sp = add("wedge", cmd_wedge, "wedge product of Hölder forms paired with a chain")
    sp.add_argument("--omega", required=True)
    sp.add_argument("--eta", required=True)
    sp.add_argument("--chain", default="unit:2")
    sp.add_argument("--tol", type=float, default=1e-3)
    sp.add_argument("--n-max", type=int, default=8)

    add("selftest", cmd_selftest, "run the built-in example checks")

    sp = add("corpus", cmd_corpus, "materialize the built-in test corpus")
    sp.add_argument("--dir", default="corpus")

    sp = add("replay", cmd_replay, "re-run a manifest and compare output hashes")
    sp.add_argument("manifest")
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        par = Parallel(_threads(args))
        em = Emitter(args, argv)
        code = args.func(args, em, par)
        return EXIT_OK if code is None else int(code)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FraccurError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

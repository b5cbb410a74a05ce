"""Command-line entry point: qgrass <command> [flags].

Every output record is one JSON object per line carrying "v": 1. Usage errors
exit with 2, failed invariants with 1; either way a JSON error object goes to
stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Callable, Iterable, Iterator

import numpy as np

SCHEMA_VERSION = 1
SAFE_INT = 2 ** 53


class UsageError(Exception):
    pass


class InvariantFailure(Exception):
    pass


# ---------------------------------------------------------------------------
# Configuration

@dataclass
class RunConfig:
    command: str
    disc: int | None = None
    d_from: int | None = None
    d_to: int | None = None
    p: int = 3
    q: int = 7
    squarefree: bool = False
    isotype_of: str | None = None
    oracle: bool = False
    out: str | None = None
    format: str = "jsonl"
    threads: int = 1
    seed: int = 0
    kind: str = "sphere"
    modulus: int | None = None
    residue: str | None = None
    coherence: bool = False
    repeat: bool = False
    only: str | None = None

    def d_range(self) -> range:
        if self.disc is not None:
            if self.d_from is not None or self.d_to is not None:
                raise UsageError("give either --disc or --from/--to, not both")
            lo = hi = self.disc
        else:
            if self.d_from is None or self.d_to is None:
                raise UsageError("a discriminant (--disc) or a range (--from, --to) is required")
            lo, hi = self.d_from, self.d_to
        if lo < 1 or hi < lo:
            raise UsageError(f"invalid range {lo}..{hi}")
        return range(lo, hi + 1)


# config-file key -> RunConfig field
CONFIG_KEYS = {f.name.replace("_", "-"): f.name for f in fields(RunConfig) if f.name != "command"}
CONFIG_KEYS.update({"from": "d_from", "to": "d_to"})


def read_config_file(path: str) -> dict:
    """Flat `key = value` lines; '#' starts a comment."""
    out = {}
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as e:
        raise UsageError(f"cannot read config file {path}: {e.strerror}") from None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        out[CONFIG_KEYS[key]] = value
    return out


def _coerce(name: str, value):
    kind = {f.name: f.type for f in fields(RunConfig)}[name]
    if not isinstance(value, str):
        return value
    if "bool" in kind:
        low = value.lower()
        if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
            raise UsageError(f"{name}: expected a boolean, got {value!r}")
        return low in ("1", "true", "yes", "on")
    if "int" in kind:
        try:
            return int(value)
        except ValueError:
            raise UsageError(f"{name}: expected an integer, got {value!r}") from None
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("jsonl", "csv"))
    common.add_argument("--threads", type=int, help="worker processes (env QG_THREADS)")
    common.add_argument("--seed", type=int, help="seed for Monte-Carlo oracles")

    ranged = _Parser(add_help=False)
    ranged.add_argument("--disc", type=int, help="a single discriminant")
    ranged.add_argument("--from", dest="d_from", type=int)
    ranged.add_argument("--to", dest="d_to", type=int)

    parser = _Parser(prog="qgrass", description="Integral planes in Q^4, their shapes and statistics.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("enumerate", parents=[common, ranged], help="planes of discriminant D")
    p.add_argument("--oracle", action="store_const", const=True,
                   help="cross-check every D against the wedge brute force")

    p = sub.add_parser("stats", parents=[common, ranged], help="equidistribution reports")
    p.add_argument("--p", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--squarefree", action="store_const", const=True)
    p.add_argument("--isotype-of", dest="isotype_of", metavar="D:INDEX",
                   help="per-isotype reports, keeping the isotype of plane INDEX of R_D")
    p.add_argument("--oracle", action="store_const", const=True,
                   help="add a seeded uniform-sample baseline per report")

    p = sub.add_parser("count", parents=[common, ranged], help="exact point counts")
    p.add_argument("--kind", choices=("sphere", "field", "density", "fiber"))
    p.add_argument("--p", type=int, help="prime for --kind field")
    p.add_argument("--modulus", type=int, help="N for --kind density or fiber")
    p.add_argument("--residue", help="six comma-separated integers for --kind fiber")

    p = sub.add_parser("glue", parents=[common, ranged], help="glue groups of planes")
    p.add_argument("--oracle", action="store_const", const=True,
                   help="also compare each glue group with that of the GL2-reduced Gram form")

    p = sub.add_parser("classgroup", parents=[common], help="class group of -4D or of delta")
    p.add_argument("--disc", type=int, required=False,
                   help="negative: a form discriminant; positive D: use -4D")
    p.add_argument("--coherence", action="store_const", const=True,
                   help="add the shape coherence report (positive square-free D = 1, 2 mod 4)")

    p = sub.add_parser("selftest", parents=[common], help="run the acceptance suite")
    p.add_argument("--repeat", action="store_const", const=True,
                   help="run twice and require byte-identical logs")
    p.add_argument("--only", help="comma-separated criterion numbers")
    return parser


def load_config(argv: list[str]) -> RunConfig:
    """Flags > config file > QG_THREADS > defaults."""
    ns = build_parser().parse_args(argv)
    merged: dict = {}
    env_threads = os.environ.get("QG_THREADS")
    if env_threads:
        merged["threads"] = env_threads
    if getattr(ns, "config", None):
        merged.update(read_config_file(ns.config))
    for key, value in vars(ns).items():
        if key not in ("config", "command") and value is not None:
            merged[key] = value
    cfg = RunConfig(ns.command, **{k: _coerce(k, v) for k, v in merged.items()})
    if cfg.format not in ("jsonl", "csv"):
        raise UsageError(f"unknown format {cfg.format!r}")
    if cfg.threads < 1:
        raise UsageError("threads must be at least 1")
    return cfg


# ---------------------------------------------------------------------------
# Serialization

def _plain(x):
    """JSON-safe copy: big ints become decimal strings, fractions become "n/d"."""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        x = int(x)
        return str(x) if abs(x) >= SAFE_INT else x
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    return x


def to_json(record: dict) -> str:
    return json.dumps({"v": SCHEMA_VERSION, **_plain(record)}, separators=(",", ":"),
                      ensure_ascii=False)


class Writer:
    """Single ordered writer; every record is flushed whole."""

    def __init__(self, stream, fmt: str):
        self.stream = stream
        self.fmt = fmt
        self.csv = None

    def write(self, record: dict) -> None:
        if self.fmt == "jsonl":
            self.stream.write(to_json(record) + "\n")
        else:
            flat = {"v": SCHEMA_VERSION}
            for k, v in _plain(record).items():
                flat[k] = json.dumps(v, separators=(",", ":")) if isinstance(v, (list, dict)) else v
            if self.csv is None:
                self.csv = csv.DictWriter(self.stream, fieldnames=list(flat), lineterminator="\n",
                                          extrasaction="ignore")
                self.csv.writeheader()
            self.csv.writerow(flat)
        self.stream.flush()


def ordered_map(fn: Callable, items: Iterable, threads: int) -> Iterator:
    """fn over items, results in input order; a process pool when threads > 1."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        for x in items:
            yield fn(x)
        return
    with ProcessPoolExecutor(max_workers=threads) as pool:
        yield from pool.map(fn, items)


# ---------------------------------------------------------------------------
# enumerate

def _z(form) -> dict:
    from .forms import BinaryForm, CMPoint
    pt = CMPoint(BinaryForm(*form))
    return {"form": list(form), "x": pt.x, "y": pt.y}


def plane_records(D: int) -> list[dict]:
    """One record per plane of R_D, in wedge order."""
    from . import batch
    from .glue import glue_key_from_gram, glue_group
    B = batch.plane_batch(D)
    if len(B) == 0:
        return []
    q_L = batch.gram_forms(B.bases)
    perp = B.perp_bases()
    q_perp = batch.gram_forms(perp)
    point_forms = batch._ortho_forms_distinct(B.sphere)
    q_a = [point_forms[B.index[:, k]] for k in (0, 1)]
    shapes = [batch.reduce_gl2_rows(batch.primitive_rows(F)) for F in (q_L, q_perp, *q_a)]
    glue_cache: dict = {}
    out = []
    for i in range(len(B)):
        f = tuple(q_L[i].tolist())
        if f not in glue_cache:
            a, b, c = f
            gram = ((a, b // 2), (b // 2, c))
            G = glue_group(gram)
            glue_cache[f] = ((1,) * (2 - len(G.divisors)) + tuple(G.divisors),
                             glue_key_from_gram(gram))
        divisors, key = glue_cache[f]
        rec = {"D": D, "basis": B.bases[i], "wedge": B.wedges[i],
               "a1": B.pairs[i, 0], "a2": B.pairs[i, 1],
               "q_L": q_L[i], "q_Lperp": q_perp[i], "q_a1": q_a[0][i], "q_a2": q_a[1][i]}
        for k in range(4):
            rec[f"z{k + 1}"] = _z(tuple(shapes[k][i].tolist()))
        rec["glue_divisors"] = divisors
        rec["glue_key"] = key
        out.append(rec)
    return out


def _oracle_mismatch(D: int) -> str | None:
    from . import batch
    from .planes import enumerate_planes_wedge_oracle
    ours = set(map(tuple, batch.plane_batch(D).wedges.tolist()))
    n, theirs = enumerate_planes_wedge_oracle(D)
    if ours != theirs:
        return f"D={D}: pair pipeline gives {len(ours)} planes, wedge oracle {n}"
    return None


def _enumerate_job(args) -> tuple:
    D, oracle = args
    return plane_records(D), (_oracle_mismatch(D) if oracle else None)


def cmd_enumerate(cfg: RunConfig, w: Writer) -> int:
    rng = cfg.d_range()
    if cfg.oracle and rng.stop - 1 > 500:
        raise UsageError("the wedge oracle is limited to D <= 500")
    failures = []
    for records, failure in ordered_map(_enumerate_job, [(D, cfg.oracle) for D in rng], cfg.threads):
        for r in records:
            w.write(r)
        if failure:
            failures.append(failure)
    if failures:
        raise InvariantFailure("; ".join(failures))
    return 0


# ---------------------------------------------------------------------------
# stats

def _isotype_key(arg: str) -> str:
    from .planes import plane_from_wedge
    from .glue import glue_type_key
    from . import batch
    try:
        d, idx = (int(s) for s in arg.split(":"))
    except ValueError:
        raise UsageError("--isotype-of expects D:INDEX") from None
    W = batch.plane_batch(d).wedges if d >= 1 else np.zeros((0, 6))
    if not 0 <= idx < len(W):
        raise UsageError(f"R_{d} has {len(W)} planes; index {idx} is out of range")
    return glue_type_key(plane_from_wedge(tuple(W[idx].tolist())))


def _uniform_baseline(n: int, seed: int, D: int) -> dict:
    """Correlation of independent uniform samples of the same size (Monte-Carlo oracle)."""
    from .stats import cross_entries, joint_correlation
    rng = np.random.default_rng([seed, D])
    vals = rng.uniform(-1.0, 1.0, size=(n, 6)) * np.sqrt(3.0)
    factors = ["s1", "s2", "s3", "s4", "s5", "s6"]
    corr = joint_correlation(vals)
    return {"n": n, "cross_median": float(np.median(np.abs(cross_entries(corr, factors))))}


def _report_record(r) -> dict:
    rec = {"D": r.D, "n": r.n, "isotype": r.isotype, "library": r.header["library"],
           "sphere": r.sphere, "cusp": r.cusp, "negative_control": r.negative_control,
           "cross_median": r.cross_median, "names": r.names, "correlation": r.correlation}
    return rec


def _stats_job(args) -> list:
    from .forms import _is_squarefree
    from .stats import run_experiment
    D, p, q, squarefree, key, oracle, seed = args
    if squarefree and not _is_squarefree(D):
        return []
    out = []
    for r in run_experiment(D, D, p, q, "isotype" if key else "all"):
        if key is not None and r.isotype != key:
            continue
        rec = _report_record(r)
        if oracle:
            rec["uniform_baseline"] = _uniform_baseline(r.n, seed, r.D)
        out.append(rec)
    return out


def cmd_stats(cfg: RunConfig, w: Writer) -> int:
    from .stats import _check_primes
    rng = cfg.d_range()
    try:
        _check_primes(cfg.p, cfg.q)
    except ValueError as e:
        raise UsageError(str(e)) from None
    key = _isotype_key(cfg.isotype_of) if cfg.isotype_of else None
    jobs = [(D, cfg.p, cfg.q, cfg.squarefree, key, cfg.oracle, cfg.seed) for D in rng]
    for records in ordered_map(_stats_job, jobs, cfg.threads):
        for r in records:
            w.write(r)
    return 0


# ---------------------------------------------------------------------------
# count

def cmd_count(cfg: RunConfig, w: Writer) -> int:
    from . import counting
    if cfg.kind == "sphere":
        mismatches = 0
        for D in cfg.d_range():
            brute = counting.r3_prim(D)
            quoted = counting.r3_prim_formula(D)
            twisted = counting.r3_prim_formula(D, sign=-1)
            mismatches += quoted != brute
            w.write({"kind": "sphere", "D": D, "r3": counting.r3(D), "r3_prim": brute,
                     "formula": quoted, "formula_match": quoted == brute,
                     "formula_neg_char": twisted, "formula_neg_char_match": twisted == brute})
        return 0
    if cfg.kind == "field":
        p = cfg.p
        try:
            for a in range(p):
                rec = {"kind": "field", "p": p, "alpha": a,
                       "rp_formula": counting.rp_alpha(p, a),
                       "rp_brute": counting.rp_alpha(p, a, "brute")}
                if p <= counting.W_COUNT_MAX_P:
                    rec["w_count"] = counting.w_count_mod_p(p, a)
                    rec["w_formula"] = counting.w_count_formula(p, a)
                w.write(rec)
            if p <= counting.W_COUNT_MAX_P:
                w.write({"kind": "field", "p": p, "square_fraction": counting.square_fraction(p)})
        except ValueError as e:
            raise UsageError(str(e)) from None
        return 0
    if cfg.kind == "density":
        if cfg.modulus is None:
            raise UsageError("--kind density needs --modulus")
        try:
            density, bound = counting.bad_class_density(cfg.modulus)
        except ValueError as e:
            raise UsageError(str(e)) from None
        w.write({"kind": "density", "N": cfg.modulus, "density": density,
                 "m_two_thirds_power": bound})
        return 0
    if cfg.modulus is None or cfg.residue is None:
        raise UsageError("--kind fiber needs --modulus and --residue")
    try:
        residue = tuple(int(s) for s in cfg.residue.split(","))
        if len(residue) != 6:
            raise ValueError("residue must have six entries")
        d_max = cfg.d_to if cfg.d_to is not None else 1000
        s = counting.fiber_count(cfg.modulus, residue, d_max)
    except ValueError as e:
        raise UsageError(str(e)) from None
    for x, c, p, r in zip(s.checkpoints, s.counts, s.predicted, s.ratios):
        w.write({"kind": "fiber", "N": s.N, "residue": s.residue, "X": x, "count": c,
                 "predicted": p, "ratio": r})
    return 0


# ---------------------------------------------------------------------------
# glue

def _glue_job(args) -> tuple:
    from . import batch
    from .glue import glue_group, glue_iso_equal, glue_key_from_gram
    D, oracle = args
    B = batch.plane_batch(D)
    if len(B) == 0:
        return [], 0
    grams = batch.gram_forms(B.bases).tolist()
    predicted = batch.predicted_divisors_rows(D, B.pairs[:, 0], B.pairs[:, 1]).tolist()
    cache: dict = {}
    out, bad = [], 0
    for i, (f, want) in enumerate(zip(grams, predicted)):
        f = tuple(f)
        if f not in cache:
            a, b, c = f
            gram = ((a, b // 2), (b // 2, c))
            G = glue_group(gram)
            cache[f] = (G, glue_key_from_gram(gram))
        G, key = cache[f]
        divs = list((1,) * (2 - len(G.divisors)) + tuple(G.divisors))
        rec = {"D": D, "wedge": B.wedges[i], "divisors": divs, "predicted": want,
               "match": divs == want and G.order == D, "order": G.order,
               "q_generators": list(G.frac_form), "glue_key": key}
        if oracle:
            reduced = batch.reduce_gl2_rows(np.array([f]))[0].tolist()
            a, b, c = reduced
            H = glue_group(((a, b // 2), (b // 2, c)))
            rec["iso_reduced_gram"] = glue_iso_equal(G, H)
        bad += not rec["match"]
        out.append(rec)
    return out, bad


def cmd_glue(cfg: RunConfig, w: Writer) -> int:
    bad = 0
    for records, n in ordered_map(_glue_job, [(D, cfg.oracle) for D in cfg.d_range()], cfg.threads):
        for r in records:
            w.write(r)
        bad += n
    if bad:
        raise InvariantFailure(f"{bad} planes disagree with the local-type prediction")
    return 0


# ---------------------------------------------------------------------------
# classgroup

def cmd_classgroup(cfg: RunConfig, w: Writer) -> int:
    from .forms import class_group, coherence_check
    if cfg.disc is None:
        raise UsageError("classgroup needs --disc")
    delta = cfg.disc if cfg.disc < 0 else -4 * cfg.disc
    try:
        G = class_group(delta)
    except ValueError as e:
        raise UsageError(str(e)) from None
    rec = {"delta": delta, "h": G.order, "elements": [list(f) for f in G.elements],
           "orders": [G.element_order(f) for f in G.elements],
           "two_torsion": [list(f) for f in G.two_torsion()]}
    if cfg.coherence:
        if cfg.disc < 0:
            raise UsageError("--coherence needs a positive D")
        try:
            r = coherence_check(cfg.disc)
        except ValueError as e:
            raise UsageError(str(e)) from None
        rec["coherence"] = {
            "planes": r.planes, "skipped": r.skipped, "distinct": r.distinct, "bound": r.bound,
            "ok": r.ok,
            "c1": [[list(f), n] for f, n in sorted(r.c1_values.items())],
            "c2": [[list(f), n] for f, n in sorted(r.c2_values.items())]}
    w.write(rec)
    if cfg.coherence and not rec["coherence"]["ok"]:
        raise InvariantFailure(f"coherence excess at D={cfg.disc}")
    return 0


# ---------------------------------------------------------------------------
# selftest

def cmd_selftest(cfg: RunConfig, out) -> int:
    from .acceptance import selftest
    only = None
    if cfg.only:
        try:
            only = {int(s) for s in cfg.only.split(",")}
        except ValueError:
            raise UsageError("--only expects comma-separated criterion numbers") from None
    return 0 if selftest(out, repeat=cfg.repeat, only=only) else 1


# ---------------------------------------------------------------------------

HANDLERS = {"enumerate": cmd_enumerate, "stats": cmd_stats, "count": cmd_count,
            "glue": cmd_glue, "classgroup": cmd_classgroup}


def _error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"v": SCHEMA_VERSION, "error": kind, "message": message,
                                 "exit": code}) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if any(a in ("-h", "--help") for a in argv):
        build_parser().parse_args(argv)  # prints help and exits 0
    stream = None
    try:
        cfg = load_config(argv)
        stream = open(cfg.out, "w", encoding="utf-8", newline="") if cfg.out else sys.stdout
        if cfg.command == "selftest":
            return cmd_selftest(cfg, stream)
        return HANDLERS[cfg.command](cfg, Writer(stream, cfg.format))
    except UsageError as e:
        return _error("usage", str(e), 2)
    except InvariantFailure as e:
        return _error("invariant", str(e), 1)
    except BrokenPipeError:
        # reader went away (e.g. `| head`); what was written is a valid prefix
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return 0
    except OSError as e:
        return _error("io", str(e), 2)
    except KeyboardInterrupt:
        return _error("interrupted", "stopped; output so far is a valid prefix", 1)
    finally:
        if stream is not None and stream is not sys.stdout:
            stream.close()


if __name__ == "__main__":
    sys.exit(main())

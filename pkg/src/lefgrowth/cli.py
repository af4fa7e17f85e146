"""Command-line front end.

Exit codes: 0 success, 1 mathematical failure or counterexample, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import shlex
import sys
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CSV_HEADER = "radius,lower_bound,lower_provenance,upper_bound,upper_provenance,notes"
WITNESS_FORMAT = "lefgrowth.witness/1"
MANIFEST_NAME = "manifest.json"

if hasattr(sys, "set_int_max_str_digits"):
    # factorial bounds run to tens of thousands of digits
    sys.set_int_max_str_digits(0)


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Manifests
# ---------------------------------------------------------------------------


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int | None
    tool_version: str
    outputs: dict = field(default_factory=dict)  # file name -> sha256

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> RunManifest:
        data = json.loads(text)
        try:
            return cls(data["command"], data["parameters"], data.get("seed"), data["tool_version"], data.get("outputs", {}))
        except (KeyError, TypeError) as exc:
            raise UsageError(f"malformed manifest: {exc}") from None


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class Outputs:
    """Resolves output paths under --out-dir and records what was written."""

    def __init__(self, out_dir: str | None):
        self.dir = Path(out_dir) if out_dir else None
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)
        self.written: list[Path] = []

    def path(self, given: str | None, default: str | None) -> Path | None:
        name = given or (default if self.dir else None)
        if name is None:
            return None
        p = Path(name)
        if self.dir and not p.is_absolute():
            p = self.dir / p
        return p

    def write(self, path: Path, text: str) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        self.written.append(path)

    def manifest(self, command: str, argv: Sequence[str], seed: int | None) -> None:
        if not self.dir:
            return
        outputs = {}
        for p in self.written:
            try:
                rel = p.resolve().relative_to(self.dir.resolve())
            except ValueError:
                continue
            outputs[str(rel)] = sha256_file(p)
        m = RunManifest(command, {"argv": list(_strip_out_dir(argv))}, seed, __version__, dict(sorted(outputs.items())))
        (self.dir / MANIFEST_NAME).write_text(m.to_json(), encoding="utf-8")


def _strip_out_dir(argv: Sequence[str]) -> list[str]:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out-dir":
            skip = True
            continue
        if a.startswith("--out-dir="):
            continue
        out.append(a)
    return out


# ---------------------------------------------------------------------------
# Shared argument handling
# ---------------------------------------------------------------------------


def _add_table_args(p: argparse.ArgumentParser, depth_default: int | None = None) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--table", help="values f(0), f(1), ... as a comma list or JSON array")
    g.add_argument("--builtin", help="linear, pow2, odd or poly:ALPHA")
    p.add_argument("--depth", type=int, default=depth_default, help="last index of the table")


def _load_table(args, need: int | None = None):
    from .permissible import make_table

    try:
        if args.builtin is not None:
            depth = args.depth if args.depth is not None else need
            if depth is None:
                raise UsageError("--builtin needs --depth")
            return make_table(args.builtin, max(depth, need or 0))
        f = make_table(args.table)
    except (ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad table: {exc}") from None
    if not f.values:
        raise UsageError("empty table")
    if args.depth is not None:
        if args.depth > f.depth:
            raise UsageError(f"--depth {args.depth} exceeds the table (last index {f.depth})")
        from .permissible import PermissibleFn

        f = PermissibleFn(f.values[: args.depth + 1], f.name)
    if need is not None and f.depth < need:
        raise UsageError(f"table must reach index {need}")
    return f


def parse_range(text: str) -> list[int]:
    """"a..b" (inclusive, empty when b < a), "a,b,c" or a single integer."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(x) for x in text.split("..", 1))
            return list(range(lo, hi + 1))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad range {text!r}") from None


def _emit(text: str, path: Path | None, outs: Outputs) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        outs.write(path, text)


# ---------------------------------------------------------------------------
# permissible / omega
# ---------------------------------------------------------------------------


def cmd_permissible(args) -> int:
    from .permissible import check_permissible

    f = _load_table(args)
    rep = check_permissible(f.values)
    out = {"table": list(f.values), **rep.to_dict()}
    outs = Outputs(args.out_dir)
    _emit(json.dumps(out, indent=2) + "\n", outs.path(args.json, "permissible.json"), outs)
    outs.manifest("permissible", args.argv, None)
    return EXIT_OK if rep.ok else EXIT_FAIL


def cmd_omega(args) -> int:
    from .permissible import build_omega, check_permissible
    from .schreier import growth_table

    f = _load_table(args)
    chk = check_permissible(f.values)
    if not chk.ok:
        print(json.dumps(chk.to_dict()), file=sys.stderr)
        return EXIT_FAIL
    try:
        om = build_omega(f, f.depth)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    R = f.depth - 1
    graph = om.ball(R)[0]
    table = growth_table(om.action, om.base, R)
    ok = list(table.sizes) == list(f.values[: R + 1])
    outs = Outputs(args.out_dir)
    dot = graph.to_dot()
    dot_path = outs.path(args.dot, "omega.dot")
    csv_path = outs.path(args.csv, "growth.csv")
    if dot_path:
        outs.write(dot_path, dot)
    _emit(table.to_csv(), csv_path, outs)
    outs.manifest("omega", args.argv, None)
    if not ok:
        print(f"growth {table.sizes} differs from the table {list(f.values[: R + 1])}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


def _log10(x: int) -> float:
    if x < 10**300:
        return math.log10(x)
    s = len(str(x))
    return s - 1 + math.log10(int(str(x)[:17]) / 10**16)


def _fmt_int(x: int | None) -> str:
    return "" if x is None else str(x)


def _csv_field(s: str) -> str:
    if any(c in s for c in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def record_row(rec) -> str:
    notes = rec.notes
    for label, v in (("lower", rec.lower), ("upper", rec.upper)):
        if v is not None and v > math.factorial(20):
            notes = (notes + "; " if notes else "") + f"log10 {label} = {_log10(v):.6f}"
    cells = [str(rec.radius), _fmt_int(rec.lower), rec.lower_provenance, _fmt_int(rec.upper), rec.upper_provenance, notes]
    return ",".join(_csv_field(c) for c in cells)


def bounds_csv(records) -> str:
    return "\n".join([CSV_HEADER] + [record_row(r) for r in records]) + "\n"


def elem_bounds(f, ns: Sequence[int], seed: int, prime: int | None = None) -> list:
    """Upper bounds q^(|X_n|^2) |Q_n| with q = 2^(n+1) + 1, or p^(|X_n|^2) |Q_n|
    over F_p.  No lower bounds: their constants are not certified here."""
    from .embeddings import GrowthBoundRecord
    from .permissible import build_finite_action

    out = []
    for n in ns:
        if n < 2:
            out.append(GrowthBoundRecord(n, None, "", None, "", "no finite approximation for n < 2"))
            continue
        a = build_finite_action(f, n, seed=seed)
        X = a.X_size
        if prime is None:
            q = 2 ** (n + 1) + 1
            prov = f"explicit witness: SL_X(Z/{q}) x| Q_n"
        else:
            q = prime
            prov = f"explicit witness: SL_X(F_{q}) x| Q_n"
        upper = q ** (X * X) * a.Q_order
        notes = f"|X_n|={X}; q={q}; N={a.modulus}; |Q_n|={a.Q_order}; lower-bound constants not certified"
        out.append(GrowthBoundRecord(n, None, "", upper, prov, notes))
    return out


def cmd_bounds(args) -> int:
    from .sym_enrich import enrich_bounds_table

    ns = parse_range(args.range)
    if any(n < 0 for n in ns):
        raise UsageError("radii must be non-negative")
    if ns and max(ns) > args.max_n:
        raise UsageError(f"range exceeds the cap n <= {args.max_n} (raise --max-n)")
    need = 2 * max(ns) + 1 if ns else None
    f = _load_table(args, need) if ns else None
    if f is not None:
        from .permissible import check_permissible

        chk = check_permissible(f.values)
        if not chk.ok:
            print(json.dumps(chk.to_dict()), file=sys.stderr)
            return EXIT_FAIL
    if not ns:
        records = []
    elif args.flavor == "sym":
        records = enrich_bounds_table(f, ns, seed=args.seed, relator_radius=args.relator_radius)
    elif args.flavor == "elem-Z":
        records = elem_bounds(f, ns, args.seed)
    else:
        from sympy import isprime

        if not isprime(args.prime):
            raise UsageError(f"--prime {args.prime} is not prime")
        records = elem_bounds(f, ns, args.seed, prime=args.prime)
    outs = Outputs(args.out_dir)
    _emit(bounds_csv(records), outs.path(args.csv, "bounds.csv"), outs)
    outs.manifest("bounds", args.argv, args.seed)
    return EXIT_OK


# ---------------------------------------------------------------------------
# witnesses
# ---------------------------------------------------------------------------


def _pair_from_source(src: dict):
    from .permissible import PermissibleFn, build_finite_action
    from .sym_enrich import integer_pair, permissible_pair

    kind = src.get("pair")
    if kind == "integer":
        return integer_pair(int(src["n"]), src.get("m"))
    if kind == "permissible":
        f = PermissibleFn(tuple(int(v) for v in src["f"]))
        return permissible_pair(build_finite_action(f, int(src["n"]), seed=int(src.get("seed", 0))))
    raise UsageError(f"unknown pair kind {kind!r}")


def _rebuild(src: dict):
    """(domain, target, element decoder) for a witness source description."""
    from .embeddings import free_ball_domain, z_ball_domain
    from .groupkit import FreeWord, make_catalog_group

    kind = src.get("kind")
    if kind == "sym-phi":
        from .sym_enrich import EnrichElem, window_domain

        pair = _pair_from_source(src)
        return window_domain(pair), pair.target, EnrichElem.from_json
    if kind == "local-embedding":
        target = make_catalog_group(src["target"])
        if src["domain"] == "z-ball":
            return z_ball_domain(int(src["n"])), target, int
        if src["domain"] == "free-ball":
            rank = int(src["rank"])
            return free_ball_domain(rank, int(src["n"])), target, lambda s: FreeWord.parse(s, rank)
        raise UsageError(f"unknown domain {src['domain']!r}")
    raise UsageError(f"unknown witness kind {kind!r}")


def witness_to_json(witness, source: dict) -> str:
    """Serialise a PartialMapWitness together with how to rebuild it."""
    dom, tgt = witness.domain, witness.target
    entries = [{"x": _jsonable(x), "image": tgt.to_json(witness.table[dom.key(x)])} for x in dom.elements]
    data = {
        "format": WITNESS_FORMAT,
        "source": source,
        "domain": dom.name,
        "target": getattr(tgt, "name", str(tgt)),
        "status": witness.status,
        "checks": witness.checks,
        "entries": entries,
    }
    return json.dumps(data, indent=1, sort_keys=True) + "\n"


def _jsonable(x):
    if hasattr(x, "to_json"):
        return x.to_json()
    if isinstance(x, (int, str)):
        return x
    return str(x)


def load_witness(text: str):
    """Rebuild (domain, target, table) from witness JSON; UsageError if malformed."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"witness is not JSON: {exc}") from None
    if not isinstance(data, dict) or data.get("format") != WITNESS_FORMAT:
        raise UsageError("not a witness file")
    try:
        domain, target, decode = _rebuild(data["source"])
        table = {}
        for e in data["entries"]:
            x = decode(e["x"])
            table[domain.key(x)] = target.from_json(e["image"])
    except UsageError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"malformed witness: {exc!r}") from None
    keys = {domain.key(x) for x in domain.elements}
    if set(table) != keys:
        raise UsageError(f"witness covers {len(table)} keys, domain has {len(keys)}")
    return domain, target, table


def cmd_verify(args) -> int:
    from .embeddings import verify_local_embedding

    path = Path(args.witness)
    if not path.is_file():
        raise UsageError(f"no such file: {path}")
    domain, target, table = load_witness(path.read_text(encoding="utf-8"))
    w = verify_local_embedding(domain, target, table)
    report = {"status": w.status, "checks": w.checks, "domain": domain.name, "elements": len(domain)}
    if w.counterexample is not None:
        kind, *xs = w.counterexample
        report["counterexample"] = {"kind": kind, "elements": [_jsonable(x) for x in xs]}
    print(json.dumps(report, indent=2))
    return EXIT_OK if w.verified else EXIT_FAIL


def cmd_witness(args) -> int:
    if args.flavor != "sym":
        raise UsageError("witness files are produced for the sym flavor only")
    if args.table is None and args.builtin is None:
        source = {"kind": "sym-phi", "pair": "integer", "n": args.n}
    else:
        f = _load_table(args, 2 * args.n + 1)
        source = {"kind": "sym-phi", "pair": "permissible", "f": list(f.values[: 2 * args.n + 2]), "n": args.n, "seed": args.seed}
    if args.n < 1 or (source["pair"] == "permissible" and args.n < 2):
        raise UsageError("n too small for this pair")
    from .sym_enrich import phi_partial_witness

    w = phi_partial_witness(_pair_from_source(source))
    domain = w.domain
    outs = Outputs(args.out_dir)
    _emit(witness_to_json(w, source), outs.path(args.json, "witness.json"), outs)
    outs.manifest("witness", args.argv, args.seed)
    print(f"{w.status}: {len(domain)} elements, {w.checks} checks", file=sys.stderr)
    return EXIT_OK if w.verified else EXIT_FAIL


# ---------------------------------------------------------------------------
# tc / replay
# ---------------------------------------------------------------------------


def cmd_tc(args) -> int:
    from .presentations import Presentation, todd_coxeter

    path = Path(args.presentation)
    if not path.is_file():
        raise UsageError(f"no such file: {path}")
    try:
        pres = Presentation.from_text(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise UsageError(f"bad presentation: {exc}") from None
    t = todd_coxeter(pres, cap=args.cap, strategy=args.strategy)
    out = {"status": t.status, "index": t.index, "strategy": t.strategy, "max_live": t.max_live, "total_defined": t.total_defined}
    outs = Outputs(args.out_dir)
    _emit(json.dumps(out, indent=2) + "\n", outs.path(args.json, "tc.json"), outs)
    outs.manifest("tc run", args.argv, None)
    return EXIT_OK if t.status == "complete" else EXIT_FAIL


def cmd_replay(args) -> int:
    mpath = Path(args.manifest)
    if mpath.is_dir():
        mpath = mpath / MANIFEST_NAME
    if not mpath.is_file():
        raise UsageError(f"no such manifest: {mpath}")
    m = RunManifest.from_json(mpath.read_text(encoding="utf-8"))
    argv = m.parameters.get("argv")
    if not isinstance(argv, list):
        raise UsageError("manifest has no argv")
    with tempfile.TemporaryDirectory() as tmp:
        code = main(list(argv) + ["--out-dir", tmp])
        fresh = RunManifest.from_json((Path(tmp) / MANIFEST_NAME).read_text(encoding="utf-8"))
    diffs = sorted(k for k in set(m.outputs) | set(fresh.outputs) if m.outputs.get(k) != fresh.outputs.get(k))
    print(json.dumps({"command": shlex.join(argv), "exit": code, "identical": not diffs, "differing": diffs}, indent=2))
    return EXIT_OK if not diffs else EXIT_FAIL


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lefgrowth", description="Prescribed-growth actions, enrichments and growth bounds.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed=False):
        sp.add_argument("--out-dir", help="write outputs and a manifest here")
        sp.add_argument("--json", help="JSON output path")
        if seed:
            sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("permissible", help="validate a growth table")
    _add_table_args(sp)
    common(sp)
    sp.set_defaults(func=cmd_permissible)

    sp = sub.add_parser("omega", help="build the action with prescribed growth")
    _add_table_args(sp)
    sp.add_argument("--dot", help="Schreier graph DOT path")
    sp.add_argument("--csv", help="growth CSV path (stdout if omitted)")
    common(sp)
    sp.set_defaults(func=cmd_omega)

    sp = sub.add_parser("bounds", help="growth bound table")
    _add_table_args(sp)
    sp.add_argument("--range", required=True, help="radii as a..b, a list or one integer")
    sp.add_argument("--flavor", choices=["sym", "elem-Z", "elem-p"], default="sym")
    sp.add_argument("--prime", type=int, default=2, help="field size for elem-p")
    sp.add_argument("--relator-radius", type=int, default=8)
    sp.add_argument("--max-n", type=int, default=8, help="largest radius accepted")
    sp.add_argument("--csv", help="CSV path (stdout if omitted)")
    common(sp, seed=True)
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("verify", help="replay a witness file")
    sp.add_argument("witness")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("witness", help="write an enrichment local-embedding witness")
    sp.add_argument("--flavor", choices=["sym"], default="sym")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--table")
    g.add_argument("--builtin")
    sp.add_argument("--depth", type=int)
    sp.add_argument("--n", type=int, default=1)
    common(sp, seed=True)
    sp.set_defaults(func=cmd_witness)

    sp = sub.add_parser("tc", help="coset enumeration")
    tsub = sp.add_subparsers(dest="tc_command", required=True)
    tp = tsub.add_parser("run", help="enumerate cosets of the trivial subgroup")
    tp.add_argument("presentation")
    tp.add_argument("--cap", type=int, default=10_000)
    tp.add_argument("--strategy", choices=["hlt", "felsch"], default="hlt")
    common(tp)
    tp.set_defaults(func=cmd_tc)

    sp = sub.add_parser("replay", help="rerun a manifest and compare output digests")
    sp.add_argument("manifest", help="manifest.json or the directory holding it")
    sp.set_defaults(func=cmd_replay)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    args.argv = argv
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

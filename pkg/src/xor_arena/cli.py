"""Command-line front end: ``xor-arena <command> ...``.

Exit codes: 0 success, 1 computation failed, 2 bad usage or unreadable input.
With ``--json`` the output is one JSON object tagged with ``schema``.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import classical, fl_relax, quantum, simulate
from .games import (CATALOG, GameError, XorGame, binary_product, catalog, chsh,
                    conjunction, convex_combine, game_from_dict, parity_play_probability, save_game,
                    transpose, watrous, xor_sum_all)
from .tsirelson import strategy_from_vectors

SCHEMA = "xor-arena/1"
EXACT_TOL = classical.VERIFY_TOL
PROGRESS_THRESHOLD = 1 << 20


class UsageError(Exception):
    pass


@dataclass
class CommandResult:
    code: int
    record: dict = field(default_factory=dict)
    text: list = field(default_factory=list)


def resolve_game(name: str):
    """Built-in names first; anything with a path separator prefix is a file."""
    if not name.startswith(("./", "/", "../")) and name.lower() in CATALOG:
        return catalog(name)
    path = Path(name)
    if not path.is_file():
        raise UsageError(f"no built-in game or file named {name!r}")
    try:
        return game_from_dict(json.loads(path.read_text(encoding="utf-8")))
    except json.JSONDecodeError as e:
        raise UsageError(f"{name}: invalid JSON ({e})") from None
    except GameError as e:
        raise UsageError(f"{name}: {e}") from None


def _xor_only(g, what: str) -> XorGame:
    if not isinstance(g, XorGame):
        raise UsageError(f"{what} needs XOR games")
    return g


def _search_kwargs(args, gain_shape=None):
    threads = max(1, args.threads)
    kw = {"workers": threads, "chunks": 4 * threads if threads > 1 else 1}
    if gain_shape is not None:
        ns, na, nt, nb = gain_shape
        if min(na ** ns, nb ** nt) >= PROGRESS_THRESHOLD:
            kw["chunks"] = max(kw["chunks"], 16)
            kw["progress"] = lambda k, n: print(f"search: {k}/{n} chunks", file=sys.stderr, flush=True)
    return kw


def _conj_shape(c):
    ns, nt = c.shape
    return ns, c.answer_arity, nt, c.answer_arity


def _fmt(v: float) -> str:
    return f"{v:.6f}"


# --- commands ----------------------------------------------------------------

def cmd_value(args) -> CommandResult:
    games = [resolve_game(n) for n in args.games]
    res = CommandResult(0, {"command": "value"})
    if args.conj:
        comps = [_xor_only(g, "--conj") for g in games]
        if args.classical:
            c = conjunction(comps)
            v, w = classical.classical_value(c, **_search_kwargs(args, _conj_shape(c)))
            res.record.update(kind="classical", conjunction=True, value=v, tol=EXACT_TOL,
                              witness=w.to_dict(c.s_labels(), c.t_labels(), c.n))
            res.text.append(f"classical value of conjunction: {_fmt(v)} ± {EXACT_TOL:g} "
                            f"({Fraction(v).limit_denominator(1 << 12)})")
        else:
            bound, product = quantum.quantum_corollary_bound(comps, args.tol)
            res.record.update(kind="quantum", conjunction=True, value=product,
                              subset_bound=bound, tol=args.tol)
            res.text.append(f"quantum value of conjunction: {_fmt(product)} ± {args.tol:g}")
            res.text.append(f"subset-average upper bound: {_fmt(bound)}")
        return res
    rows = []
    for name, g in zip(args.games, games):
        if args.classical:
            gain = classical.xor_gain(g) if isinstance(g, XorGame) else g.gain()
            v, w = classical.classical_value(g, **_search_kwargs(args, gain.shape))
            labels = (g.s_labels, g.t_labels)
            rows.append({"game": name, "value": v, "tol": EXACT_TOL, "witness": w.to_dict(*labels)})
            res.text.append(f"{name}: classical value {_fmt(v)} ± {EXACT_TOL:g} "
                            f"({Fraction(v).limit_denominator(1 << 12)})")
        else:
            r = quantum.quantum_bias(_xor_only(g, "--quantum"), args.tol)
            rows.append({"game": name, "value": r.value, "bias": r.bias, "tol": args.tol,
                         "certified_gap": r.gap})
            res.text.append(f"{name}: quantum value {_fmt(r.value)} ± {args.tol:g} "
                            f"(bias {_fmt(r.bias)}, certified gap {r.gap:.1e})")
    res.record.update(kind="classical" if args.classical else "quantum", results=rows)
    return res


def cmd_compose(args) -> CommandResult:
    games = [resolve_game(n) for n in args.games]
    if args.xor:
        out = xor_sum_all([_xor_only(g, "--xor") for g in games])
    elif args.transpose:
        if len(games) != 1:
            raise UsageError("--transpose takes one game")
        out = transpose(_xor_only(games[0], "--transpose"))
    else:
        if len(games) != 2:
            raise UsageError("--convex takes two games")
        if not 0.0 <= args.convex <= 1.0:
            raise UsageError("--convex weight must lie in [0, 1]")
        out = convex_combine(args.convex, *(_xor_only(g, "--convex") for g in games))
    save_game(out, args.output)
    return CommandResult(0, {"command": "compose", "output": str(args.output), "shape": list(out.shape)},
                         [f"wrote {out.shape[0]}x{out.shape[1]} game to {args.output}"])


def cmd_repeat(args) -> CommandResult:
    g = _xor_only(resolve_game(args.game), "repeat")
    k = args.n
    if k < 1:
        raise UsageError("--n must be at least 1")
    games = [g] * k
    wq = quantum.quantum_value(g, args.tol)
    qbound, qclosed = quantum.quantum_corollary_bound(games, args.tol)
    rec = {"command": "repeat", "n": k, "tol": args.tol, "product_quantum": wq ** k,
           "quantum_subset_bound": qbound, "quantum_closed_form": qclosed}
    text = [f"prod omega_q          {_fmt(wq ** k)} ± {args.tol:g}",
            f"quantum subset bound  {_fmt(qbound)}",
            f"closed-form product   {_fmt(qclosed)}"]
    try:
        cb = classical.classical_corollary_bound(games, **_search_kwargs(args))
        rec["classical_subset_bound"] = cb
        text.append(f"classical subset bound {_fmt(cb)} ({Fraction(cb).limit_denominator(1 << 12)})")
    except classical.BudgetExceeded as e:
        rec["classical_subset_bound"] = None
        text.append(f"classical subset bound skipped: {e}")
    try:
        c = conjunction(games)
        v, _ = classical.classical_value(c, **_search_kwargs(args, _conj_shape(c)))
        rec["classical_exact"] = v
        text.append(f"classical exact        {_fmt(v)} ({Fraction(v).limit_denominator(1 << 12)})")
    except classical.BudgetExceeded as e:
        rec["classical_exact"] = None
        text.append(f"classical exact skipped: {e}")
    return CommandResult(0, rec, text)


def cmd_certify(args) -> CommandResult:
    g = _xor_only(resolve_game(args.game), "certify")
    r = quantum.quantum_bias(g, args.tol)
    payload = r.certificate.to_dict()
    payload["tol"] = args.tol
    Path(args.output).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return CommandResult(0, {"command": "certify", "output": str(args.output), "bias_upper": r.upper,
                             "bias_lower": r.lower, "tol": args.tol},
                         [f"bias <= {r.upper:.10f} (primal {r.lower:.10f}); certificate in {args.output}"])


def cmd_verify(args) -> CommandResult:
    g = _xor_only(resolve_game(args.game), "verify")
    try:
        cert = quantum.DualCertificate.from_dict(json.loads(Path(args.certificate).read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError, KeyError) as e:
        raise UsageError(f"cannot read certificate {args.certificate}: {e}") from None
    try:
        chk = quantum.verify_certificate(cert, g, args.tol)
    except ValueError as e:
        raise UsageError(str(e)) from None
    ok = chk.ok and chk.flipped_ok
    rec = {"command": "verify", "ok": ok, "objective": cert.objective, "min_eig": chk.min_eig,
           "flipped_min_eig": chk.flipped_min_eig, "tol": args.tol}
    verdict = "valid" if ok else "INVALID"
    return CommandResult(0 if ok else 1, rec,
                         [f"certificate {verdict}: bias <= {cert.objective:.10f} "
                          f"(min eigenvalues {chk.min_eig:.2e}, {chk.flipped_min_eig:.2e}; tol {args.tol:g})"])


def cmd_relax(args) -> CommandResult:
    g = resolve_game(args.game)
    fn = fl_relax.sigma_solution if args.sigma else fl_relax.sigma_bar_solution
    sol = fn(g, args.tol)
    which = "sigma" if args.sigma else "sigma_bar"
    return CommandResult(0, {"command": "relax", "relaxation": which, "value": sol.objective,
                             "gap": sol.gap, "tol": args.tol},
                         [f"{which}: {_fmt(sol.objective)} ± {args.tol:g} (gap {sol.gap:.1e})"])


def _strategy_for(g, source: str, args):
    if source == "optimal-classical":
        gain = classical.xor_gain(g) if isinstance(g, XorGame) else g.gain()
        _, w = classical.classical_value(g, **_search_kwargs(args, gain.shape))
        arity = 2 if isinstance(g, XorGame) else max(g.a_arity, g.b_arity)
        return simulate.deterministic(w, arity)
    if source == "optimal-quantum":
        r = quantum.quantum_bias(_xor_only(g, "optimal-quantum"), args.tol)
        return simulate.quantum(strategy_from_vectors(r.vectors))
    try:
        d = json.loads(Path(source).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read strategy {source}: {e}") from None
    try:
        return simulate.strategy_from_dict(d, g)
    except (ValueError, KeyError) as e:
        raise UsageError(f"{source}: {e}") from None


def cmd_simulate(args) -> CommandResult:
    g = resolve_game(args.game)
    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    st = _strategy_for(g, args.strategy, args)
    try:
        rep = simulate.play(st, g, args.trials, args.seed, args.shards)
    except simulate.StrategyError as e:
        raise UsageError(str(e)) from None
    rec = {"command": "simulate", **rep.to_dict()}
    return CommandResult(0, rec, [f"win rate {rep.estimate:.6f} ± {rep.stderr:.6f} (1 s.e.) over "
                                  f"{rep.trials} trials, seed {rep.seed}, shards {rep.shards}"])


def reference_table(args) -> list[dict]:
    c = chsh()
    kw = _search_kwargs(args)
    rows = []

    def add(what, expected, value, tol=EXACT_TOL):
        num, den = expected.split("/")
        target = float(num) / float(den)
        rows.append({"quantity": what, "expected": expected, "value": value, "tol": tol,
                     "match": abs(value - target) <= tol})

    add("classical value of CHSH", "3/4", classical.classical_value(c, **kw)[0])
    add("parity play of two 3/4 games", "5/8", parity_play_probability(0.75, 0.75))
    add("classical value of CHSH and CHSH", "10/16",
        classical.classical_value(conjunction([c, c]), **kw)[0])
    add("classical bias of CHSH xor CHSH xor CHSH", "5/16",
        classical.classical_bias(xor_sum_all([c, c, c]), **kw)[0])
    c3 = conjunction([c, c, c])
    add("classical value of CHSH three times", "31/64",
        classical.classical_value(c3, **_search_kwargs(args, _conj_shape(c3)))[0])
    add("classical subset bound for three CHSH", "34.5/64", classical.classical_corollary_bound([c, c, c], **kw))
    w = watrous()
    add("classical value of the Watrous game", "2/3", classical.classical_value(w, **kw)[0])
    add("classical value of Watrous twice", "2/3", classical.classical_value(binary_product(w, w), **kw)[0])
    return rows


def cmd_demo(args) -> CommandResult:
    rows = reference_table(args)
    wq = quantum.quantum_value(chsh(), args.tol)
    rows.append({"quantity": "quantum value of CHSH", "expected": "(1+1/sqrt2)/2",
                 "value": wq, "tol": 1e-6, "match": abs(wq - (1 + 2 ** -0.5) / 2) <= 1e-6})
    width = max(len(r["quantity"]) for r in rows)
    text = [f"{'quantity':<{width}}  {'expected':>14}  {'computed':>18}  ok"]
    for r in rows:
        text.append(f"{r['quantity']:<{width}}  {r['expected']:>14}  {r['value']:>18.15f}  "
                    f"{'yes' if r['match'] else 'NO'}")
    ok = all(r["match"] for r in rows)
    return CommandResult(0 if ok else 1, {"command": "demo", "table": rows}, text)


# --- parser ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{message}\n\n{self.format_help()}")


def build_parser() -> argparse.ArgumentParser:
    def common(tol: float = 1e-8):
        # fresh parent per command: argparse shares parent actions, so defaults must not leak
        c = argparse.ArgumentParser(add_help=False)
        c.add_argument("--json", action="store_true", help="machine-readable output")
        c.add_argument("--threads", type=int, default=1, help="worker threads for classical search")
        c.add_argument("--tol", type=float, default=tol, help=f"numerical tolerance (default {tol:g})")
        return [c]

    p = _Parser(prog="xor-arena", description="Values, certificates and simulations for XOR games.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    v = sub.add_parser("value", parents=common(), help="classical or quantum value")
    mode = v.add_mutually_exclusive_group(required=True)
    mode.add_argument("--classical", action="store_true")
    mode.add_argument("--quantum", action="store_true")
    v.add_argument("--conj", action="store_true", help="value of the conjunction of the games")
    v.add_argument("games", nargs="+")
    v.set_defaults(func=cmd_value)

    c = sub.add_parser("compose", parents=common(), help="build a composite game file")
    op = c.add_mutually_exclusive_group(required=True)
    op.add_argument("--xor", action="store_true")
    op.add_argument("--convex", type=float, metavar="LAMBDA")
    op.add_argument("--transpose", action="store_true")
    c.add_argument("games", nargs="+")
    c.add_argument("-o", "--output", required=True)
    c.set_defaults(func=cmd_compose)

    r = sub.add_parser("repeat", parents=common(), help="parallel repetition report")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("game")
    r.set_defaults(func=cmd_repeat)

    ce = sub.add_parser("certify", parents=common(), help="write a dual certificate")
    ce.add_argument("game")
    ce.add_argument("-o", "--output", required=True)
    ce.set_defaults(func=cmd_certify)

    ve = sub.add_parser("verify", parents=common(quantum.CERT_TOL), help="check a dual certificate")
    ve.add_argument("game")
    ve.add_argument("certificate")
    ve.set_defaults(func=cmd_verify)

    re_ = sub.add_parser("relax", parents=common(1e-7), help="Feige-Lovasz relaxations")
    which = re_.add_mutually_exclusive_group(required=True)
    which.add_argument("--sigma", action="store_true")
    which.add_argument("--sigma-bar", action="store_true")
    re_.add_argument("game")
    re_.set_defaults(func=cmd_relax)

    s = sub.add_parser("simulate", parents=common(), help="Monte Carlo play")
    s.add_argument("game")
    s.add_argument("--strategy", required=True, help="file, optimal-classical or optimal-quantum")
    s.add_argument("--trials", type=int, default=100000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--shards", type=int, default=1)
    s.set_defaults(func=cmd_simulate)

    d = sub.add_parser("demo", parents=common(), help="reproduce the reference numbers")
    d.add_argument("table", choices=["paper-table"])
    d.set_defaults(func=cmd_demo)
    return p


def run(argv=None) -> CommandResult:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "threads", 1) < 1:
            raise UsageError("--threads must be at least 1")
        return args.func(args)
    except UsageError as e:
        return CommandResult(2, {"error": str(e).splitlines()[0]}, [f"error: {e}"])
    except (classical.BudgetExceeded, fl_relax.RelaxationError, quantum.QuantumError,
            simulate.StrategyError, GameError, ValueError, RuntimeError) as e:
        return CommandResult(1, {"error": str(e)}, [f"error: {e}"])


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if any(a in ("-h", "--help") for a in argv):
        try:
            build_parser().parse_args(argv)
        except SystemExit as e:
            return int(e.code or 0)
    res = run(argv)
    as_json = "--json" in argv
    if as_json:
        out = {"schema": SCHEMA, "exit_code": res.code, **res.record}
        print(json.dumps(out, default=_json_default, sort_keys=True))
    else:
        stream = sys.stdout if res.code == 0 else sys.stderr
        for line in res.text:
            print(line, file=stream)
    return res.code


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


if __name__ == "__main__":
    sys.exit(main())

"""Command-line surface: one verb per construct, JSON reports on demand.

Exit status 0 means a verdict was computed (pass or fail alike); nonzero
means the tool itself failed (unreadable input, exhausted budget, bad
parameters).  JSON output is canonical (sorted keys, no timestamps), so
identical inputs produce byte-identical reports.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import bases, blur, ca, games, ra, rainbow, repsearch
from .errors import AlwError, BudgetExceededError
from .networks import Network
from .report import canonical_json, global_budget, wrap_report

# ---------------------------------------------------------------- helpers


def _read_json(path):
    if path == "-":
        return json.load(sys.stdin)
    with open(path) as fh:
        return json.load(fh)


def _load_structure(path):
    data = _read_json(path)
    kind = data.get("kind")
    if kind == "ra":
        return ra.RaAtomStructure.load_json(data)
    if kind == "ca":
        return ca.CaAtomStructure.load_json(data)
    raise AlwError(f'input must have "kind" "ra" or "ca", got {kind!r}')


def _emit(args, body, human):
    if args.json:
        sys.stdout.write(canonical_json(body))
    else:
        print(human)


def _out_structure(args, data):
    text = canonical_json(data)
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------- gen


def cmd_gen(args):
    if args.what == "ek23":
        s = ra.gen_ek23(args.k)
        _out_structure(args, s.to_json())
    elif args.what == "full-frame":
        f = ca.full_set_frame(args.n, args.base)
        _out_structure(args, f.to_json())
    elif args.what == "rainbow":
        n = args.n
        spec = rainbow.RainbowSpec(
            n=n,
            green_tints=tuple(range(1, (args.greens or n + 1) + 1)),
            red_pairs=tuple((i, j) for i in range(args.reds or n)
                            for j in range(i + 1, args.reds or n)),
            name=f"rainbow(n={n})",
        )
        f = rainbow.gen_rainbow_frame(spec)
        _out_structure(args, f.to_json())
    elif args.what == "zn":
        f = rainbow.gen_zn_truncation(args.g_min, args.red_max, n=args.n)
        _out_structure(args, f.to_json())
    elif args.what == "colour-rules":
        spec = ra.ColourRuleSpec.from_json(_read_json(args.spec))
        s = ra.gen_from_colour_rules(spec)
        _out_structure(args, s.to_json())
    elif args.what == "split":
        s = ra.RaAtomStructure.load_json(_read_json(args.input))
        _out_structure(args, ra.split_atoms(s, args.copies).to_json())
    return 0


# ---------------------------------------------------------------- checks


def cmd_check_ra(args):
    s = ra.RaAtomStructure.load_json(_read_json(args.input))
    rep = ra.check_ra_axioms(s)
    body = wrap_report("check-ra", {"input": args.input},
                       {"report": rep.to_json(),
                        "structure": s.to_json()})
    _emit(args, body, str(rep))
    return 0


def cmd_check_ca(args):
    f = ca.CaAtomStructure.load_json(_read_json(args.input))
    rep = ca.check_ca_axioms(f)
    body = wrap_report("check-ca", {"input": args.input},
                       {"report": rep.to_json()})
    _emit(args, body, str(rep))
    return 0


# ---------------------------------------------------------------- bases


def cmd_mat(args):
    s = ra.RaAtomStructure.load_json(_read_json(args.input))
    fam = bases.enumerate_mat(s, args.n)
    body = wrap_report("mat", {"input": args.input, "n": args.n},
                       {"count": len(fam),
                        "matrices": [bases.matrix_name(s, m, args.n)
                                     for m in fam]})
    grids = "\n\n".join(bases.matrix_grid(s, m, args.n) for m in fam)
    _emit(args, body, f"Mat_{args.n}: {len(fam)} matrices\n\n{grids}")
    return 0


def cmd_basis(args):
    s = ra.RaAtomStructure.load_json(_read_json(args.input))
    if args.width:
        res = bases.relational_basis_exists(s, args.width,
                                            method=args.method)
        body = wrap_report(
            "basis", {"input": args.input, "width": args.width,
                      "method": args.method},
            {"relational": res.to_json(s), "structure": s.to_json()})
        verdict = "yes" if res.exists else "no"
        _emit(args, body,
              f"relational basis of width {args.width}: {verdict}"
              f"  {res.stats}")
        return 0
    fam = bases.enumerate_mat(s, args.n)
    rep = bases.check_cylindric_basis(fam)
    body = wrap_report(
        "basis", {"input": args.input, "n": args.n},
        {"verdict": rep.ok, "family_size": len(fam),
         "report": rep.to_json(), "structure": s.to_json(),
         "matrices": [bases.matrix_name(s, m, args.n) for m in fam]})
    _emit(args, body, f"Mat_{args.n} ({len(fam)} matrices)\n{rep}")
    return 0


def cmd_frame_from_basis(args):
    s = ra.RaAtomStructure.load_json(_read_json(args.input))
    fam = bases.enumerate_mat(s, args.n)
    frame = bases.frame_from_basis(fam)
    _out_structure(args, frame.to_json())
    return 0


# ---------------------------------------------------------------- games


def cmd_game(args):
    f = ca.CaAtomStructure.load_json(_read_json(args.input))
    if args.reuse:
        res = games.solve_omega_reuse(f, args.nodes,
                                      budget_limit=args.budget)
        game_kind, rounds = "reuse", None
    else:
        if not args.rounds:
            raise AlwError("give --rounds K or --reuse")
        res = games.solve_bounded(f, args.nodes, args.rounds,
                                  budget_limit=args.budget)
        game_kind, rounds = "bounded", args.rounds
    body = wrap_report(
        "game", {"input": args.input, "nodes": args.nodes,
                 "rounds": rounds, "reuse": bool(args.reuse)},
        res.to_json(f, game_kind, args.nodes, rounds))
    _emit(args, body,
          f"{game_kind} game on {args.nodes} nodes: winner {res.winner}"
          f" ({res.positions_explored} positions)")
    return 0


def cmd_certify_not_snr(args):
    f = ca.CaAtomStructure.load_json(_read_json(args.input))
    policy = None
    if args.cone_tints:
        tints = [int(t) for t in args.cone_tints.split(",")]
        policy = rainbow.ConeBombardment(tints)
    rep = games.certify_not_SNr(f, args.m, budget_limit=args.budget,
                                policy=policy, horizon=args.horizon)
    body = wrap_report("certify-not-snr",
                       {"input": args.input, "m": args.m},
                       rep.to_json())
    _emit(args, body, f"certify-not-snr m={args.m}: {rep.verdict}"
          f" (method {rep.method})")
    return 0


# ---------------------------------------------------------------- blur


def cmd_blur(args):
    s = ra.RaAtomStructure.load_json(_read_json(args.input))
    if args.action == "check":
        cert = blur.BlurCertificate.load_json(s, _read_json(args.cert))
        if args.strong:
            rep = blur.check_strong_blur(cert, semantics=args.semantics)
        else:
            rep = blur.check_complex_blur(cert, semantics=args.semantics)
        body = wrap_report(
            "blur", {"action": "check", "input": args.input,
                     "strong": bool(args.strong),
                     "semantics": args.semantics},
            {"verdict": rep.ok, "report": rep.to_json(),
             "certificate": cert.to_json(), "structure": s.to_json()})
        _emit(args, body, str(rep))
        return 0
    res = blur.search_blur(s, args.l, semantics=args.semantics)
    found = res.certificate is not None
    body = wrap_report(
        "blur", {"action": "search", "input": args.input, "l": args.l,
                 "semantics": args.semantics},
        {"found": found,
         "certificate": res.certificate.to_json() if found else None,
         "structure": s.to_json(),
         "stats": res.stats})
    _emit(args, body,
          f"strong {args.l}-blur search: "
          + ("found " + json.dumps(res.certificate.to_json())
             if found else f"none ({res.stats})"))
    return 0


# ---------------------------------------------------------------- repsearch


def cmd_represent(args):
    s = _load_structure(args.input)
    if isinstance(s, ra.RaAtomStructure):
        res = repsearch.find_ra_representation(s, base_max=args.base_max,
                                               budget=args.budget)
    else:
        res = repsearch.find_ca_representation(s, base_max=args.base_max,
                                               budget=args.budget)
    body = wrap_report(
        "represent", {"input": args.input, "base_max": args.base_max},
        {"result": res.to_json(),
         "structure": s.to_json()})
    _emit(args, body,
          f"representation search (base_max={args.base_max}): {res.outcome}"
          + (f" at base {res.base_size}" if res.outcome == "found" else ""))
    return 0


# ---------------------------------------------------------------- neat


def cmd_neat(args):
    f = ca.CaAtomStructure.load_json(_read_json(args.input))
    comps = ca.neat_reduct_atoms(f, args.dim)
    body_extra = {}
    human_extra = ""
    if args.dim >= 3:
        induced = ca.neat_reduct_frame(f, args.dim)
        body_extra = {"induced": induced.to_json(),
                      "provenance": induced.provenance}
        human_extra = f"; induced frame on {len(induced.atoms)} atoms"
    body = wrap_report(
        "neat", {"input": args.input, "dim": args.dim},
        {"components": [[f.atoms[a] for a in comp] for comp in comps],
         **body_extra})
    _emit(args, body,
          f"neat reduct to dim {args.dim}: {len(comps)} atoms{human_extra}")
    return 0


# ---------------------------------------------------------------- verify


def cmd_verify(args):
    data = _read_json(args.input)
    command = data.get("command")
    if command == "represent":
        res = data["result"]
        if res.get("outcome") != "found":
            _emit(args, wrap_report("verify", {"input": args.input},
                                    {"verdict": True,
                                     "note": "no witness to check"}),
                  "nothing to verify: search did not return a witness")
            return 0
        kind = res["witness"]["kind"]
        if kind == "ra-representation":
            s = ra.RaAtomStructure.load_json(data["structure"])
            ok, msg = repsearch.verify_ra_witness(s, res["witness"])
        else:
            f = ca.CaAtomStructure.load_json(data["structure"])
            ok, msg = repsearch.verify_ca_witness(f, res["witness"])
    elif command == "blur":
        s = ra.RaAtomStructure.load_json(data["structure"])
        cert_json = data.get("certificate")
        if cert_json is None:
            ok, msg = True, "no certificate to check"
        else:
            cert = blur.BlurCertificate.load_json(s, cert_json)
            rep = blur.check_strong_blur(
                cert, semantics=data["params"]["semantics"])
            claimed = data.get("found", data.get("verdict"))
            ok = rep.ok == bool(claimed) if claimed is not None else rep.ok
            msg = f"re-checked certificate: {'pass' if rep.ok else 'fail'}"
    elif command == "game":
        f = None
        ok, msg = _verify_trace(data)
    elif command == "basis":
        s = ra.RaAtomStructure.load_json(data["structure"])
        if "matrices" in data:
            n = data["params"]["n"]
            mats = []
            for name in data["matrices"]:
                rows = [row.split(",") for row in name.split("|")]
                mats.append(tuple(s.index[a] for row in rows for a in row))
            fam = bases.MatrixFamily(s, n, mats)
            bad = [m for m in fam if not bases.is_basic_matrix(s, m, n)]
            rep = bases.check_cylindric_basis(fam)
            ok = not bad and rep.ok == data["verdict"]
            msg = (f"{len(fam)} matrices re-validated; basis verdict "
                   f"{'matches' if ok else 'DIFFERS'}")
        else:
            ok, msg = True, "nothing embedded to re-check"
    else:
        raise AlwError(f"do not know how to verify command {command!r}")
    body = wrap_report("verify", {"input": args.input},
                       {"verdict": bool(ok), "note": msg})
    _emit(args, body, f"verify: {'OK' if ok else 'FAILED'} - {msg}")
    return 0


def _verify_trace(data):
    """Replay a game trace: every opener move must be legal where played."""
    struct = data.get("structure")
    if struct is None:
        return True, "no structure embedded; trace accepted unchecked"
    f = ca.CaAtomStructure.load_json(struct)
    net = None
    for step in data.get("trace", []):
        mv = step["move"]
        if "initial" in mv:
            atom = f.index[mv["initial"]]
            resp = step.get("response")
            if resp is None:
                continue
            net = _net_from_json(f, resp)
        else:
            t = tuple(mv["tuple"])
            a = f.index[mv["atom"]]
            if net is None or not f.related(mv["index"], net.labels[t], a):
                return False, f"illegal move in trace: {mv}"
            resp = step.get("response")
            if resp is None:
                return True, "trace ends with an unanswerable demand"
            net = _net_from_json(f, resp)
    return True, "trace replays legally"


def _net_from_json(f, data):
    labels = {}
    for key, name in data["labels"].items():
        t = tuple(int(c) for c in key.split(","))
        labels[t] = f.index[name]
    return Network(f, tuple(data["nodes"]), labels)


# ---------------------------------------------------------------- main


def build_parser():
    p = argparse.ArgumentParser(
        prog="alw",
        description="workbench for finite relation- and cylindric-algebra "
                    "atom structures")
    p.add_argument("--json", action="store_true",
                   help="machine-readable canonical JSON output")
    p.add_argument("--budget", type=int, default=None,
                   help="override the global search budget (ALW_BUDGET)")
    p.add_argument("--workers", type=int, default=1,
                   help="worker count (results are schedule-independent; "
                        "the current engine is sequential)")
    sub = p.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("gen", help="generate structures")
    gsub = g.add_subparsers(dest="what", required=True)
    ek = gsub.add_parser("ek23")
    ek.add_argument("--k", type=int, required=True)
    ek.add_argument("-o", "--output")
    ff = gsub.add_parser("full-frame")
    ff.add_argument("--n", type=int, default=3)
    ff.add_argument("--base", type=int, required=True)
    ff.add_argument("-o", "--output")
    rb = gsub.add_parser("rainbow")
    rb.add_argument("--n", type=int, default=3)
    rb.add_argument("--greens", type=int, default=None,
                    help="number of apex-green tints (default n+1)")
    rb.add_argument("--reds", type=int, default=None,
                    help="red index count (default n)")
    rb.add_argument("-o", "--output")
    zn = gsub.add_parser("zn")
    zn.add_argument("--g-min", type=int, required=True)
    zn.add_argument("--red-max", type=int, required=True)
    zn.add_argument("--n", type=int, default=3)
    zn.add_argument("-o", "--output")
    cr = gsub.add_parser("colour-rules")
    cr.add_argument("spec")
    cr.add_argument("-o", "--output")
    sp = gsub.add_parser("split")
    sp.add_argument("input")
    sp.add_argument("--copies", type=int, required=True)
    sp.add_argument("-o", "--output")
    g.set_defaults(func=cmd_gen)

    c = sub.add_parser("check-ra")
    c.add_argument("input")
    c.set_defaults(func=cmd_check_ra)

    c = sub.add_parser("check-ca")
    c.add_argument("input")
    c.set_defaults(func=cmd_check_ca)

    c = sub.add_parser("mat")
    c.add_argument("input")
    c.add_argument("--n", type=int, default=3)
    c.set_defaults(func=cmd_mat)

    c = sub.add_parser("basis")
    c.add_argument("input")
    c.add_argument("--n", type=int, default=3,
                   help="cylindric-basis check of Mat_n")
    c.add_argument("--width", type=int, default=None,
                   help="decide a relational basis of this width instead")
    c.add_argument("--method", choices=("fixpoint", "game"),
                   default="fixpoint")
    c.set_defaults(func=cmd_basis)

    c = sub.add_parser("frame-from-basis")
    c.add_argument("input")
    c.add_argument("--n", type=int, default=3)
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_frame_from_basis)

    c = sub.add_parser("game")
    c.add_argument("input")
    c.add_argument("--nodes", type=int, required=True)
    c.add_argument("--rounds", type=int, default=None)
    c.add_argument("--reuse", action="store_true")
    c.set_defaults(func=cmd_game)

    c = sub.add_parser("certify-not-snr")
    c.add_argument("input")
    c.add_argument("--m", type=int, required=True)
    c.add_argument("--cone-tints", default=None,
                   help="comma-separated tints for a scripted cone policy")
    c.add_argument("--horizon", type=int, default=64)
    c.set_defaults(func=cmd_certify_not_snr)

    c = sub.add_parser("blur")
    c.add_argument("action", choices=("check", "search"))
    c.add_argument("input")
    c.add_argument("--cert", default=None)
    c.add_argument("--l", type=int, default=3)
    c.add_argument("--strong", action="store_true")
    c.add_argument("--semantics", choices=blur.SAFE_SEMANTICS,
                   default="cover")
    c.set_defaults(func=cmd_blur)

    c = sub.add_parser("represent")
    c.add_argument("input")
    c.add_argument("--base-max", type=int, default=6)
    c.set_defaults(func=cmd_represent)

    c = sub.add_parser("neat")
    c.add_argument("input")
    c.add_argument("--dim", type=int, required=True)
    c.set_defaults(func=cmd_neat)

    c = sub.add_parser("verify")
    c.add_argument("input")
    c.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.budget is None:
        args.budget = global_budget()
    try:
        return args.func(args)
    except BudgetExceededError as e:
        print(f"alw: budget exhausted: {e} {e.stats}", file=sys.stderr)
        return 3
    except AlwError as e:
        print(f"alw: {e}", file=sys.stderr)
        return 2
    except (OSError, json.JSONDecodeError) as e:
        print(f"alw: cannot read input: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

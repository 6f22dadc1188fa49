"""Command-line entry point: ``ijgp {solve,gen,decompose,eval,audit}``.

Exit codes: 0 success, 1 usage or input error, 2 computation error,
3 zero-belief soundness violation.
"""

import argparse
import os
import sys

from .benchgen import gen_coding, gen_grid, gen_noisy_or, gen_random, sample_evidence
from .decomposition import (
    build_join_tree,
    join_graph_structuring,
    singleton_dual_join_graph,
    validate_decomposition,
)
from .errors import FormatError, InferenceError, SoundnessViolation
from .evaluation import (
    CSV_COLUMNS,
    ber,
    decode_bits,
    exact_marginals,
    metrics,
    metrics_row,
    write_metrics_csv,
)
from .flat import zero_belief_audit
from .inference import ConvergenceSpec, McMode, cte_bu, ibp, ijgp, mc_bu, trace_to_text
from .io import (
    parse_evidence,
    parse_marginals,
    parse_network,
    parse_truth,
    write_evidence,
    write_marginals,
    write_network,
    write_truth,
)

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_UNSOUND = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _load(args):
    net = parse_network(_read(args.net))
    evidence = parse_evidence(_read(args.evidence), net.cards) if args.evidence else {}
    return net, evidence


def _need_ibound(args):
    if args.ibound is None:
        raise UsageError(f"--alg {args.alg} needs --ibound")
    return args.ibound


def cmd_solve(args):
    net, evidence = _load(args)
    spec = ConvergenceSpec(max_iterations=args.iters, tolerance=args.tol)
    if args.alg == "cte":
        result = cte_bu(net, build_join_tree(net), evidence)
    elif args.alg == "mc":
        i = _need_ibound(args)
        result = mc_bu(net, build_join_tree(net), evidence, i=i, mode=McMode(args.mode))
    elif args.alg == "ijgp":
        i = _need_ibound(args)
        result = ijgp(net, join_graph_structuring(net, i), evidence, spec)
    else:
        result = ibp(net, evidence, spec)
    _write(args.out, write_marginals(result.marginals))
    if args.trace:
        if not result.trace:
            raise UsageError(f"--trace is only available for iterative algorithms, not {args.alg}")
        _write(args.trace, trace_to_text(result.trace))
    return EXIT_OK


def cmd_gen(args):
    family = args.family
    truth = None
    evidence = None
    if family == "random":
        net = gen_random(args.n, args.k, args.c if args.c is not None else args.n - args.p, args.p, args.seed)
    elif family == "grid":
        net = gen_grid(args.m, args.k, args.seed)
    elif family == "noisyor":
        net = gen_noisy_or(args.n, args.p, args.seed, C=args.c)
    else:
        net, truth, evidence = gen_coding(args.n, args.p, args.sigma, args.seed)
    if evidence is None:
        evidence = sample_evidence(net, args.evidence_count, args.seed)
    _write(args.out + ".net", write_network(net))
    _write(args.out + ".evid", write_evidence(evidence))
    if truth is not None:
        _write(args.out + ".truth", write_truth(truth))
    return EXIT_OK


def cmd_decompose(args):
    net = parse_network(_read(args.net))
    if args.ibound is None:
        d = build_join_tree(net)
    elif args.ibound == 0:
        d = singleton_dual_join_graph(net)
    else:
        d = join_graph_structuring(net, args.ibound)
    text = d.to_text()
    status = EXIT_OK
    if args.check:
        report = validate_decomposition(d)
        text += f"# internal_width {report.internal_width}\n"
        text += f"# external_width {report.external_width}\n"
        text += f"# minimal {str(report.minimal).lower()}\n"
        for v in report.violations:
            text += f"# violation {v}\n"
        text += "# valid\n" if report.ok else "# invalid\n"
        status = EXIT_OK if report.ok else EXIT_COMPUTE
    _write(args.out, text)
    return status


def cmd_eval(args):
    net, evidence = _load(args)
    approx = parse_marginals(_read(args.approx))
    exact = exact_marginals(net, evidence)
    report = metrics(approx, exact)
    name = os.path.splitext(os.path.basename(args.net))[0]
    row = metrics_row(name, args.alg, args.ibound, args.iters, len(evidence), report)
    columns = CSV_COLUMNS
    if args.truth_bits:
        truth = parse_truth(_read(args.truth_bits))
        row["ber"] = ber(decode_bits(approx, range(len(truth))), truth)
        columns = CSV_COLUMNS + ("ber",)
    _write(args.out, write_metrics_csv([row], columns=columns))
    return EXIT_OK


def cmd_audit(args):
    net, evidence = _load(args)
    if args.ibound is None or args.ibound == 0:
        jg = singleton_dual_join_graph(net)
    else:
        jg = join_graph_structuring(net, args.ibound)
    spec = ConvergenceSpec(max_iterations=args.iters)
    report = zero_belief_audit(net, jg, evidence, spec, raise_on_failure=False)
    _write(args.out, report.to_text())
    if not report.passed or not report.within_bound:
        return EXIT_UNSOUND
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="ijgp", description="Exact and bounded belief updating on Bayesian networks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="compute posterior marginals")
    p.add_argument("--net", required=True)
    p.add_argument("--evidence")
    p.add_argument("--alg", choices=["cte", "mc", "ijgp", "ibp"], required=True)
    p.add_argument("--ibound", type=int)
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--mode", choices=["upper", "lower", "approx"], default="upper")
    p.add_argument("--out")
    p.add_argument("--trace")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("gen", help="generate a benchmark instance")
    p.add_argument("--family", choices=["random", "grid", "noisyor", "coding"], required=True)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--m", type=int, default=9)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--c", type=int)
    p.add_argument("--p", type=int, default=3)
    p.add_argument("--sigma", type=float, default=0.22)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--evidence-count", type=int, default=0)
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("decompose", help="print a decomposition (join tree without --ibound)")
    p.add_argument("--net", required=True)
    p.add_argument("--ibound", type=int, help="0 selects the singleton dual join-graph")
    p.add_argument("--check", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("eval", help="score a marginals file against exact inference")
    p.add_argument("--net", required=True)
    p.add_argument("--evidence")
    p.add_argument("--approx", required=True)
    p.add_argument("--truth-bits")
    p.add_argument("--alg", default="")
    p.add_argument("--ibound", type=int)
    p.add_argument("--iters", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("audit", help="cross-check belief zeros against arc-consistency")
    p.add_argument("--net", required=True)
    p.add_argument("--evidence")
    p.add_argument("--ibound", type=int, help="omit or 0 for the singleton dual join-graph")
    p.add_argument("--iters", type=int, default=30)
    p.add_argument("--out")
    p.set_defaults(func=cmd_audit)
    return parser


def cli_main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, FormatError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SoundnessViolation as exc:
        print(f"soundness violation: {exc}", file=sys.stderr)
        return EXIT_UNSOUND
    except (InferenceError, ValueError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()

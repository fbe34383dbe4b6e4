"""Command-line entry point: ``alex-bench {bench,gen,microbench,audit}``."""

from __future__ import annotations

import argparse
import logging
import sys
import time

from .datasets import gen_lognormal, gen_uniform64, write_dataset
from .microbench import error_magnitudes, search_microbenchmark
from .oracle import oracle_check
from .report import emit_report
from .workload import MIXES, SHIFTS, WorkloadSpec, error_histogram, make_index, run_workload

log = logging.getLogger("alex.harness")


def _mix(text: str):
    """A named mix or ``custom:R,I,S`` percentages."""
    if text in MIXES:
        return text, None
    if text.startswith("custom:"):
        parts = tuple(float(x) for x in text[len("custom:"):].split(","))
        return "custom", parts
    raise argparse.ArgumentTypeError(f"mix must be one of {sorted(MIXES)} or custom:R,I,S")


def _index_args(args) -> dict:
    if args.index == "btree":
        return {"page_bytes": args.page_bytes}
    return {"max_node_bytes": args.max_node_bytes}


def _common(p: argparse.ArgumentParser, index=True):
    if index:
        p.add_argument("--index", choices=("alex", "btree"), default="alex")
        p.add_argument("--page-bytes", type=int, default=1024, help="B+tree page size")
        p.add_argument("--max-node-bytes", type=int, default=16 << 20, help="ALEX max node size")
        p.add_argument("--payload-bytes", type=int, default=8)
    p.add_argument("--dataset", choices=("lognormal", "uniform64", "file"), default="lognormal")
    p.add_argument("--file", help="dataset file for --dataset file")
    p.add_argument("--integer-keys", action="store_true", help="file values are integers")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="alex-bench", description="learned index benchmark harness")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    b = sub.add_parser("bench", help="run a workload")
    _common(b)
    b.add_argument("--mix", type=_mix, default=("read_heavy", None))
    b.add_argument("--shift", choices=SHIFTS, default="shuffled")
    b.add_argument("--init-keys", type=int, default=100_000)
    b.add_argument("--total-keys", type=int, default=200_000)
    b.add_argument("--ops", type=int, default=None)
    b.add_argument("--seconds", type=float, default=None)
    b.add_argument("--zipf-theta", type=float, default=0.99)
    b.add_argument("--max-scan-len", type=int, default=100)
    b.add_argument("--no-verify", action="store_true", help="skip the shadow-set checks and audit")

    g = sub.add_parser("gen", help="write a dataset file")
    _common(g, index=False)
    g.add_argument("--total-keys", type=int, default=1_000_000)

    m = sub.add_parser("microbench", help="exponential vs bounded binary search")
    m.add_argument("--total-keys", type=int, default=1_000_000)
    m.add_argument("--max-error", type=int, default=(1 << 16) - 1)
    m.add_argument("--queries", type=int, default=2000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out")
    m.add_argument("--format", choices=("json", "csv"), default="csv")

    a = sub.add_parser("audit", help="bulk load, run oracle-checked random ops, audit invariants")
    _common(a)
    a.add_argument("--init-keys", type=int, default=10_000)
    a.add_argument("--ops", type=int, default=100_000)
    a.add_argument("--max-scan-len", type=int, default=100)
    return ap


def cmd_bench(args) -> int:
    mix, custom = args.mix
    ops = args.ops if args.ops is not None or args.seconds is not None else 100_000
    spec = WorkloadSpec(dataset=args.dataset, init_key_count=args.init_keys, total_key_count=args.total_keys,
                        mix=mix, custom=custom, zipf_theta=args.zipf_theta, max_scan_len=args.max_scan_len,
                        payload_bytes=args.payload_bytes, ops=ops, seconds=args.seconds, seed=args.seed,
                        shift=args.shift, path=args.file, integer_keys=args.integer_keys,
                        verify=not args.no_verify)
    rep = run_workload(args.index, spec, **_index_args(args))
    text = emit_report(rep, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)
    if rep.exhausted:
        log.warning("dataset exhausted after %d inserts", rep.inserts)
    if not rep.ok:
        log.error("%d mismatches, %d audit problems", rep.mismatches, len(rep.audit_problems))
        return 1
    return 0


def cmd_gen(args) -> int:
    if args.dataset == "file":
        log.error("gen writes synthetic datasets only")
        return 2
    if args.out is None:
        log.error("gen needs --out")
        return 2
    if args.dataset == "lognormal":
        write_dataset(args.out, gen_lognormal(args.total_keys, args.seed), integer=False)
    else:
        write_dataset(args.out, gen_uniform64(args.total_keys, args.seed), integer=True)
    log.info("wrote %d keys to %s", args.total_keys, args.out)
    return 0


def cmd_microbench(args) -> int:
    rows = search_microbenchmark(args.total_keys, error_magnitudes(args.max_error),
                                 bound=args.max_error + 1, queries=args.queries, seed=args.seed)
    text = emit_report(rows, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return 0


def cmd_audit(args) -> int:
    if args.dataset == "file":
        log.error("audit runs on synthetic datasets")
        return 2
    idx = make_index(args.index, args.payload_bytes, **_index_args(args))
    t0 = time.perf_counter()
    res = oracle_check(idx, args.dataset, args.init_keys, args.ops, args.seed, max_scan_len=args.max_scan_len)
    out = {"index": args.index, "dataset": args.dataset, "seed": args.seed, "ops": res.ops,
           "counts": res.counts, "mismatches": res.mismatches, "audit_problems": res.audit_problems,
           "num_keys": len(idx), "index_bytes": int(idx.index_bytes), "data_bytes": int(idx.data_bytes),
           "error_histogram": error_histogram(idx), "seconds": round(time.perf_counter() - t0, 3),
           "ok": res.ok}
    text = emit_report(out, args.format, args.out)
    if args.out is None:
        sys.stdout.write(text)
    return 0 if res.ok else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    return {"bench": cmd_bench, "gen": cmd_gen, "microbench": cmd_microbench, "audit": cmd_audit}[args.cmd](args)


if __name__ == "__main__":
    sys.exit(main())

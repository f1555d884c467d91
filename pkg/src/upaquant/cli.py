"""Command-line entry point ``upaquant``.

Campaign commands (``narrowband``, ``wideband``, ``compare``) need
``--seed``, ``--trials`` and ``--out``.  Failures print one JSON object on
stderr; runtime errors exit with status 1, usage errors with status 2.
"""

import argparse
import json
import sys
from dataclasses import asdict

from .analysis import allocate_feedback, allocation_table, analytic_report, FeedbackAllocation
from .channel import UpaGeometry
from .config import NARROWBAND_SCHEMES, WIDEBAND_SCHEMES, ExperimentConfig, load_config
from .errors import ConfigurationError, UpaQuantError
from .runner import compare, export_reports, parse_arrays, run_sweep, write_table

CONFIG_FIELDS = {f for f in ExperimentConfig.__dataclass_fields__}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(json.dumps({"error": "usage", "message": message}), file=sys.stderr)
        sys.exit(2)


def _int_list(text):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _add_array(p):
    p.add_argument("--m-v", dest="m_v", type=int)
    p.add_argument("--m-h", dest="m_h", type=int)
    p.add_argument("--d-v", dest="d_v", type=float)
    p.add_argument("--d-h", dest="d_h", type=float)
    p.add_argument("--p-set", dest="p_set", type=_int_list, help="path counts, e.g. 3,4,5")


def _add_campaign(p):
    p.add_argument("--config", help="flat section.key = value file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "jsonl"), default="csv")
    p.add_argument("--workers", type=int)
    p.add_argument("--scenario")
    p.add_argument("--arrays", help="sweep, e.g. 4x4,8x8 (default: --m-v x --m-h)")
    p.add_argument("--no-timing", action="store_true", help="report 0 seconds for byte-stable output")
    p.add_argument("--phase-levels", dest="phase_levels", type=int)
    p.add_argument("--max-delay", dest="max_delay", type=float)
    _add_array(p)


def _add_bits(p, wideband):
    p.add_argument("--b1", type=int)
    p.add_argument("--b2", type=int)
    p.add_argument("--b-c", dest="b_c", type=int)
    if wideband:
        for name in ("b_w1", "b_w2", "b_n1", "b_n2", "w_total", "l_blocks", "r_blocks"):
            p.add_argument("--" + name.replace("_", "-"), dest=name, type=int)
        p.add_argument("--spacing", type=float)
        p.add_argument("--f-c", dest="f_c", type=float)
    else:
        p.add_argument("--b-total", dest="b_total", type=int)


def build_parser():
    parser = _Parser(prog="upaquant", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("narrowband", help="narrowband Monte Carlo campaign")
    p.add_argument("--scheme", choices=NARROWBAND_SCHEMES)
    _add_campaign(p)
    _add_bits(p, wideband=False)

    p = sub.add_parser("wideband", help="wideband Monte Carlo campaign")
    p.add_argument("--scheme", choices=WIDEBAND_SCHEMES)
    _add_campaign(p)
    _add_bits(p, wideband=True)

    p = sub.add_parser("compare", help="run several schemes over one array sweep")
    p.add_argument("--run", action="append", required=True, metavar="LABEL=SCHEME[:key=val...]",
                   help="e.g. prop=proposed:b1=5:b2=4:b_c=2 or KP=kp:b_total=22")
    _add_campaign(p)

    p = sub.add_parser("allocate", help="best feedback-bit split per array size")
    p.add_argument("--b-total", dest="b_total", type=int, required=True)
    p.add_argument("--arrays", default="4x4,8x8,12x12,16x16,20x20")
    p.add_argument("--p-set", dest="p_set", type=_int_list, default=(3, 4, 5))
    p.add_argument("--max-beams", type=int, default=3)
    p.add_argument("--table", action="store_true", help="list every candidate split")
    p.add_argument("--out")

    p = sub.add_parser("analyze", help="closed-form gains for one allocation")
    _add_array(p)
    p.add_argument("--p-count", type=int, default=4)
    p.add_argument("--bits", type=_int_list, default=(5, 4), help="per-beam bits, e.g. 5,4")
    p.add_argument("--b-c", dest="b_c", type=int, default=2)
    p.add_argument("--out")

    p = sub.add_parser("selftest", help="quick closed-form vs Monte Carlo checks")
    p.add_argument("--seed", type=int, default=0)
    return parser


def _config_from_args(args, **extra):
    base = load_config(args.config) if getattr(args, "config", None) else ExperimentConfig(
        trials=1, m_v=4, m_h=4)
    changes = {k: v for k, v in vars(args).items() if k in CONFIG_FIELDS and v is not None}
    changes.update(extra)
    return base.replace(**changes)


def _arrays(args, config):
    return parse_arrays(args.arrays) if args.arrays else [(config.m_v, config.m_h)]


def _emit(reports, args):
    export_reports(reports, args.out, args.format)
    for r in reports:
        print(f"{r.scenario} {r.m_v}x{r.m_h} {r.scheme}: G={r.mean_gain:.4f} "
              f"+/- {r.stderr:.4f} ({r.b_total} bits, {r.trials} trials)")


def cmd_campaign(args, wideband):
    scheme = args.scheme or ("wideband" if wideband else "proposed")
    config = _config_from_args(args, scheme=scheme)
    if args.scenario is None and not getattr(args, "config", None):
        config = config.replace(scenario=scheme)
    _emit(run_sweep(config, _arrays(args, config), timing=not args.no_timing), args)


def _parse_run(spec, base):
    label, _, rest = spec.partition("=")
    parts = rest.split(":")
    if not label or not parts[0]:
        raise ConfigurationError(f"bad --run spec {spec!r}", field="run")
    changes = {"scenario": label, "scheme": parts[0]}
    for kv in parts[1:]:
        key, _, value = kv.partition("=")
        if key not in CONFIG_FIELDS:
            raise ConfigurationError(f"unknown key {key!r} in --run", field="run")
        changes[key] = _int_list(value) if key == "p_set" else type(
            getattr(base, key) if getattr(base, key) is not None else 0)(value)
    return base.replace(**changes)


def cmd_compare(args):
    base = _config_from_args(args)
    configs = [_parse_run(spec, base) for spec in args.run]
    arrays = _arrays(args, base)
    timing = not args.no_timing
    sweeps = [run_sweep(c, arrays, timing=timing) for c in configs]
    rows = compare(sweeps, configs)
    write_table(rows, args.out)
    for row in rows:
        print(json.dumps(row))


def cmd_allocate(args):
    rows = []
    for mv, mh in parse_arrays(args.arrays):
        geom = UpaGeometry(mv, mh)
        if args.table:
            for entry in allocation_table(geom, args.b_total, args.p_set, args.max_beams):
                rows.append({"m_v": mv, "m_h": mh, "b_total": args.b_total,
                             "n_beams": entry["n_beams"],
                             "allocation": " ".join(map(str, entry["allocation"])),
                             "objective": entry["objective"]})
            continue
        alloc, val = allocate_feedback(geom, args.b_total, args.p_set, args.max_beams)
        rows.append({"m_v": mv, "m_h": mh, "b_total": args.b_total, "n_beams": alloc.n_beams,
                     "allocation": " ".join(map(str, alloc.vector)), "objective": val})
    if args.out:
        write_table(rows, args.out)
    for row in rows:
        print(json.dumps(row))


def cmd_analyze(args):
    geom = UpaGeometry(args.m_v or 8, args.m_h or 8, args.d_v or 0.5, args.d_h or 0.5)
    report = analytic_report(geom, args.p_count, FeedbackAllocation(args.bits, args.b_c))
    text = json.dumps(asdict(report))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)


def cmd_selftest(args):
    from .analysis import complexity_budget, gamma_sq, gbc_closed, order_stat_gain
    from .oracles import mc_gamma_sq, mc_gbc, mc_order_stat

    checks = [
        ("budget-proposed-5-4-2", complexity_budget("proposed", 5, 4, 2) == (21, 3072)),
        ("budget-kp-11", complexity_budget("kp", 11) == (22, 4096)),
        ("gamma-sq-oracle", abs(mc_gamma_sq(4, 2, 20_000, args.seed) - gamma_sq(4, 2)) < 0.01),
        ("order-stat-oracle", abs(mc_order_stat(3, 20_000, args.seed)[0]
                                  - order_stat_gain(3, 1)) < 0.05),
        ("gbc-oracle", abs(mc_gbc(4, 20_000, args.seed) - gbc_closed(4)) < 0.02),
    ]
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    if not all(ok for _, ok in checks):
        raise UpaQuantError("selftest failed")


def main(argv=None):
    args = build_parser().parse_args(argv)
    handlers = {
        "narrowband": lambda a: cmd_campaign(a, wideband=False),
        "wideband": lambda a: cmd_campaign(a, wideband=True),
        "compare": cmd_compare,
        "allocate": cmd_allocate,
        "analyze": cmd_analyze,
        "selftest": cmd_selftest,
    }
    try:
        handlers[args.command](args)
    except UpaQuantError as exc:
        print(json.dumps(exc.as_dict()), file=sys.stderr)
        return 1
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

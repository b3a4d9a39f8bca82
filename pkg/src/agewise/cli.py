"""Command-line front end: one subcommand per pipeline stage plus whole campaigns."""

import argparse
import os
import sys

from . import campaign as cp
from .aging import AgingConditions
from .cfst import cfst_measure, parse_cfst, write_cfst
from .detector import DetectConfig, Design, run_detection
from .errors import AgewiseError, DetectionError
from .fabsim import age_chip, fabricate, read_chip, sample_fab_model, write_chip
from .mlkit import StackHyper
from .netlist import (emit_netlist, generate_netlist, read_activity, read_netlist,
                      simulate_activity, write_activity)
from .netlist.library import CellLibrary
from .sta import elaborate, enumerate_paths


def _write(path, text):
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _graph(args):
    return elaborate(read_netlist(args.netlist), CellLibrary())


def cmd_gen(args, cfg):
    nl = generate_netlist(cfg.gen_spec(args.seed))
    _write(args.out, emit_netlist(nl))
    print(f"wrote {args.out}: {len(nl.gates)} gates, {len(nl.flops)} flip-flops, "
          f"period {nl.period:.1f} ps")


def cmd_activity(args, cfg):
    nl = read_netlist(args.netlist)
    write_activity(simulate_activity(nl, args.cycles or cfg.cycles, seed=args.seed), args.out)
    print(f"wrote {args.out}")


def cmd_fab(args, cfg):
    graph = _graph(args)
    fab = sample_fab_model(cfg.fab, cp.derive_seed(args.seed, "snapshot"))
    chip = fabricate(graph, fab, args.chip_seed, args.chip_id)
    write_chip(chip, args.out)
    print(f"wrote {args.out}: chip {chip.chip_id}, {len(chip.delays)} arcs")


def cmd_age(args, cfg):
    graph = _graph(args)
    chip = read_chip(args.chip)
    act = read_activity(args.activity)
    cond = AgingConditions(args.months, cfg.temperature, cfg.vdd)
    aged = age_chip(chip, graph, act, cond, activity_seed=args.activity_seed)
    write_chip(aged, args.out)
    print(f"wrote {args.out}: chip {aged.chip_id} aged {aged.age_months:g} months")


def cmd_cfst(args, cfg):
    graph = _graph(args)
    paths = enumerate_paths(graph, cfg.k_paths)
    res = cfst_measure(read_chip(args.chip), paths, cfg.cfst)
    write_cfst(res, args.out)
    print(f"wrote {args.out}: {len(res.delays)} measured, {len(res.unmeasurable)} unmeasurable")


def cmd_adp(args, cfg):
    if args.netlist is None:
        graph = elaborate(generate_netlist(cfg.gen_spec(args.seed)), CellLibrary())
    else:
        graph = _graph(args)
    paths = enumerate_paths(graph, cfg.k_paths)
    if args.activity:
        ref = read_activity(args.activity)
    else:
        ref = simulate_activity(graph.netlist, cfg.cycles,
                                seed=cp.derive_seed(args.seed, "reference-activity"))
    adp, _ = cp.design_adp(cfg, args.seed, graph, paths, ref)
    _write(args.out, cp.emit_adp(adp))
    print(f"wrote {args.out}: |MAP|={len(adp.map_ids)} |LAP|={len(adp.lap_ids)} "
          f"dropped={len(adp.dropped_ids)}")


def cmd_detect(args, cfg):
    graph = _graph(args)
    adp = cp.parse_adp(_read(args.adp))
    meas = parse_cfst(_read(args.cfst))
    design = Design.build(graph, enumerate_paths(graph, cfg.k_paths), adp)
    seed = cp.derive_seed(args.seed, "gtm-split")
    dcfg = DetectConfig(cfg.th, seed, seed, StackHyper(seed=seed))
    report = run_detection(meas.chip_id or "chip", meas.delays, design, dcfg)
    _write(args.out, report.to_json())
    if not report.valid:
        raise DetectionError(report.error_stage, report.error)
    print(f"{report.chip_id}: MS={report.ms:.2f} ps (Th={report.th:g}) -> {report.verdict}")


def cmd_campaign(args, cfg):
    _, results = cp.run_campaign(cfg, args.seed, args.out)
    print(_read(os.path.join(args.out, "summary.txt")), end="")
    bad = [r.chip_id for _, _, r in results if not r.valid]
    if bad:
        raise DetectionError("campaign", f"{len(bad)} chip(s) failed detection: {bad[0]}...")


def cmd_report(args, cfg):
    rows = cp.write_report(args.run)
    print(cp.format_age_table(cp.age_table(rows)), end="")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                        help="global seed (default 0)")
    common.add_argument("--config", default=argparse.SUPPRESS,
                        help="INI campaign config; 'agewise config' prints the defaults")
    common.add_argument("--override", action="append", default=argparse.SUPPRESS,
                        metavar="SECTION.KEY=VALUE")
    p = argparse.ArgumentParser(prog="agewise", description=__doc__, parents=[common])
    sub = p.add_subparsers(dest="cmd", required=True)

    def add(name, fn, help_, out=True):
        s = sub.add_parser(name, help=help_, parents=[common])
        s.set_defaults(fn=fn)
        if out:
            s.add_argument("--out", required=True)
        return s

    add("gen", cmd_gen, "generate a synthetic netlist")
    s = add("activity", cmd_activity, "simulate per-net duty cycle / toggle counts")
    s.add_argument("--netlist", required=True)
    s.add_argument("--cycles", type=int)
    s = add("fab", cmd_fab, "fabricate a fresh chip instance")
    s.add_argument("--netlist", required=True)
    s.add_argument("--chip-seed", type=int, required=True)
    s.add_argument("--chip-id")
    s = add("age", cmd_age, "age a fresh chip under an activity profile")
    s.add_argument("--netlist", required=True)
    s.add_argument("--chip", required=True)
    s.add_argument("--activity", required=True)
    s.add_argument("--months", type=float, required=True)
    s.add_argument("--activity-seed", type=int)
    s = add("cfst", cmd_cfst, "measure path delays by frequency sweeping")
    s.add_argument("--netlist", required=True)
    s.add_argument("--chip", required=True)
    s = add("adp", cmd_adp, "identify most / least aging-affected path sets")
    s.add_argument("--netlist", help="design netlist (default: generate from --seed)")
    s.add_argument("--activity", help="designer's reference activity")
    s = add("detect", cmd_detect, "judge one chip from its measurements")
    s.add_argument("--netlist", required=True)
    s.add_argument("--adp", required=True)
    s.add_argument("--cfst", required=True)
    add("campaign", cmd_campaign, "run the full study and write an output tree")
    s = add("report", cmd_report, "summarise a finished campaign directory", out=False)
    s.add_argument("--run", required=True)
    add("config", lambda a, c: _write(a.out, cp.emit_config(c)),
        "write the effective configuration with documented defaults")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    for name, default in (("seed", 0), ("config", None), ("override", [])):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        cfg = cp.load_config(args.config, args.override)
    except (OSError, ValueError) as exc:
        print(f"agewise: [config] {exc}", file=sys.stderr)
        return 2
    try:
        args.fn(args, cfg)
    except DetectionError as exc:
        print(f"agewise: {exc}", file=sys.stderr)
        return 1
    except (AgewiseError, OSError, ValueError) as exc:
        print(f"agewise: [{args.cmd}] {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

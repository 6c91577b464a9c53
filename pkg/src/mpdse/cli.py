"""Command-line surface: pe-dse, explore, simulate, footprint, report.

Exit codes: 0 success, 1 simulation mismatch, 2 infeasible constraints or
configuration/calibration errors.  All outputs are deterministic for a given
set of flags and input files (no timestamps).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, kernels, reports
from .calibration import CalibrationError, CalibrationTable, default_calibration
from .dataflow import ArrayDims, buffer_plan, network_cycles
from .dse import (DesignPoint, HardwareConstraints, InfeasibleError, evaluate, evaluate_dims,
                  full_flow, pe_dse)
from .pe import PEConfig, PEError, PEStyle, pairs_per_issue, taxonomy
from .quant import FootprintPolicy, compression_factor, footprint, footprint_bits
from .workload import NetworkSpec, WorkloadError, parse_workload, resnet

_BUILTIN_NETS = {"resnet18": 18, "resnet50": 50, "resnet152": 152}

# compression factors reported for the reference accelerator's quantized
# networks; printed for comparison only, never asserted against
_REFERENCE_COMPRESSION = {
    ("resnet18", 1): 5.1, ("resnet18", 2): 4.9, ("resnet18", 4): 4.6,
    ("resnet50", 1): 6.0, ("resnet50", 2): 5.6, ("resnet50", 4): 4.9,
    ("resnet152", 1): 12.2, ("resnet152", 2): 9.4, ("resnet152", 4): 6.5,
}


def _load_calibration(path: str | None) -> CalibrationTable:
    path = path or os.environ.get("MPDSE_CALIB")
    if path:
        return CalibrationTable.from_json(Path(path).read_text())
    return default_calibration()


def _load_constraints(path: str | None) -> HardwareConstraints:
    if not path:
        return HardwareConstraints()
    doc = json.loads(Path(path).read_text())
    return HardwareConstraints(**doc)


def _load_net(selector: str, wq: int | None) -> NetworkSpec:
    if selector in _BUILTIN_NETS:
        return resnet(_BUILTIN_NETS[selector], wq if wq is not None else 8)
    net = parse_workload(Path(selector).read_text())
    if wq is not None:
        net = net.with_inner_wq(wq)
    return net


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _parse_styles(text: str | None, ks=(1, 2, 4)) -> list[PEStyle]:
    if not text:
        return taxonomy(ks)
    styles = []
    for label in text.split(","):
        parts = label.strip().upper().split("-")
        if len(parts) != 3:
            raise PEError(f"bad style label {label!r} (expected e.g. bp-st-1d)")
        for k in ks:
            styles.append(PEStyle(parts[0], parts[1], parts[2], k))
    return styles


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_pe_dse(args) -> int:
    calib = _load_calibration(args.calib)
    wqs = tuple(int(x) for x in args.wq.split(","))
    ks = tuple(int(x) for x in args.k.split(","))
    styles = _parse_styles(args.styles, ks)
    ranking = pe_dse(styles, calib, wqs)
    out = _out_dir(args)
    (out / "pe_ranking.csv").write_text(reports.ranking_csv(ranking))
    if args.format == "json":
        print(json.dumps({str(w): r for w, r in ranking["winners"].items()}, indent=2, sort_keys=True))
    else:
        for wq, r in sorted(ranking["winners"].items()):
            print(f"w_q={wq}: best {r['style']} k={r['k']} "
                  f"({r['bits_per_s_per_lut']:.1f} bits/s/LUT)")
    return 0


def cmd_explore(args) -> int:
    calib = _load_calibration(args.calib)
    hwc = _load_constraints(args.constraints)
    net = _load_net(args.net, args.wq)
    out = _out_dir(args)
    if args.dims:
        h, w, d = (int(x) for x in args.dims.split(","))
        dims = ArrayDims(h, w, d)
        style = PEStyle("BP", "ST", "1D", args.k if args.k else 2)
        cfg = PEConfig(style)
        entry = calib.pe_entry(style.label, style.k)
        total, _ = network_cycles(net, dims, cfg.accumulator_width)
        point = DesignPoint(cfg, dims, entry["f_mhz"], dims.n_pe * entry["lut_per_pe"] / 1e3,
                            buffer_plan(net, dims, calib.block_bits).total_blocks, total)
        report = evaluate(point, net, hwc, calib)
    else:
        report, point = full_flow(net, hwc, calib, force_k=args.k, jobs=args.jobs)
    (out / "design.json").write_text(reports.design_json(point, net))
    (out / "mapping.csv").write_text(reports.mapping_csv(report))
    (out / "report.json").write_text(reports.report_json(report, calib))
    if args.format == "json":
        print(reports.report_json(report, calib))
    else:
        print(reports.report_table(report), end="")
    return 0


def cmd_simulate(args) -> int:
    calib = _load_calibration(args.calib)  # validates early; simulation itself needs no calibration
    del calib
    rng = np.random.default_rng(args.seed)
    if args.exhaustive:
        return _simulate_exhaustive(args)
    if args.layer:
        return _simulate_layer(args, rng)
    print("simulate: need --exhaustive or --layer", file=sys.stderr)
    return 2


def _simulate_exhaustive(args) -> int:
    ks = tuple(int(x) for x in args.k.split(",")) if args.k else (1, 2, 4)
    for k in ks:
        if 8 % k:
            raise PEError(f"k={k} must divide N=8 for bit-parallel PEs")
    styles = _parse_styles(args.styles, ks)
    wqs = tuple(int(x) for x in args.wq.split(","))
    n_bits = 8
    checked = 0
    for st in styles:
        for wq in wqs:
            if wq > n_bits:
                continue
            a = np.arange(2 ** n_bits, dtype=np.int64)
            w = np.arange(-(2 ** (wq - 1)), 2 ** (wq - 1), dtype=np.int64)
            aa = np.repeat(a, w.size)
            ww = np.tile(w, a.size)
            got = kernels.mac_batch(aa, ww, wq, st.k, n_bits,
                                    st.scaling == "2D", st.consolidation == "SA")
            exact = aa * ww
            bad = np.nonzero(got != exact)[0]
            checked += aa.size
            if bad.size:
                i = int(bad[0])
                print(f"MISMATCH {st.label} k={st.k} wq={wq}: a={aa[i]} w={ww[i]} "
                      f"got {got[i]} expected {exact[i]}", file=sys.stderr)
                return 1
    print(f"simulate: 0 mismatches over {checked} operand pairs")
    return 0


def _simulate_layer(args, rng) -> int:
    from .pe import pe_dot
    net = _load_net(args.layer, None)
    layer = net.layers[0]
    if args.channelwise and isinstance(layer.wq, int):
        print("simulate: --channelwise needs a layer with precision groups", file=sys.stderr)
        return 2
    k = int(args.k) if args.k else 2
    cfg = PEConfig(PEStyle("BP", "ST", "1D", k))
    acts = rng.integers(0, 2 ** layer.n_bits, size=layer.k * layer.k * layer.iw, dtype=np.int64)
    mism = 0
    for ch, bits in layer.wq_groups:
        pairs = pairs_per_issue(cfg, bits)
        for c in range(min(ch, 4)):  # a few output channels per group suffice
            wgt = rng.integers(-(2 ** (bits - 1)), 2 ** (bits - 1), size=acts.size, dtype=np.int64)
            pad = (-acts.size) % pairs
            al = list(acts) + [0] * pad
            wl = list(wgt) + [0] * pad
            got, _ = pe_dot(cfg, al, wl, bits)
            exact = int(np.dot(acts, wgt))
            if got != exact:
                mism += 1
                print(f"MISMATCH group@{bits}b ch{c}: got {got} expected {exact}", file=sys.stderr)
    if mism:
        return 1
    print("simulate: layer dot products match the integer oracle")
    return 0


def cmd_footprint(args) -> int:
    net = _load_net(args.net, args.wq)
    policy = FootprintPolicy(include_projection_convs=args.include_projections, unit=args.unit)
    q = footprint(net, policy)
    line = f"policy: projections={'in' if policy.include_projection_convs else 'out'}, " \
           f"stem/last-8bit={'in' if policy.include_stem_last_8bit else 'out'}, unit={policy.unit}"
    print(line)
    print(f"footprint({net.name}) = {q:.2f} {policy.unit}")
    if args.baseline == "fp32":
        fp = footprint(net, policy, override_bits=32)
        ratio = compression_factor(footprint_bits(net, policy, 32), footprint_bits(net, policy))
        print(f"baseline fp32 = {fp:.2f} {policy.unit}")
        print(f"compression factor = {ratio:.1f}x")
        ref = _REFERENCE_COMPRESSION.get((args.net, args.wq))
        if ref is not None:
            print(f"reference build reported {ref}x (comparison only)")
    return 0


def cmd_report(args) -> int:
    calib = _load_calibration(args.calib)
    hwc = _load_constraints(args.constraints)
    doc = json.loads(Path(args.design).read_text())
    net = parse_workload(json.dumps(doc["network"]))
    style = PEStyle(*doc["style"].split("-"), k=doc["k"], n_bits=doc["n_bits"])
    report = evaluate_dims(net, ArrayDims(doc["dims"]["h"], doc["dims"]["w"], doc["dims"]["d"]),
                           style, hwc, calib)
    if args.format == "json":
        print(reports.report_json(report, calib))
    else:
        print(reports.report_table(report), end="")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--calib", help="calibration JSON path (fallback: MPDSE_CALIB, then embedded defaults)")
    p.add_argument("--constraints", help="hardware constraints JSON path")
    p.add_argument("--out", default=".", help="output directory for emitted files")
    p.add_argument("--format", choices=("table", "csv", "json"), default="table",
                   help="stdout format")
    p.add_argument("--jobs", type=int, default=1, help="parallel candidate evaluation cap")
    p.add_argument("--seed", type=int, default=0xC0FFEE, help="seed for randomized subcommands")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mpdse",
                                 description="Mixed-precision CNN accelerator design-space explorer")
    ap.add_argument("--version", action="version", version=f"mpdse {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pe-dse", help="rank PE design options by bits/s/LUT")
    p.add_argument("--wq", default="1,2,4", help="comma list of weight word-lengths to rank at")
    p.add_argument("--k", default="1,2,4", help="comma list of operand slices to consider")
    p.add_argument("--styles", help="comma list of style labels (default: whole taxonomy)")
    _add_common(p)
    p.set_defaults(fn=cmd_pe_dse)

    p = sub.add_parser("explore", help="search array dimensions and evaluate the design")
    p.add_argument("--net", required=True, help="resnet18|resnet50|resnet152 or a workload file")
    p.add_argument("--wq", type=int, help="inner-layer weight word-length profile")
    p.add_argument("--k", type=int, help="force the operand slice")
    p.add_argument("--dims", help="skip the search and evaluate fixed H,W,D")
    _add_common(p)
    p.set_defaults(fn=cmd_explore)

    p = sub.add_parser("simulate", help="bit-exact PE simulation against the integer oracle")
    p.add_argument("--exhaustive", action="store_true", help="sweep all operand values")
    p.add_argument("--k", help="operand slice(s), comma list for --exhaustive")
    p.add_argument("--wq", default="1,2,4,8", help="weight word-lengths to sweep")
    p.add_argument("--styles", help="style labels to sweep (default: whole taxonomy)")
    p.add_argument("--layer", help="workload file; simulate its first layer")
    p.add_argument("--channelwise", action="store_true", help="require per-group precision")
    _add_common(p)
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("footprint", help="parameter-memory footprint and compression factor")
    p.add_argument("--net", required=True)
    p.add_argument("--wq", type=int, help="inner-layer weight word-length profile")
    p.add_argument("--baseline", choices=("fp32", "none"), default="fp32")
    p.add_argument("--unit", choices=("bits", "Mbit", "MB"), default="Mbit")
    p.add_argument("--include-projections", action="store_true",
                   help="count projection-shortcut convolutions")
    _add_common(p)
    p.set_defaults(fn=cmd_footprint)

    p = sub.add_parser("report", help="re-render a saved design.json")
    p.add_argument("design", help="path to design.json")
    _add_common(p)
    p.set_defaults(fn=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (InfeasibleError, WorkloadError, PEError, CalibrationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

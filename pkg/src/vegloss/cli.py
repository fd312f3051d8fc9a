"""vegloss command line: depth, process, fit, predict, synth, model.

Exit codes: 0 success, 2 input/parse error, 3 domain error, 4 internal error.
Output is assembled fully before anything is written, so a failing command
leaves no partial output behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import warnings
from pathlib import Path

from . import __version__
from .errors import DegenerateFit, DomainError, InputError, VegLossError
from .fitting import BOUND_METHODS, build_model
from .geometry import load_site, tx_rx_distance, vegetation_depth
from .pipeline import (SAMPLE_HEADER, dump_fit_report, dump_residuals, dump_samples, fit_bands,
                       parse_samples, process_dataset)
from .propagation import (BOUNDS, LinkBudgetInput, dump_model, friis_db, link_budget, load_model,
                          predict_loss)
from .scanfile import read_calibration, read_measurement_dir
from .sounder import DEFAULT_SEARCH_HALFWIDTH, DEFAULT_THRESHOLD_DB, parse_bands
from .synth import directory_digest, load_scenario, write_dataset

log = logging.getLogger("vegloss")

EXIT_OK, EXIT_INPUT, EXIT_DOMAIN, EXIT_INTERNAL = 0, 2, 3, 4


class Output:
    """Collects stdout text and file writes; flushed only on success."""

    def __init__(self):
        self.stdout = io.StringIO()
        self.files: list[tuple[Path, str]] = []

    def write(self, text):
        self.stdout.write(text)

    def file(self, path, text):
        self.files.append((Path(path), text))

    def flush(self):
        for path, text in self.files:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
        sys.stdout.write(self.stdout.getvalue())
        sys.stdout.flush()


def _table(header, rows) -> str:
    cells = [list(map(str, header))] + [[str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(out, fmt, header, rows, json_rows=None):
    if fmt == "json":
        out.write(json.dumps(json_rows if json_rows is not None else [dict(zip(header, r)) for r in rows],
                             indent=2) + "\n")
    elif fmt == "csv":
        out.write(_csv(header, rows))
    else:
        out.write(_table(header, rows))


def _read_text(path) -> tuple[str, str]:
    if str(path) == "-":
        return sys.stdin.read(), "<stdin>"
    try:
        return Path(path).read_text(), str(path)
    except OSError as exc:
        raise InputError(f"{path}: cannot read: {exc.strerror}") from None


# --- subcommands -------------------------------------------------------------------

def cmd_depth(args, out):
    site = load_site(args.site)
    header = ("rx_id", "distance_m", "veg_depth_m")
    raw = [(rid, tx_rx_distance(site, rid), vegetation_depth(site, rid)) for rid in site.rx_ids]
    if args.format == "table":
        rows = [(rid, f"{d:.2f}", f"{v:.2f}") for rid, d, v in raw]
    else:
        rows = [(rid, repr(d), repr(v)) for rid, d, v in raw]
    json_rows = [{"rx_id": rid, "distance_m": d, "veg_depth_m": v} for rid, d, v in raw]
    _emit(out, args.format, header, rows, json_rows)


def _options(args):
    return {"window": args.window, "tau_gate": args.tau_gate_us * 1e-6 if args.tau_gate_us is not None else None,
            "threshold_offset": args.threshold_db, "search_halfwidth": args.search_halfwidth,
            "refine": not args.no_refine}


def cmd_process(args, out):
    site = load_site(args.site)
    cal = read_calibration(args.cal)
    groups = read_measurement_dir(args.meas_dir)
    bands = parse_bands(args.bands)
    rows = process_dataset(site, groups, cal, bands, args.subslices, **_options(args))
    missing = [r for r in rows if not r.ok]
    for r in missing:
        log.warning("%s %s: LoS component not found in any orientation", r.rx_id, r.band)
    table = dump_samples(rows)
    if args.output:
        out.file(args.output, table)
    if args.format == "csv":
        out.write(table)
    else:
        recs = list(csv.reader(io.StringIO(table)))[1:]
        if args.format == "json":
            _emit(out, "json", SAMPLE_HEADER, recs)
        else:
            shown = [r for r in recs if r[2] == ""]
            cols = (0, 1, 3, 4, 7, 8, 9, 10)
            fmt_rows = []
            for r in shown:
                cells = [r[i] for i in cols]
                for j in (4, 5, 6):
                    cells[j] = f"{float(cells[j]):.2f}" if cells[j] else "-"
                fmt_rows.append(cells)
            _emit(out, "table", [SAMPLE_HEADER[i] for i in cols], fmt_rows)


def cmd_fit(args, out):
    text, source = _read_text(args.samples)
    rows = parse_samples(text, source)
    bands = parse_bands(args.bands)
    fits, omitted = fit_bands(rows, bands, args.confidence, args.bounds_method)
    for band, reason in omitted:
        log.warning("omitting %s: %s", band, reason)
    if not fits:
        raise DegenerateFit("no band has a positive-depth sample")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        model = build_model(fits)
    for w in caught:
        log.warning("%s", w.message)
    report = dump_fit_report(fits, omitted)
    if args.output:
        out.file(args.output, dump_model(model))
    if args.residuals:
        out.file(args.residuals, dump_residuals(fits, rows))
    if args.report:
        out.file(args.report, report)
    if args.format == "csv":
        out.write(report)
    elif args.format == "json":
        out.write(json.dumps({
            "bounds_method": args.bounds_method,
            "confidence": args.confidence,
            "bands": [{"f_low_ghz": f.band.f_low / 1e9, "f_high_ghz": f.band.f_high / 1e9,
                       "alpha_min": f.alpha_min, "alpha": f.alpha, "alpha_max": f.alpha_max,
                       "n_samples": f.n} for f in fits],
            "omitted": [{"band": b.label, "reason": r} for b, r in omitted],
        }, indent=2) + "\n")
    else:
        rows_t = [(f"{f.band.label} GHz", f"{f.alpha_min:.2f}", f"{f.alpha:.2f}", f"{f.alpha_max:.2f}", f.n)
                  for f in fits]
        out.write(_table(("Frequency", "alpha_min", "alpha", "alpha_max", "n"), rows_t))
        out.write(f"bounds: {args.bounds_method} ({args.confidence:g})\n")
        for band, reason in omitted:
            out.write(f"omitted {band.label} GHz: {reason}\n")


def cmd_predict(args, out):
    model = load_model(args.model)
    f = args.freq_ghz * 1e9
    inp = LinkBudgetInput(f, args.distance, args.veg_depth, args.tx_power_dbm, args.tx_gain_dbi, args.rx_gain_dbi)
    fs = friis_db(f, inp.d)
    losses = {b: predict_loss(model, f, inp.d_veg, b) for b in BOUNDS}
    received = link_budget(inp, model, args.bound)
    result = {
        "freq_ghz": args.freq_ghz, "distance_m": inp.d, "veg_depth_m": inp.d_veg,
        "tx_power_dbm": inp.tx_power, "tx_gain_dbi": inp.tx_gain, "rx_gain_dbi": inp.rx_gain,
        "friis_db": fs, "veg_loss_low_db": losses["low"], "veg_loss_mid_db": losses["mid"],
        "veg_loss_high_db": losses["high"], "bound": args.bound, "received_dbm": received,
    }
    if args.format == "json":
        out.write(json.dumps(result, indent=2) + "\n")
    elif args.format == "csv":
        out.write(_csv(list(result), [[repr(v) if isinstance(v, float) else v for v in result.values()]]))
    else:
        out.write(f"Friis (unity gain)   {fs:9.2f} dB\n"
                  f"vegetation loss      low {losses['low']:.2f} / mid {losses['mid']:.2f} / "
                  f"high {losses['high']:.2f} dB\n"
                  f"received ({args.bound} bound){received:{13 - len(args.bound)}.2f} dBm\n")


def cmd_synth(args, out):
    scn = load_scenario(args.scenario)
    man = write_dataset(scn, args.out_dir)
    man["digest"] = directory_digest(args.out_dir)
    if args.format == "json":
        out.write(json.dumps(man, indent=2, sort_keys=True) + "\n")
    elif args.format == "csv":
        out.write(_csv(("rx_id", "distance_m", "veg_depth_m"),
                       [(rid, repr(v["distance_m"]), repr(v["veg_depth_m"])) for rid, v in man["rx"].items()]))
    else:
        rows = [(rid, f"{v['distance_m']:.2f}", f"{v['veg_depth_m']:.2f}") for rid, v in man["rx"].items()]
        out.write(_table(("rx_id", "distance_m", "veg_depth_m"), rows))
        truth = [(f"{e['f_low_ghz']:g}-{e['f_high_ghz']:g} GHz", f"{e['alpha']:.2f}") for e in man["truth_model"]]
        out.write(_table(("band", "truth_alpha"), truth))
        out.write(f"seed {man['seed']}  snr {man['snr_db']} dB  orientations {len(man['orientations'])}\n")
        out.write(f"digest {man['digest']}\n")


def cmd_model(args, out):
    model = load_model(args.model)
    text = dump_model(model)
    if args.output:
        out.file(args.output, text)
    if args.format == "json":
        out.write(json.dumps([{"f_low_ghz": e.band.f_low / 1e9, "f_high_ghz": e.band.f_high / 1e9,
                               "alpha_min": e.alpha_min, "alpha": e.alpha, "alpha_max": e.alpha_max}
                              for e in model], indent=2) + "\n")
    elif not args.output:
        out.write(text)


# --- argument parsing ----------------------------------------------------------------

def _add_format(p, default="table"):
    p.add_argument("--format", choices=("table", "csv", "json"), default=default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vegloss", description="Foliage excess-loss toolkit for 6-18 GHz links.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("depth", help="vegetation depth per Rx point of a site file")
    p.add_argument("site", help="site YAML file, or 'usc_mcclintock' for the shipped site")
    _add_format(p)
    p.set_defaults(func=cmd_depth)

    p = sub.add_parser("process", help="scans -> best-aligned LoS power and excess loss per band")
    p.add_argument("meas_dir")
    p.add_argument("cal")
    p.add_argument("site")
    p.add_argument("--bands", default="6:18:1", help="start:stop:width in GHz")
    p.add_argument("--window", choices=("rect", "rectangular", "hann"), default="rect")
    p.add_argument("--threshold-db", type=float, default=DEFAULT_THRESHOLD_DB)
    p.add_argument("--tau-gate-us", type=float, default=None, help="delay gate (default 0.9 of the delay span)")
    p.add_argument("--search-halfwidth", type=int, default=DEFAULT_SEARCH_HALFWIDTH)
    p.add_argument("--no-refine", action="store_true", help="report raw bin power (no sub-bin peak search)")
    p.add_argument("--subslices", type=int, default=0, help="also emit K narrower slices per band")
    p.add_argument("-o", "--output", help="write the sample table (CSV) here")
    _add_format(p)
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("fit", help="origin-constrained slope per band from a sample table")
    p.add_argument("samples", help="sample table from 'process' ('-' for stdin)")
    p.add_argument("--bands", default="6:18:1")
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--bounds-method", choices=BOUND_METHODS, default="ci")
    p.add_argument("-o", "--output", help="write the fitted model CSV here")
    p.add_argument("--report", help="write the fit report CSV here")
    p.add_argument("--residuals", help="write per-sample residuals CSV here")
    _add_format(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="foliage-aware link budget")
    p.add_argument("--model", default="builtin")
    p.add_argument("--freq-ghz", type=float, required=True)
    p.add_argument("--distance", type=float, required=True, help="Tx-Rx distance (m)")
    p.add_argument("--veg-depth", type=float, default=0.0, help="vegetation depth (m)")
    p.add_argument("--tx-power-dbm", type=float, default=0.0)
    p.add_argument("--tx-gain-dbi", type=float, default=0.0)
    p.add_argument("--rx-gain-dbi", type=float, default=0.0)
    p.add_argument("--bound", choices=BOUNDS, default="mid")
    _add_format(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="generate a synthetic measurement dataset from a scenario")
    p.add_argument("scenario")
    p.add_argument("out_dir")
    _add_format(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("model", help="export a model (default: the built-in table) as CSV")
    p.add_argument("--model", default="builtin")
    p.add_argument("-o", "--output")
    _add_format(p, default="csv")
    p.set_defaults(func=cmd_model)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    out = Output()
    try:
        args.func(args, out)
    except InputError as exc:
        print(f"vegloss: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        print(f"vegloss: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (VegLossError, AssertionError) as exc:
        print(f"vegloss: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    out.flush()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

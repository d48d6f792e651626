"""Command-line entry point: ``pacreach <command> [options]``.

Exit codes: 0 success, 1 I/O failure, 2 bad usage or parameters,
3 degenerate data, 4 insufficient calibration data or infeasible sizing.
"""

import argparse
import json
import os
import sys

from . import harness
from .errors import DegenerateDataError, DomainError, InfeasibleError, InsufficientCalibrationError

METHODS = ("holdout", "empirical-conformal", "split-conformal", "scenario-discard")


def _common(p):
    p.add_argument("--config", help="TOML experiment file")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--out-dir", help="directory for output files (default from config, else ./out)")


def build_parser():
    parser = argparse.ArgumentParser(prog="pacreach", description="PAC-certified reachable-set estimates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw terminal-state samples to CSV")
    _common(p)
    p.add_argument("-n", type=int, help="number of samples (default n_train)")
    p.add_argument("-o", "--output", help="CSV path (default <out-dir>/samples.csv)")

    p = sub.add_parser("fit", help="fit a minimum-volume ellipsoid to a sample CSV")
    _common(p)
    p.add_argument("samples")
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("-o", "--output", help="JSON path (default <out-dir>/ellipsoid.json)")

    p = sub.add_parser("certify", help="certify an ellipsoid against a sample CSV")
    _common(p)
    p.add_argument("ellipsoid")
    p.add_argument("samples")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--beta", type=float, default=1e-9)
    p.add_argument("--alpha", "--epsilon", dest="alpha", type=float,
                   help="conformal error rate, or accuracy for scenario-discard")
    p.add_argument("--exact", action="store_true", help="exact discard count instead of the closed form")
    p.add_argument("-o", "--output", help="certificate JSON path (default <out-dir>/certificate.json)")

    p = sub.add_parser("bridge", help="run the certifier equivalence checks")
    _common(p)
    p.add_argument("--beta", type=float, default=1e-9)

    p = sub.add_parser("fig2", help="holdout vs. empirical conformal over repeated test batches")
    _common(p)

    p = sub.add_parser("fig3", help="split conformal vs. scenario discarding on a shared batch")
    _common(p)
    p.add_argument("--mode", choices=sorted(harness.FIG3_SIZES), default="small")
    return parser


def _run(args):
    cfg = harness.load_config(args.config, seed=args.seed, out_dir=args.out_dir)
    out = cfg.out_dir
    cmd = args.command

    if cmd == "sample":
        batch, path = harness.cmd_sample(cfg, args.n, args.output)
        print(f"wrote {len(batch)} samples to {path}")
    elif cmd == "fit":
        path = args.output or os.path.join(out, "ellipsoid.json")
        E = harness.cmd_fit(args.samples, args.tol, path)
        print(E.to_json())
    elif cmd == "certify":
        path = args.output or os.path.join(out, "certificate.json")
        cert, adjusted = harness.cmd_certify(args.ellipsoid, args.samples, args.method, args.beta,
                                             args.alpha, args.exact, path)
        if adjusted is not None:
            harness._write(os.path.join(out, "adjusted.json"), adjusted.to_json())
        print(cert.to_json())
    elif cmd == "bridge":
        reports, joint = harness.cmd_bridge(args.beta, cfg)
        harness._write(os.path.join(out, "bridge.json"), harness.reports_json(reports, joint))
        print(harness.bridge_table(reports, joint))
    elif cmd == "fig2":
        path = os.path.join(out, "fig2.csv")
        rows = harness.run_fig2(cfg, path)
        print(f"wrote {len(rows)} rows to {path}")
    elif cmd == "fig3":
        stem = os.path.join(out, f"fig3_{args.mode}")
        res = harness.run_fig3(cfg, args.mode, stem + ".csv", stem + ".svg")
        for row in res.rows:
            print(json.dumps(dict(zip(("method", "K", "removed_count", "threshold", "volume_before", "volume_after"), row))))
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except DegenerateDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InsufficientCalibrationError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

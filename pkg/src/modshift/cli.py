"""Command line entry point.

    modshift run --config c.json --out trace.csv [--summary s.json] [--repeats N]
    modshift fim-report --scheme mean --d 3 --h 1 --sigma 1
    modshift sweep --config base.json --out-dir results/ [--grid fig2|fig3|both] [--repeats N]
    modshift validate --config c.json

Exit codes: 0 success, 1 runtime failure (or failed validation), 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import rng
from .errors import ConfigurationError, ConstraintViolation, ModShiftError
from .experiment import (
    ExperimentConfig,
    fig2_grid,
    fig3_grid,
    generate_agent_data,
    grid_table,
    mean_traces,
    run_experiment,
    run_grid,
    run_repeats,
    traces_to_csv,
    write_summary,
    write_trace,
    TRACE_HEADER,
)
from .fedcore import Delta, mse_gradient, mse_loss
from .fim import FimContext, build_fim, characteristic_det, closed_form_eigenvalues, fim_report, is_singular
from .shiftdesign import ShiftScheme, make_gamma, shift_matrix_rank_deficiency, validate_gamma

logger = logging.getLogger("modshift")

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def _load_config(path) -> ExperimentConfig:
    return ExperimentConfig.load(path) if path else ExperimentConfig()


def _dump(obj, path=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_run(args) -> int:
    cfg = _load_config(args.config)
    trace_path = args.out or cfg.trace_path
    summary_path = args.summary or cfg.summary_path
    if args.repeats > 1:
        runs = run_repeats(cfg, args.repeats)
        rows = mean_traces([tr for tr, _ in runs])
        summary = {
            "repeats": args.repeats,
            "runs": [{k: v for k, v in s.items() if k not in ("w_bob", "w_eve", "config")} for _, s in runs],
            "config": cfg.to_dict(),
        }
        for key in ("final_loss_bob", "final_loss_eve", "final_shift_vs_bob", "final_shift_vs_wstar"):
            summary["mean_" + key] = float(np.mean([s[key] for _, s in runs]))
        if trace_path:
            lines = [",".join(TRACE_HEADER)]
            lines += [",".join(repr(r[h]) if h != "round" else str(r[h]) for h in TRACE_HEADER) for r in rows]
            Path(trace_path).write_text("\n".join(lines) + "\n")
    else:
        traces, summary = run_experiment(cfg)
        if trace_path:
            write_trace(traces, trace_path)
        else:
            sys.stdout.write(traces_to_csv(traces))
    if summary_path:
        write_summary(summary, summary_path)
    return EXIT_OK


def cmd_fim_report(args) -> int:
    custom = json.loads(args.gamma) if args.gamma else None
    scheme = ShiftScheme(args.scheme, custom)
    if not scheme.active:
        raise ConfigurationError("fim-report needs an active scheme (max, mean, comp or custom)")
    delta = None
    if args.scheme == "max":
        delta = rng.derive_stream(args.seed, rng.PROBE).standard_normal(args.d) if args.seed is not None else None
    _dump(fim_report(scheme, args.d, args.h, args.sigma, delta), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    base = _load_config(args.config)
    out_dir = Path(args.out_dir) if args.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    report = {"config": base.to_dict(), "repeats": args.repeats}
    grids = {"fig2": fig2_grid, "fig3": fig3_grid}
    names = ["fig2", "fig3"] if args.grid == "both" else [args.grid]
    for name in names:
        sub = out_dir / name if out_dir else None
        if sub:
            sub.mkdir(exist_ok=True)
        results = run_grid(grids[name](base), args.repeats, sub)
        report[name] = grid_table(results)
    _dump(report, out_dir / "sweep.json" if out_dir else None)
    return EXIT_OK


def validation_checks(cfg: ExperimentConfig) -> list[dict]:
    """Invariant checks that need no training run."""
    checks = []

    def add(name, ok, **detail):
        checks.append({"check": name, "passed": bool(ok), **detail})

    probe = rng.derive_stream(cfg.master_seed, rng.PROBE)
    scheme = cfg.shift_scheme()
    injection = cfg.injection()
    if scheme.active:
        delta = Delta(probe.standard_normal(cfg.d), agent_id=0)
        gamma = make_gamma(scheme, delta)
        add("gamma_sums_to_minus_one", validate_gamma(gamma), sum=float(gamma.sum()))
        ctx = FimContext(gamma, 1.0, float(np.sqrt(cfg.channel_noise_var)) or 1.0)
        J = build_fim(ctx)
        numeric = np.linalg.eigvalsh(J)
        closed = closed_form_eigenvalues(ctx)
        rel = float(np.max(np.abs(numeric - closed)) / np.max(np.abs(closed)))
        add("fim_singular", is_singular(J), smallest=float(np.min(np.abs(numeric))))
        add("fim_closed_form_spectrum", rel < 1e-9, max_relative_error=rel)
        add("shift_matrix_rank_deficiency_is_one", shift_matrix_rank_deficiency(gamma) == 1)
        add("mdl_characteristic_det_at_zero", abs(characteristic_det(gamma, 0.0)) < 1e-10)
        per_round = cfg.K
    elif injection is not None:
        per_round = cfg.K * cfg.d
    else:
        per_round = 0
    add("secret_channel_projection", True, scalars_per_round=per_round, total=per_round * cfg.rounds)

    data = generate_agent_data(cfg, 0)
    w = probe.standard_normal(cfg.d)
    grad = mse_gradient(w, data)
    fd = np.empty(cfg.d)
    for i in range(cfg.d):
        h = 1e-5 * max(1.0, abs(w[i]))
        e = np.zeros(cfg.d)
        e[i] = h
        fd[i] = (mse_loss(w + e, data) - mse_loss(w - e, data)) / (2 * h)
    rel = float(np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-300))
    add("gradient_finite_difference", rel < 1e-6, relative_error=rel)

    curvature = np.linalg.eigvalsh(2.0 * data.gram / data.size).max()
    add("step_size_stable", cfg.eta * curvature < 2.0, eta_times_max_curvature=float(cfg.eta * curvature))
    return checks


def cmd_validate(args) -> int:
    cfg = _load_config(args.config)
    checks = validation_checks(cfg)
    ok = all(c["passed"] for c in checks)
    _dump({"passed": ok, "checks": checks, "config": cfg.to_dict()}, args.out)
    return EXIT_OK if ok else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="modshift", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one experiment and write its trace")
    p.add_argument("--config")
    p.add_argument("--out", help="trace CSV path (stdout if omitted)")
    p.add_argument("--summary", help="summary JSON path")
    p.add_argument("--repeats", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fim-report", help="eavesdropper FIM spectrum for a shift scheme")
    p.add_argument("--scheme", required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--gamma", help="JSON vector for --scheme custom")
    p.add_argument("--seed", type=int, help="draw a random probe delta for the max scheme")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fim_report)

    p = sub.add_parser("sweep", help="mechanism comparison grids")
    p.add_argument("--config")
    p.add_argument("--out-dir")
    p.add_argument("--grid", choices=("fig2", "fig3", "both"), default="both")
    p.add_argument("--repeats", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="invariant checks without training")
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigurationError, ConstraintViolation) as exc:
        print(f"modshift: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ModShiftError as exc:
        print(f"modshift: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

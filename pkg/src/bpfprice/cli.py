"""Command line entry point: ``bpfprice <subcommand> ...``.

Exit codes: 0 ok, 1 configuration error, 2 numerical failure, 3 invariant
violation.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis, runner
from .config import apply_overrides, parse_config
from .errors import BpfError, ConfigError, InvariantViolationError
from .presets import preset_text
from .transforms import apply_I_minus_S, apply_I_minus_T, neumann_F, neumann_G, transform_report

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_INVARIANT = 0, 1, 2, 3
TRANSFORM_COLUMNS = ("dx", "dt_out", "series_length", "heat_residual_FG", "heat_residual_fSg")


def _config_text(args) -> str:
    if args.preset and args.config:
        raise ConfigError("give either a config file or --preset, not both")
    if args.preset:
        text = preset_text(args.preset)
    elif args.config:
        try:
            text = Path(args.config).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}") from None
    else:
        raise ConfigError("a config file or --preset is required")
    if args.set:
        text = apply_overrides(text, args.set)
    return text


def _load(args):
    return parse_config(_config_text(args))


def _out_dir(args, cfg, default: str) -> Path:
    return Path(args.output or cfg.output_dir or default)


def _values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad value list {text!r}") from None


def _write_table(path: Path, header: list[str], columns, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for line in header:
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_cell(row[c]) for c in columns) + "\n")


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return runner.format_float(v)


def cmd_run(args) -> int:
    cfg = _load(args)
    out = _out_dir(args, cfg, "run_output")
    result = runner.simulate(cfg)
    paths = runner.write_run(result, out)
    last = result.diagnostics[-1]
    print(f"wrote {len(paths)} files to {out}")
    print(f"t={last['t']:g} mass_h={last['mass_h']:.12g} price={last['price_zero_crossing']}")
    return EXIT_OK


def cmd_sweep_eps(args) -> int:
    cfg = _load(args)
    spec = analysis.SweepSpec("eps_sweep", tuple(_values(args.values)), cfg, args.norm,
                              args.resolve_peclet, args.workers)
    table = analysis.run_eps_sweep(spec)
    header = runner.header_lines(cfg, {})
    if table.fit is not None:
        header.append(f"# fit.slope = {runner.format_float(table.fit.slope)}")
        header.append(f"# fit.r_squared = {runner.format_float(table.fit.r_squared)}")
    out = _out_dir(args, cfg, "sweep_eps") / "sweep_eps.csv"
    _write_table(out, header, table.columns, table.rows)
    for r in table.rows:
        print(f"eps={r['epsilon']:g} gap={r['gap_integral']:.6g} bound={r['bound']:.6g} "
              f"distance={r['distance']:.6g}")
    if table.fit is not None:
        print(f"slope={table.fit.slope:.4f} r2={table.fit.r_squared:.4f}")
    return EXIT_OK


def cmd_sweep_ka(args) -> int:
    cfg = _load(args)
    reference = None
    if args.reference:
        try:
            reference = parse_config(Path(args.reference).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read reference {args.reference!r}: {exc}") from None
    if args.a_cells:
        values = [m * cfg.grid.dx for m in _values(args.a_cells)]
    elif args.values:
        values = _values(args.values)
    else:
        raise ConfigError("give --values or --a-cells")
    spec = analysis.SweepSpec("ka_sweep", tuple(values), cfg, args.norm, workers=args.workers,
                              reference=reference)
    table = analysis.run_ka_sweep(spec)
    out = _out_dir(args, cfg, "sweep_ka") / "sweep_ka.csv"
    _write_table(out, runner.header_lines(cfg, {}), table.columns, table.rows)
    for r in table.rows:
        print(f"a={r['a']:g} k={r['k']:g} distance={r['distance']:.6g}")
    return EXIT_OK


def transform_check(cfg, levels: int = 3):
    """Run the bpf config on successively halved (dx, dt_out) and collect reports.

    Returns (rows, identity_error) where identity_error is the largest
    deviation of (I - S) F from f and (I - T) G from g over all states.
    """
    if cfg.model != "bpf":
        raise ConfigError("transform-check needs a bpf config")
    rows = []
    identity = 0.0
    for level in range(levels):
        scale = 2**level
        c = cfg.replace(n_cells=cfg.n_cells * scale, dt_out=cfg.effective_dt_out / scale)
        res = runner.simulate(c)
        params = c.bpf_params()
        m = params.a_nodes(c.grid)
        rep = transform_report(res.states, params)
        for s in res.states:
            identity = max(
                identity,
                float(np.max(np.abs(apply_I_minus_S(neumann_F(s.f, m), m).values - s.f.values))),
                float(np.max(np.abs(apply_I_minus_T(neumann_G(s.g, m), m).values - s.g.values))),
            )
        rows.append({"dx": rep.dx, "dt_out": rep.dt_out, "series_length": rep.series_length,
                     "heat_residual_FG": rep.heat_residual_FG,
                     "heat_residual_fSg": rep.heat_residual_fSg})
    return rows, identity


def cmd_transform_check(args) -> int:
    cfg = _load(args)
    rows, identity = transform_check(cfg, args.levels)
    header = runner.header_lines(cfg, {})
    header.append(f"# identity_max_error = {runner.format_float(identity)}")
    out = _out_dir(args, cfg, "transform_check") / "transform_check.csv"
    _write_table(out, header, TRANSFORM_COLUMNS, rows)
    print(f"identity max error {identity:.3g}")
    for r in rows:
        print(f"dx={r['dx']:g} FG={r['heat_residual_FG']:.6g} fSg={r['heat_residual_fSg']:.6g}")
    if len(rows) >= 2:
        for key in ("heat_residual_FG", "heat_residual_fSg"):
            fit = analysis.fit_loglog([r["dx"] for r in rows], [r[key] for r in rows])
            print(f"{key} order {fit.slope:.3f}")
    return EXIT_OK


def cmd_compare(args) -> int:
    values = runner.compare(args.run_a, args.run_b, args.norm, args.field)
    for t, v in values.items():
        print(f"t={runner.format_time(t)} {args.norm}={runner.format_float(v)}")
    return EXIT_OK


def _add_config_args(p) -> None:
    p.add_argument("config", nargs="?", help="config file (key = value lines)")
    p.add_argument("--preset", help="named preset: figure1 or burgers-limit")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p.add_argument("-o", "--output", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bpfprice", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one simulation")
    _add_config_args(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-eps", help="epsilon sweep of the limit system")
    _add_config_args(p)
    p.add_argument("--values", required=True, help="comma list of epsilon values")
    p.add_argument("--norm", default="L1", choices=analysis.NORMS)
    p.add_argument("--resolve-peclet", action="store_true",
                   help="refine each run until the cell Peclet number is <= 1")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep_eps)

    p = sub.add_parser("sweep-ka", help="bpf runs with k = c/a against the limit system")
    _add_config_args(p)
    p.add_argument("--values", help="comma list of a values")
    p.add_argument("--a-cells", help="comma list of a in units of dx")
    p.add_argument("--reference", help="config of the limit-system reference run")
    p.add_argument("--norm", default="L1", choices=analysis.NORMS)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep_ka)

    p = sub.add_parser("transform-check", help="shift-operator identities on a bpf run")
    _add_config_args(p)
    p.add_argument("--levels", type=int, default=3)
    p.set_defaults(func=cmd_transform_check)

    p = sub.add_parser("compare", help="norm of snapshot differences between two runs")
    p.add_argument("run_a")
    p.add_argument("run_b")
    p.add_argument("--norm", default="L1", choices=analysis.NORMS)
    p.add_argument("--field", default="u", choices=runner.SNAPSHOT_COLUMNS[1:])
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolationError as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except BpfError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

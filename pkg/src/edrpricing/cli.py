"""Command-line front end.

Each subcommand runs one pipeline and writes a CSV or JSON table. Input
paths that do not exist relative to the working directory are looked up
in the data directory: ``$EDR_DATA_DIR`` if set, else the bundled
synthetic fixtures.

Exit codes: 0 success, 2 usage, 3 invalid parameters, 4 input/output
failure, 5 computation failure. Failures also print a JSON record
``{"code", "message", "context"}`` on stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

from . import empirics, equilibrium, frontier, leverage, prospect_utility, returns_core, risk_measures
from .errors import EDRError

logger = logging.getLogger(__name__)

DEFAULT_SEED = 20150101
DATA_DIR_ENV = "EDR_DATA_DIR"
BUNDLED_DATA = Path(__file__).resolve().parent / "data"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARAMS = 3
EXIT_IO = 4
EXIT_COMPUTE = 5


class CLIFailure(Exception):
    def __init__(self, exit_code: int, code: str, message: str, context: Optional[dict] = None):
        super().__init__(message)
        self.exit_code = exit_code
        self.code = code
        self.message = message
        self.context = context or {}


@contextlib.contextmanager
def stage(exit_code: int):
    """Map errors raised inside the block to one exit code."""
    try:
        yield
    except CLIFailure:
        raise
    except EDRError as exc:
        raise CLIFailure(exit_code, exc.code, str(exc), exc.context) from exc
    except OSError as exc:
        raise CLIFailure(EXIT_IO, "io_error", str(exc), {"path": getattr(exc, "filename", None)}) from exc
    except (ValueError, ZeroDivisionError, OverflowError) as exc:
        raise CLIFailure(exit_code, "invalid_value", str(exc)) from exc


def data_dir() -> Path:
    env = os.environ.get(DATA_DIR_ENV)
    return Path(env) if env else BUNDLED_DATA


def resolve(path: str | Path) -> Path:
    p = Path(path)
    if p.is_absolute() or p.exists():
        return p
    return data_dir() / p


def expand_inputs(paths: Sequence[str]) -> list[Path]:
    """Resolve paths; a directory stands for every CSV inside it."""
    out: list[Path] = []
    for raw in paths:
        p = resolve(raw)
        if p.is_dir():
            found = sorted(p.glob("*.csv"))
            if not found:
                raise FileNotFoundError(2, "no CSV files in directory", str(p))
            out.extend(found)
        elif p.exists():
            out.append(p)
        else:
            raise FileNotFoundError(2, "input not found", str(p))
    return out


@dataclass
class RunConfig:
    """Validated settings for one CLI invocation."""

    command: str
    inputs: list[str] = field(default_factory=list)
    seed: int = DEFAULT_SEED
    out: Optional[str] = None
    fmt: str = "csv"
    threads: Optional[int] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise CLIFailure(EXIT_USAGE, "unknown_command", f"unknown command {self.command!r}", {"command": self.command})
        if self.fmt not in ("csv", "json"):
            raise CLIFailure(EXIT_PARAMS, "invalid_format", "format must be csv or json", {"format": self.fmt})
        if not 0 <= self.seed < 2**64:
            raise CLIFailure(EXIT_PARAMS, "invalid_seed", "seed must be a 64-bit unsigned integer", {"seed": self.seed})
        if self.threads is not None and self.threads < 1:
            raise CLIFailure(EXIT_PARAMS, "invalid_threads", "threads must be at least 1", {"threads": self.threads})


# --- output -----------------------------------------------------------------


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_value(v: Any) -> Any:
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if hasattr(v, "item"):
        return _json_value(v.item())
    return v


def render(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        clean = [{k: _json_value(v) for k, v in r.items()} for r in rows]
        return json.dumps(clean, indent=2, allow_nan=False) + "\n"
    columns: list[str] = []
    for r in rows:
        columns.extend(k for k in r if k not in columns)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in columns])
    return buf.getvalue()


# --- pipelines --------------------------------------------------------------


def _load_all(paths: Sequence[str], mode: str = "returns") -> list[returns_core.ReturnSeries]:
    with stage(EXIT_IO):
        return [returns_core.load_returns_csv(p, mode) for p in expand_inputs(paths)]


def run_risk(cfg: RunConfig) -> list[dict]:
    p = cfg.params
    with stage(EXIT_PARAMS):
        if not 0 < p["alpha"] <= 1:
            raise ValueError("alpha must lie in (0, 1]")
    series = _load_all(cfg.inputs or ["sp_daily.csv"], p["mode"])
    market = _load_all([p["market"]], p["mode"])[0] if p["market"] else None
    rows = []
    with stage(EXIT_COMPUTE):
        for s in series:
            rep = risk_measures.risk_report(s, p["alpha"])
            row = rep.as_row()
            row["var_alpha"] = p["alpha"]
            row["gaussian_edr"] = risk_measures.gaussian_edr(rep.expected_return, rep.volatility)
            if market is not None:
                row["beta"], row["downside_beta"] = risk_measures.beta_measures(s, market)
            rows.append(row)
    return rows


def run_aggregate(cfg: RunConfig) -> list[dict]:
    p = cfg.params
    with stage(EXIT_PARAMS):
        spec = returns_core.PeriodSpec(p["granularity"], p["overlap"])
    rows = []
    for s in _load_all(cfg.inputs or ["sp_daily.csv"], p["mode"]):
        with stage(EXIT_COMPUTE):
            agg = returns_core.aggregate_periods(s, spec)
        rows.extend({"label": agg.label, "date": d.isoformat(), "value": float(v)} for d, v in zip(agg.dates, agg.values))
    return rows


def _point_row(kind: str, pt: frontier.FrontierPoint, labels: Sequence[str]) -> dict:
    row = {
        "kind": kind,
        "risk_coord": pt.risk_coord,
        "expected_return": pt.expected_return,
        "portfolio_index": pt.portfolio_index,
    }
    if pt.weights is not None:
        row.update({f"w_{lbl}": float(w) for lbl, w in zip(labels, pt.weights)})
    return row


def run_frontier(cfg: RunConfig) -> list[dict]:
    p = cfg.params
    with stage(EXIT_PARAMS):
        space = frontier.RiskSpace.parse(p["space"])
        if p["n"] < 1:
            raise ValueError("n must be positive")
        if (p["a"] is not None or p["loss"] is not None) and space is not frontier.RiskSpace.EDR:
            raise ValueError("optimal choices need --space edr")
        kt = None
        if p["loss"] is not None:
            kt = prospect_utility.KTUtilityParams(p["a"] if p["a"] is not None else 5.0, p["lam"], -p["loss"])
        elif p["a"] is not None and not p["a"] > 0:
            raise ValueError("a must be positive")
    assets = _load_all(cfg.inputs or ["bond.csv", "balanced.csv", "equity.csv"], p["mode"])
    labels = [a.label for a in assets]
    with stage(EXIT_COMPUTE):
        samples = frontier.sample_portfolios(assets, p["n"], cfg.seed, threads=cfg.threads)
        front = frontier.efficiency_frontier(samples, space)
        rows = [_point_row("frontier", pt, labels) for pt in front]
        if kt is not None:
            choice = frontier.optimal_risk_seeking(front, kt)
            row = _point_row("risk_seeking", choice.point, labels)
            row["boundary"] = choice.boundary
            rows.append(row)
        elif p["a"] is not None:
            rows.append(_point_row("risk_averse", frontier.optimal_risk_averse(front, p["a"]), labels))
    return rows


def run_rnc(cfg: RunConfig) -> list[dict]:
    p = cfg.params
    with stage(EXIT_PARAMS):
        params = prospect_utility.KTUtilityParams(p["a"], p["lam"], -p["loss"])
        if not p["loss"] > 0:
            raise ValueError("loss must be positive")
        if p["points"] < 2:
            raise ValueError("points must be at least 2")
    with stage(EXIT_COMPUTE):
        curve = prospect_utility.trace_risk_neutral_curve(params, p["points"])
        rows = []
        for pt, row in zip(curve.points, curve.rows()):
            try:
                row["slope"] = prospect_utility.rnc_slope(params, curve.prior_loss, curve.y, pt.expected_return, pt.shrink)
            except EDRError:
                row["slope"] = None
            rows.append(row)
    return rows


def run_isoutil(cfg: RunConfig) -> list[dict]:
    p = cfg.params
    rows = []
    with stage(EXIT_PARAMS):
        for e in p["e"]:
            for edr in p["edr"]:
                if edr > e:
                    raise ValueError(f"EDR {edr} exceeds expected return {e}")
        if not p["a"] > 0:
            raise ValueError("a must be positive")
    with stage(EXIT_COMPUTE):
        for e in p["e"]:
            for edr in p["edr"]:
                slope, case = prospect_utility.iso_utility_slope(p["a"], e, edr)
                curv = None if case is prospect_utility.SlopeCase.SINGULAR else prospect_utility.iso_utility_curvature(p["a"], e, edr)
                rows.append(
                    {
                        "a": p["a"],
                        "expected_return": e,
                        "edr": edr,
                        "utility": prospect_utility.utility_score(p["a"], e, edr),
                        "slope": None if math.isnan(slope) else slope,
                        "case": case.value,
                        "curvature": curv,
                    }
                )
    return rows


def run_calibrate(cfg: RunConfig) -> list[dict]:
    p = cfg.params
    with stage(EXIT_PARAMS):
        columns = tuple(p["x"]) if p["x"] else prospect_utility.CALIBRATION_FRACTIONS
        rows_e = tuple(p["e"]) if p["e"] else prospect_utility.CALIBRATION_RETURNS
        for x in columns:
            if not 0 < x < 1:
                raise ValueError(f"survival fraction {x} outside (0, 1)")
    with stage(EXIT_COMPUTE):
        return prospect_utility.risk_aversion_table(rows_e, columns)


def _parse_atoms(text: str) -> returns_core.EmpiricalDistribution:
    pairs = [chunk.split(":") for chunk in text.split(",") if chunk.strip()]
    if not pairs or any(len(pair) != 2 for pair in pairs):
        raise ValueError("atoms must look like 'r1:p1,r2:p2,...'")
    return returns_core.EmpiricalDistribution.from_atoms(
        [float(r) for r, _ in pairs], [float(q) for _, q in pairs], normalize=True
    )


def run_leverage(cfg: RunConfig) -> list[dict]:
    p = cfg.params
    with stage(EXIT_PARAMS):
        spec = leverage.LeverageSpec(p["x_lev"], p["r_c"], p["m"])
        named = [(f"atoms_{i}", _parse_atoms(t)) for i, t in enumerate(p["atoms"] or [])]
    if not named:
        named = [(s.label, returns_core.EmpiricalDistribution.from_series(s)) for s in _load_all(cfg.inputs or ["equity.csv"], p["mode"])]
    rows = []
    with stage(EXIT_COMPUTE):
        for label, dist in named:
            row = {"label": label, "x_lev": spec.x_lev, "r_c": spec.r_c, "m": spec.m}
            row.update(leverage.leveraged_expected_return(dist, spec).as_dict())
            rows.append(row)
        if len(named) == 2:
            rows.append(
                {
                    "label": f"gap_{named[1][0]}_minus_{named[0][0]}",
                    "x_lev": spec.x_lev,
                    "r_c": spec.r_c,
                    "m": spec.m,
                    "e_lev": leverage.dominance_gap(named[0][1], named[1][1], spec),
                }
            )
    return rows


def run_power_frontier(cfg: RunConfig) -> list[dict]:
    p = cfg.params
    with stage(EXIT_PARAMS):
        spec = leverage.PowerFrontierSpec(p["alpha_exp"], p["beta_shift"], p["a"], p["L"], p["gamma"])
    with stage(EXIT_COMPUTE):
        opt = leverage.power_frontier_optimum(spec)
    return [
        {
            "alpha_exp": spec.alpha_exp,
            "beta_shift": spec.beta_shift,
            "a": spec.a,
            "L": spec.L,
            "sigma_opt": opt.sigma_opt,
            "sigma_lev_literal": opt.sigma_lev_literal,
            "sigma_lev_fixedpoint": opt.sigma_lev_fixedpoint,
        }
    ]


def _load_views(path: str) -> list[equilibrium.InvestorView]:
    views = []
    with stage(EXIT_IO):
        with resolve(path).open(newline="", encoding="utf-8") as fh:
            for lineno, row in enumerate(csv.DictReader(fh), start=2):
                try:
                    views.append(equilibrium.InvestorView(float(row["invested_value"]), float(row["required_return"])))
                except (KeyError, TypeError, ValueError) as exc:
                    raise CLIFailure(EXIT_IO, "parse_error", f"line {lineno}: {exc}", {"path": path, "line": lineno}) from None
    return views


def run_asad(cfg: RunConfig) -> list[dict]:
    p = cfg.params
    growth = p["growth"]
    if p["views"]:
        views = _load_views(p["views"])
        with stage(EXIT_COMPUTE):
            growth = equilibrium.aggregate_required_return(views)
    with stage(EXIT_PARAMS):
        spec = equilibrium.AsAdSpec(
            p["supply_slope"], p["supply_intercept"], p["demand_slope"], p["demand_intercept"], growth, p["horizon"], p["steps"]
        )
    with stage(EXIT_COMPUTE):
        path = equilibrium.as_ad_price_path(spec)
    return [{"t": t, "quantity": q, "price": price, "growth_rate": growth} for t, q, price in path]


def run_table1(cfg: RunConfig) -> list[dict]:
    p = cfg.params
    with stage(EXIT_PARAMS):
        grans = [returns_core.Granularity(g) for g in p["granularity"]]
        if returns_core.Granularity.YEARLY in grans:
            raise ValueError("granularity must be weekly or monthly")
    series = _load_all(cfg.inputs or ["sp_daily.csv"], p["mode"])
    rows = []
    with stage(EXIT_COMPUTE):
        for s in series:
            for g in grans:
                for res in empirics.event_study_volatility(s, g, alternative=p["alternative"]):
                    rows.append({"label": s.label, "granularity": g.value, **res.as_row()})
    return rows


def run_vixcurve(cfg: RunConfig) -> list[dict]:
    p = cfg.params
    with stage(EXIT_PARAMS):
        alphas = p["alphas"] or [round(0.01 * i, 2) for i in range(1, 101)]
        if any(not 0 < a <= 1 for a in alphas):
            raise ValueError("alphas must lie in (0, 1]")
    index = _load_all([p["index"]])[0]
    companion = _load_all([p["companion"]])[0]
    with stage(EXIT_COMPUTE):
        if p["levels"]:
            companion = empirics.log_changes(companion)
        points = empirics.quantile_ttest_curve(index, companion, alphas, bucket=p["bucket"], alternative=p["alternative"])
    return [pt.as_row() for pt in points]


def run_crosssection(cfg: RunConfig) -> list[dict]:
    p = cfg.params
    with stage(EXIT_PARAMS):
        measures = p["measures"] or list(empirics.MEASURES)
        bad = [m for m in measures if m not in empirics.MEASURES]
        if bad:
            raise ValueError(f"unknown measures {bad}")
    assets = _load_all(cfg.inputs or ["cross_section"], p["mode"])
    market = _load_all([p["market"]], p["mode"])[0] if p["market"] else None
    rows = []
    with stage(EXIT_COMPUTE):
        for m in measures:
            rows.append(empirics.cross_section_regression(assets, market, m).as_row())
    return rows


@dataclass(frozen=True)
class Command:
    name: str
    run: Callable[[RunConfig], list[dict]]
    help: str
    # library operations this pipeline exercises; checked by the test suite
    operations: tuple[str, ...]


COMMANDS: dict[str, Command] = {
    c.name: c
    for c in (
        Command(
            "risk",
            run_risk,
            "risk report per series",
            (
                "returns_core.load_returns_csv",
                "returns_core.empirical_quantile",
                "risk_measures.value_at_risk",
                "risk_measures.conditional_value_at_risk",
                "risk_measures.expected_downside_risk",
                "risk_measures.prospect",
                "risk_measures.gaussian_edr",
                "risk_measures.risk_report",
                "risk_measures.beta_measures",
            ),
        ),
        Command("aggregate", run_aggregate, "compound returns over calendar windows", ("returns_core.aggregate_periods",)),
        Command(
            "frontier",
            run_frontier,
            "Monte Carlo efficiency frontier and optimal choices",
            (
                "frontier.sample_portfolios",
                "frontier.efficiency_frontier",
                "frontier.optimal_risk_averse",
                "frontier.optimal_risk_seeking",
            ),
        ),
        Command(
            "rnc",
            run_rnc,
            "risk-neutral curve after a prior loss",
            (
                "prospect_utility.kt_value",
                "prospect_utility.risk_neutral_amplitude",
                "prospect_utility.trace_risk_neutral_curve",
                "prospect_utility.rnc_slope",
            ),
        ),
        Command(
            "isoutil",
            run_isoutil,
            "iso-utility slope, curvature and utility",
            (
                "prospect_utility.iso_utility_slope",
                "prospect_utility.iso_utility_curvature",
                "prospect_utility.utility_score",
            ),
        ),
        Command("calibrate", run_calibrate, "risk-aversion calibration table", ("prospect_utility.calibrate_risk_aversion",)),
        Command(
            "leverage",
            run_leverage,
            "expected return under margin-call truncation",
            ("leverage.leveraged_expected_return", "leverage.dominance_gap"),
        ),
        Command("power-frontier", run_power_frontier, "optimum on a power-law frontier", ("leverage.power_frontier_optimum",)),
        Command(
            "asad",
            run_asad,
            "AS-AD equilibrium price path",
            ("equilibrium.aggregate_required_return", "equilibrium.as_ad_price_path"),
        ),
        Command(
            "empirics-table1",
            run_table1,
            "volatility change after price falls and jumps",
            ("empirics.event_study_volatility", "empirics.student_t_test"),
        ),
        Command("empirics-vixcurve", run_vixcurve, "tail-quantile t-test curve", ("empirics.quantile_ttest_curve",)),
        Command(
            "empirics-crosssection",
            run_crosssection,
            "cross-sectional regressions on risk measures",
            ("empirics.cross_section_regression", "empirics.ols_fit"),
        ),
    )
}


# --- argument parsing -------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CLIFailure(EXIT_USAGE, "usage_error", message, {"prog": self.prog})


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: all cores)")
    common.add_argument("-v", "--verbose", action="store_true")

    data = _Parser(add_help=False)
    data.add_argument("--input", nargs="+", default=[], help="CSV files or directories")
    data.add_argument("--mode", choices=("returns", "prices"), default="returns")

    parser = _Parser(prog="edrpricing", description="Downside-risk pricing toolkit.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    with_data = {"risk", "aggregate", "frontier", "leverage", "empirics-table1", "empirics-crosssection"}
    cmds = {
        name: sub.add_parser(name, parents=[common, data] if name in with_data else [common], help=c.help)
        for name, c in COMMANDS.items()
    }

    c = cmds["risk"]
    c.add_argument("--alpha", type=float, default=0.05, help="VaR/CVaR level")
    c.add_argument("--market", help="market series for beta columns")

    c = cmds["aggregate"]
    c.add_argument("--granularity", choices=[g.value for g in returns_core.Granularity], default="monthly")
    c.add_argument("--overlap", action="store_true", help="rolling 12-month windows (yearly only)")

    c = cmds["frontier"]
    c.add_argument("--n", type=int, default=10_000)
    c.add_argument("--space", choices=("sigma", "edr"), default="edr")
    c.add_argument("--a", type=float, default=None, help="CARA coefficient for the risk-averse choice")
    c.add_argument("--loss", type=float, default=None, help="prior loss for the risk-seeking choice")
    c.add_argument("--lam", type=float, default=prospect_utility.DEFAULT_LOSS_AVERSION)

    c = cmds["rnc"]
    c.add_argument("--a", type=float, default=5.0)
    c.add_argument("--loss", type=float, default=0.05)
    c.add_argument("--lam", type=float, default=prospect_utility.DEFAULT_LOSS_AVERSION)
    c.add_argument("--points", type=int, default=101)

    c = cmds["isoutil"]
    c.add_argument("--a", type=float, default=5.0)
    c.add_argument("--e", type=_floats, default=[0.05, 0.1, 0.2])
    c.add_argument("--edr", type=_floats, default=[-0.2, -0.1, 0.0])

    c = cmds["calibrate"]
    c.add_argument("--x", type=_floats, default=None, help="survival fractions (default: table columns)")
    c.add_argument("--e", type=_floats, default=None, help="expected returns (default: 1%%..20%%)")

    c = cmds["leverage"]
    c.add_argument("--atoms", action="append", help="discrete distribution 'r:p,...' (write --atoms=-0.6:0.1,... when it starts negative); repeat for a second one")
    c.add_argument("--x-lev", type=float, default=1.0)
    c.add_argument("--r-c", type=float, default=0.0)
    c.add_argument("--m", type=float, default=0.5)

    c = cmds["power-frontier"]
    c.add_argument("--alpha-exp", type=float, default=0.5)
    c.add_argument("--beta-shift", type=float, default=0.1)
    c.add_argument("--a", type=float, default=4.0)
    c.add_argument("--L", type=float, default=2.0)
    c.add_argument("--gamma", type=float, default=0.0)

    c = cmds["asad"]
    c.add_argument("--views", help="CSV of invested_value,required_return")
    c.add_argument("--growth", type=float, default=0.2)
    c.add_argument("--supply-slope", type=float, default=2.0)
    c.add_argument("--supply-intercept", type=float, default=0.0)
    c.add_argument("--demand-slope", type=float, default=-2.0)
    c.add_argument("--demand-intercept", type=float, default=5.0)
    c.add_argument("--horizon", type=float, default=1.0)
    c.add_argument("--steps", type=int, default=11)

    c = cmds["empirics-table1"]
    c.add_argument("--granularity", nargs="+", choices=("weekly", "monthly"), default=["weekly", "monthly"])
    c.add_argument("--alternative", choices=("two-sided", "greater", "less"), default="two-sided")

    c = cmds["empirics-vixcurve"]
    c.add_argument("--index", default="index_daily.csv")
    c.add_argument("--companion", default="companion_levels.csv")
    c.add_argument("--levels", action=argparse.BooleanOptionalAction, default=True, help="companion file holds levels")
    c.add_argument("--alphas", type=_floats, default=None)
    c.add_argument("--bucket", action="store_true", help="per-bucket instead of cumulative tails")
    c.add_argument("--alternative", choices=("two-sided", "greater", "less"), default="two-sided")

    c = cmds["empirics-crosssection"]
    c.add_argument("--market", default="market_monthly.csv")
    c.add_argument("--measures", nargs="+", default=None)
    return parser


_GLOBAL_KEYS = {"command", "input", "seed", "out", "fmt", "threads", "verbose"}


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    params = {k: v for k, v in vars(ns).items() if k not in _GLOBAL_KEYS}
    return RunConfig(
        command=ns.command,
        inputs=list(getattr(ns, "input", []) or []),
        seed=ns.seed,
        out=ns.out,
        fmt=ns.fmt,
        threads=ns.threads,
        params=params,
    )


def dispatch(cfg: RunConfig) -> int:
    """Run one pipeline and write its table."""
    rows = COMMANDS[cfg.command].run(cfg)
    text = render(rows, cfg.fmt)
    if cfg.out:
        with stage(EXIT_IO):
            Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _emit_error(fail: CLIFailure) -> None:
    record = {"code": fail.code, "message": fail.message, "context": {k: _json_value(v) for k, v in fail.context.items()}}
    sys.stderr.write(json.dumps(record, default=str) + "\n")


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, stream=sys.stderr)
        return dispatch(config_from_args(ns))
    except CLIFailure as fail:
        _emit_error(fail)
        return fail.exit_code
    except EDRError as exc:
        _emit_error(CLIFailure(EXIT_COMPUTE, exc.code, str(exc), exc.context))
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())

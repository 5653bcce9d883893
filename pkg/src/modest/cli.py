"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 numerical or domain failure. Results
go to stdout (or ``--out``) as CSV, or JSON with ``--json``; a one-line run
manifest is always written to stderr.
"""

import argparse
import hashlib
import json
import math
import sys

import numpy as np

from . import __version__
from .detection import (
    ORTHOGONAL,
    SIMPLEX,
    PowerProfile,
    SignalSetSpec,
    exact_mary_error,
    variable_power_bound,
    zero_rate_lower_bound,
    zero_rate_upper_bound,
)
from .errors import ModestError
from .exponents import (
    BandSpec,
    ChannelSpec,
    FadingSpec,
    awgn_reliability,
    critical_dimension,
    critical_rate,
    fading_reliability,
    fading_zero_rate_value,
    moment_bound_exponent,
    outage_probability,
    sphere_packing_exponent,
    strong_converse,
)
from .jscc import ExponentCurve, joint_exponent, rate_grid, separation_exponent
from .simulator import (
    DEFAULT_M_CAP,
    ExperimentConfig,
    run_excess_error,
    run_fading,
    run_multidim,
)

TAIL_COLUMNS = ["k", "n", "p_hat", "ci_lo", "ci_hi"]
SWEEP_COLUMNS = ["param", "value"]


class UsageError(Exception):
    pass


class SchemaError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def emit_csv(rows, schema):
    """Header plus one line per row, floats at 17 significant digits, LF endings."""
    lines = [",".join(schema)]
    for row in rows:
        if list(row) != list(schema):
            raise SchemaError(f"row columns {list(row)} do not match schema {schema}")
        lines.append(",".join(_fmt(row[c]) for c in schema))
    return "\n".join(lines) + "\n"


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else _fmt(v)
    return v


def emit_json(rows, schema, manifest):
    for row in rows:
        if list(row) != list(schema):
            raise SchemaError(f"row columns {list(row)} do not match schema {schema}")
    payload = {"rows": [{k: _json_value(v) for k, v in r.items()} for r in rows], "manifest": manifest}
    return json.dumps(payload, sort_keys=True) + "\n"


# --- argument plumbing ---------------------------------------------------------------


def _floats(text):
    try:
        return [float(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _add_output(p):
    p.add_argument("--out", help="write results to this file instead of stdout")
    p.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    p.add_argument("--config", help="flat key=value file; command-line flags override it")


def _add_channel(p, time=False):
    p.add_argument("--capacity", type=float, help="capacity C = S/N0 in nats/s")
    p.add_argument("--power", type=float, help="signal power S (used with --n0)")
    p.add_argument("--n0", type=float, help="noise density N0 (used with --power)")
    if time:
        p.add_argument("--time", type=float, help="observation time T in seconds")


def _channel(args):
    if args.capacity is not None:
        if args.power is not None:
            raise UsageError("give either --capacity or --power/--n0, not both")
        return ChannelSpec.from_capacity(args.capacity), "capacity"
    if args.power is not None:
        return ChannelSpec(args.power, 1.0 if args.n0 is None else args.n0), "power/n0"
    raise UsageError("a channel is required: --capacity C or --power S [--n0 N0]")


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"missing required option --{name.replace('_', '-')}")


def build_parser():
    parser = _Parser(prog="modest", description="Excess-error exponents and modulation-estimation simulation.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    leaves = {}

    exp = sub.add_parser("exponent", help="closed-form exponents")
    exp_sub = exp.add_subparsers(dest="op", parser_class=_Parser)
    for name, extra in [
        ("awgn", ["rate"]), ("fading", ["gain", "rate"]), ("sp", ["bandwidth", "rate", "rho_max"]),
        ("rc", ["bandwidth"]), ("moment", ["alpha"]), ("dc", ["rate"]), ("outage", ["sigma", "rate"]),
        ("craig", ["sigma"]),
    ]:
        p = exp_sub.add_parser(name)
        _add_channel(p, time=(name == "craig"))
        for opt in extra:
            p.add_argument("--" + opt.replace("_", "-"), type=float, dest=opt)
        _add_output(p)
        leaves[("exponent", name)] = p

    det = sub.add_parser("detect", help="M-ary detection")
    det_sub = det.add_subparsers(dest="op", parser_class=_Parser)
    p = det_sub.add_parser("exact")
    _add_channel(p, time=True)
    p.add_argument("--m", type=float, help="number of signals")
    p.add_argument("--energy-ratio", type=float, help="E/N0 (default C*T)")
    p.add_argument("--geometry", choices=[ORTHOGONAL, SIMPLEX], default=ORTHOGONAL)
    _add_output(p)
    leaves[("detect", "exact")] = p
    p = det_sub.add_parser("bounds")
    _add_channel(p, time=True)
    p.add_argument("--delta", type=float)
    p.add_argument("--energy-ratio", type=float)
    _add_output(p)
    leaves[("detect", "bounds")] = p
    p = det_sub.add_parser("varpower")
    p.add_argument("--levels", type=_floats, help="comma-separated power levels")
    p.add_argument("--shares", type=_floats, help="comma-separated shares of the interval")
    p.add_argument("--profile-file", help="one power sample per line")
    p.add_argument("--power-cap", type=float)
    p.add_argument("--bin-width", type=float)
    p.add_argument("--rate", type=float)
    p.add_argument("--time", type=float)
    p.add_argument("--slack", type=float)
    p.add_argument("--n0", type=float, default=1.0)
    _add_output(p)
    leaves[("detect", "varpower")] = p

    sim = sub.add_parser("simulate", help="Monte Carlo of the grid scheme")
    sim_sub = sim.add_subparsers(dest="op", parser_class=_Parser)
    for name in ("scalar", "multidim", "fading"):
        p = sim_sub.add_parser(name)
        _add_channel(p, time=True)
        p.add_argument("--rate", type=float, help="rate per dimension")
        if name == "multidim":
            p.add_argument("--rates", type=_floats, help="comma-separated per-dimension rates")
            p.add_argument("--dims", type=int, help="dimension count when --rate is shared")
        if name == "fading":
            p.add_argument("--sigma", type=float, default=1.0, help="Rayleigh scale")
        p.add_argument("--trials", type=int, default=10000)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--fixed-delta", type=float, help="fixed threshold mode (rate ignored)")
        p.add_argument("--simplex", action="store_true", help="boost energy by M/(M-1)")
        p.add_argument("--ci-level", type=float, default=0.95)
        p.add_argument("--m-cap", type=int, default=DEFAULT_M_CAP)
        _add_output(p)
        leaves[("simulate", name)] = p

    p = sub.add_parser("sweep", help="tabulate an exponent or detection quantity over a range")
    p.add_argument("target", choices=sorted(SWEEP_TARGETS))
    _add_channel(p, time=True)
    p.add_argument("--rmin", "--pmin", dest="pmin", type=float, help="start of the swept range")
    p.add_argument("--rmax", "--pmax", dest="pmax", type=float, help="end of the swept range")
    p.add_argument("--steps", type=int, default=101)
    for opt in ("rate", "gain", "bandwidth", "alpha", "sigma", "m", "delta", "energy_ratio"):
        p.add_argument("--" + opt.replace("_", "-"), type=float, dest=opt)
    p.add_argument("--geometry", choices=[ORTHOGONAL, SIMPLEX], default=ORTHOGONAL)
    _add_output(p)
    leaves[("sweep",)] = p

    p = sub.add_parser("jscc", help="joint vs separation excess-distortion exponents")
    p.add_argument("--source", help="source-exponent curve file (rate value)")
    p.add_argument("--knee", type=float, help="step source: zero up to this rate, infinite after")
    p.add_argument("--channel", help="channel-exponent curve file (rate value)")
    _add_channel(p)
    p.add_argument("--grid-min", type=float)
    p.add_argument("--grid-max", type=float)
    p.add_argument("--points", type=int, default=10001)
    _add_output(p)
    leaves[("jscc",)] = p
    return parser, leaves


# --- command bodies ----------------------------------------------------------------
# Each returns (rows, schema, bare) where ``bare`` prints a lone value without header.


def _cmd_exponent(args):
    op = args.op
    if op in ("awgn", "fading", "sp", "rc", "moment", "dc", "outage", "craig"):
        channel, _ = _channel(args)
    if op == "awgn":
        _need(args, "rate")
        if strong_converse(channel, args.rate):
            print("note: rate exceeds capacity (strong-converse region)", file=sys.stderr)
        return [{"value": awgn_reliability(channel, args.rate)}], ["value"], True
    if op == "fading":
        _need(args, "gain", "rate")
        return [{"value": fading_reliability(args.gain, channel, args.rate)}], ["value"], True
    if op == "sp":
        _need(args, "bandwidth", "rate")
        rho_max = 64.0 if args.rho_max is None else args.rho_max
        value, rho = sphere_packing_exponent(BandSpec(args.bandwidth, channel), args.rate, rho_max)
        return [{"value": value, "rho": rho}], ["value", "rho"], False
    if op == "rc":
        _need(args, "bandwidth")
        return [{"value": critical_rate(BandSpec(args.bandwidth, channel))}], ["value"], True
    if op == "moment":
        _need(args, "alpha")
        r, v = moment_bound_exponent(channel, args.alpha)
        return [{"rate": r, "value": v}], ["rate", "value"], False
    if op == "dc":
        _need(args, "rate")
        return [{"value": critical_dimension(channel, args.rate)}], ["value"], True
    if op == "outage":
        _need(args, "sigma", "rate")
        return [{"value": outage_probability(FadingSpec(args.sigma, channel), args.rate)}], ["value"], True
    if op == "craig":
        _need(args, "sigma", "time")
        c = fading_zero_rate_value(FadingSpec(args.sigma, channel), args.time)
        return [{"value": c.value, "lower": c.lower, "upper": c.upper}], ["value", "lower", "upper"], False
    raise UsageError("exponent needs one of: awgn fading sp rc moment dc outage craig")


def _energy_ratio(args):
    if args.energy_ratio is not None:
        return args.energy_ratio
    if args.time is None:
        raise UsageError("give --energy-ratio, or a channel with --time")
    channel, _ = _channel(args)
    return channel.capacity * args.time


def _read_profile(path):
    with open(path) as fh:
        return [float(tok) for line in fh for tok in line.split("#", 1)[0].replace(",", " ").split()]


def _cmd_detect(args):
    op = args.op
    if op == "exact":
        _need(args, "m")
        spec = SignalSetSpec(args.m, _energy_ratio(args), args.geometry)
        return [{"value": exact_mary_error(spec)}], ["value"], True
    if op == "bounds":
        _need(args, "delta")
        er = _energy_ratio(args)
        row = {"lower": zero_rate_lower_bound(args.delta, er), "upper": zero_rate_upper_bound(args.delta, er)}
        return [row], ["lower", "upper"], False
    if op == "varpower":
        _need(args, "rate", "time")
        if args.profile_file:
            samples = _read_profile(args.profile_file)
            cap = float(np.mean(samples)) if args.power_cap is None else args.power_cap
            profile = PowerProfile(tuple(samples), cap, args.bin_width)
        elif args.levels:
            shares = args.shares or [1.0] * len(args.levels)
            if len(shares) != len(args.levels):
                raise UsageError("--shares must match --levels in length")
            profile = PowerProfile.levels(args.levels, shares, power_cap=args.power_cap, bin_width=args.bin_width)
        else:
            raise UsageError("give --levels or --profile-file")
        b = variable_power_bound(profile, args.rate, args.time, args.slack, args.n0)
        schema = ["mixture", "convexified", "threshold", "convex_regime", "ordered"]
        return [{k: getattr(b, k) for k in schema}], schema, False
    raise UsageError("detect needs one of: exact bounds varpower")


def _sim_config(args):
    channel, _ = _channel(args)
    _need(args, "time")
    if args.op == "multidim":
        if args.rates:
            rates = tuple(args.rates)
        elif args.rate is not None and args.dims:
            rates = (args.rate,) * args.dims
        elif args.fixed_delta is not None:
            rates = ()
        else:
            raise UsageError("multidim needs --rates, or --rate with --dims")
    else:
        if args.rate is None and args.fixed_delta is None:
            raise UsageError("missing required option --rate (or --fixed-delta)")
        rates = (args.rate,) if args.rate is not None else ()
    fading = FadingSpec(args.sigma, channel) if args.op == "fading" else None
    return ExperimentConfig(
        channel=channel, duration=args.time, rates=rates, trials=args.trials, seed=args.seed,
        fading=fading, fixed_delta=args.fixed_delta, simplex=args.simplex, m_cap=args.m_cap,
        ci_level=args.ci_level)


def _cmd_simulate(args):
    if args.op not in ("scalar", "multidim", "fading"):
        raise UsageError("simulate needs one of: scalar multidim fading")
    if args.trials < 1 or args.workers < 1:
        raise UsageError("--trials and --workers must be positive")
    cfg = _sim_config(args)
    runner = {"scalar": run_excess_error, "multidim": run_multidim, "fading": run_fading}[args.op]
    est = runner(cfg, workers=args.workers)
    return [{c: getattr(est, c) for c in TAIL_COLUMNS}], TAIL_COLUMNS, False


def _sweep_fn(args):
    t = args.target
    if t == "detect-exact":
        _need(args, "m")
        return lambda x: exact_mary_error(SignalSetSpec(args.m, x, args.geometry))
    if t == "detect-lower":
        _need(args, "delta")
        return lambda x: zero_rate_lower_bound(args.delta, x)
    if t == "detect-upper":
        _need(args, "delta")
        return lambda x: zero_rate_upper_bound(args.delta, x)
    channel, _ = _channel(args)
    if t == "exponent-awgn":
        return lambda x: awgn_reliability(channel, x)
    if t == "exponent-fading":
        _need(args, "gain")
        return lambda x: fading_reliability(args.gain, channel, x)
    if t == "exponent-sp":
        _need(args, "bandwidth")
        return lambda x: sphere_packing_exponent(BandSpec(args.bandwidth, channel), x)[0]
    if t == "exponent-rc":
        return lambda x: critical_rate(BandSpec(x, channel))
    if t == "exponent-moment":
        return lambda x: moment_bound_exponent(channel, x)[1]
    if t == "exponent-dc":
        return lambda x: critical_dimension(channel, x)
    if t == "exponent-outage":
        _need(args, "sigma")
        return lambda x: outage_probability(FadingSpec(args.sigma, channel), x)
    if t == "exponent-craig":
        _need(args, "sigma")
        return lambda x: fading_zero_rate_value(FadingSpec(args.sigma, channel), x).value
    raise UsageError(f"unknown sweep target {t}")


# target -> name of the swept parameter
SWEEP_TARGETS = {
    "exponent-awgn": "rate", "exponent-fading": "rate", "exponent-sp": "rate",
    "exponent-rc": "bandwidth", "exponent-moment": "alpha", "exponent-dc": "rate",
    "exponent-outage": "rate", "exponent-craig": "time", "detect-exact": "energy_ratio",
    "detect-lower": "energy_ratio", "detect-upper": "energy_ratio",
}


def _cmd_sweep(args):
    _need(args, "pmin", "pmax")
    if args.steps < 1:
        raise UsageError("--steps must be at least 1")
    fn = _sweep_fn(args)
    xs = np.linspace(args.pmin, args.pmax, args.steps)
    return [{"param": float(x), "value": fn(float(x))} for x in xs], SWEEP_COLUMNS, False


def _cmd_jscc(args):
    if args.source:
        f_curve = ExponentCurve.read(args.source)
    elif args.knee is not None:
        f_curve = None
    else:
        raise UsageError("give --source FILE or --knee RATE")
    if args.channel:
        e_curve = ExponentCurve.read(args.channel)
        c = None
    else:
        channel, _ = _channel(args)
        c = channel.capacity
        e_curve = None
    lo = args.grid_min
    hi = args.grid_max
    if lo is None:
        lo = 0.0 if f_curve is None and e_curve is None else max(
            (cv.domain[0] for cv in (f_curve, e_curve) if cv is not None))
    if hi is None:
        hi = 2.0 * c if f_curve is None and e_curve is None else min(
            (cv.domain[1] for cv in (f_curve, e_curve) if cv is not None))
    knots = [k for k in (args.knee, None if c is None else c / 4, c) if k is not None]
    grid = rate_grid(lo, hi, args.points, knots)
    if f_curve is None:
        f_curve = ExponentCurve.step(args.knee, hi)
    if e_curve is None:
        e_curve = ExponentCurve.awgn(c, grid)
    row = {"joint": joint_exponent(f_curve, e_curve, grid), "separation": separation_exponent(f_curve, e_curve, grid)}
    return [row], ["joint", "separation"], False


COMMANDS = {"exponent": _cmd_exponent, "detect": _cmd_detect, "simulate": _cmd_simulate,
            "sweep": _cmd_sweep, "jscc": _cmd_jscc}


# --- config files and dispatch -----------------------------------------------------


def read_config(path):
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}")
    with fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("_", "-")] = value
    return out


def _config_tokens(leaf, config):
    tokens = []
    for key, value in config.items():
        opt = "--" + key
        action = leaf._option_string_actions.get(opt)
        if action is None or key == "config":
            raise UsageError(f"unknown config key {key!r}")
        if action.nargs == 0:
            if value.lower() in ("1", "true", "yes", "on"):
                tokens.append(opt)
            elif value.lower() not in ("0", "false", "no", "off"):
                raise UsageError(f"config key {key!r} expects true/false")
        else:
            tokens += [opt, value]
    return tokens


def _with_config(argv, leaves):
    """Insert config-file options right after the subcommand path so flags win."""
    if "--config" not in argv and not any(a.startswith("--config=") for a in argv):
        return argv
    if not argv:
        return argv
    if argv[0] == "jscc":
        path_len, key = 1, ("jscc",)
    elif argv[0] == "sweep":
        path_len, key = 2, ("sweep",)
    else:
        path_len, key = 2, tuple(argv[:2])
    leaf = leaves.get(key)
    if leaf is None:
        return argv
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv[path_len:])
    tokens = _config_tokens(leaf, read_config(known.config))
    return argv[:path_len] + tokens + argv[path_len:]


def _manifest(args, output, command):
    # worker count never changes a result, so it stays out of the manifest
    params = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "json", "config", "workers")}
    inputs = None
    if "capacity" in params:
        inputs = "capacity" if params.get("capacity") is not None else (
            "power/n0" if params.get("power") is not None else None)
    return {
        "command": command,
        "params": {k: _json_value(v) if not isinstance(v, list) else v for k, v in params.items()},
        "channel_input": inputs,
        "seed": params.get("seed"),
        "version": __version__,
        "checksum": "sha256:" + hashlib.sha256(output.encode()).hexdigest(),
    }


def dispatch(argv=None):
    """Run one command; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, leaves = build_parser()
    try:
        argv = _with_config(argv, leaves)
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage())
        if args.command in ("exponent", "detect", "simulate") and args.op is None:
            raise UsageError(f"{args.command} needs a subcommand\n{parser.format_usage()}")
        rows, schema, bare = COMMANDS[args.command](args)
        command = " ".join(x for x in (args.command, getattr(args, "op", None) or getattr(args, "target", None)) if x)
        if args.json:
            body = emit_csv(rows, schema)  # schema check
            manifest = _manifest(args, body, command)
            text = emit_json(rows, schema, manifest)
        elif bare:
            emit_csv(rows, schema)
            text = _fmt(rows[0][schema[0]]) + "\n"
            manifest = _manifest(args, text, command)
        else:
            text = emit_csv(rows, schema)
            manifest = _manifest(args, text, command)
        if args.out:
            with open(args.out, "w", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        print("manifest " + json.dumps(manifest, sort_keys=True), file=sys.stderr)
        return 0
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ModestError, SchemaError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(dispatch())

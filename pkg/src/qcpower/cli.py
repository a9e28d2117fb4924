"""Command-line runner: ``qcpower <subcommand> [options]``.

Every subcommand takes ``--seed``, ``--format {json,csv}``, ``--tolerance``
and ``--config FILE``. Config files hold ``key = value`` lines whose keys are
flag names (dashes or underscores); flags given on the command line win.

Exit codes: 0 success, 1 verification failure, 2 usage or parse error.
"""

from __future__ import annotations

import csv
import io
import json
import sys
from pathlib import Path

import click
import numpy as np
from click.core import ParameterSource

from . import channels as ch
from . import commutators as cm
from . import qcp as q
from .discord import DiscordConfig, discord
from .linalg import matrix_to_json
from .states import (
    DensityMatrix,
    InvalidStateError,
    load_state,
    phi_family,
    psi_family,
    psi_flag_state,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(click.UsageError):
    pass


def parse_config(path) -> dict:
    """Read ``key = value`` lines; ``#`` starts a comment. Keys are normalised to underscores."""
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{n}: empty key")
        out[key.replace("-", "_")] = value
    return out


def _merge_config(ctx: click.Context, params: dict) -> dict:
    """Fill parameters not given on the command line from ``--config``."""
    path = params.pop("config", None)
    if not path:
        return params
    conf = parse_config(path)
    by_name = {p.name: p for p in ctx.command.params}
    for opt in ctx.command.params:
        for flag in getattr(opt, "opts", []):
            if flag.startswith("--"):
                by_name.setdefault(flag[2:].replace("-", "_"), opt)
    for key, value in conf.items():
        if key not in by_name or key == "config":
            raise ConfigError(f"{path}: unknown key {key!r}")
        opt = by_name[key]
        if ctx.get_parameter_source(opt.name) == ParameterSource.COMMANDLINE:
            continue
        try:
            params[opt.name] = opt.type_cast_value(ctx, value)
        except click.BadParameter as exc:
            raise ConfigError(f"{path}: malformed value for {key!r}: {exc.message}") from exc
    return params


def _require(p: dict, *names: str) -> None:
    missing = [n for n in names if p.get(n) in (None, "")]
    if missing:
        raise click.UsageError("missing option(s): " + ", ".join("--" + n.replace("_", "-") for n in missing))


def common_options(f):
    f = click.option("--config", "config", type=click.Path(exists=True, dir_okay=False), default=None,
                     help="key = value file with defaults for these flags (flags win).")(f)
    f = click.option("--tolerance", type=float, default=None, help="Numerical tolerance; meaning is per subcommand.")(f)
    f = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True,
                     help="Output format; CSV carries scalar fields only.")(f)
    f = click.option("--seed", type=int, default=0, show_default=True, help="Seed for every random choice.")(f)
    return f


# --- output -------------------------------------------------------------------------------


def _flatten(obj, prefix=""):
    """Scalar leaves of nested dicts as dotted keys; lists and matrices are skipped."""
    out = {}
    for k, v in obj.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            continue
        else:
            out[key] = v
    return out


def emit(report: dict, fmt: str) -> None:
    if fmt == "json":
        click.echo(json.dumps(report, indent=2))
        return
    flat = _flatten(report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(flat))
    w.writerow(["" if v is None else v for v in flat.values()])
    click.echo(buf.getvalue(), nl=False)


def _channel(spec: str) -> ch.KrausChannel:
    return ch.parse_channel_spec(spec)


# --- state presets -------------------------------------------------------------------------

PRESETS = {
    "bell": lambda: psi_family(0, 0),
    "psi00": lambda: psi_family(0, 0),
    "psi01": lambda: psi_family(0, 1),
    "psi10": lambda: psi_family(1, 0),
    "psi11": lambda: psi_family(1, 1),
    "phi0": lambda: phi_family(0),
    "phi1": lambda: phi_family(1),
    "phi2": lambda: phi_family(2),
    "phi3": lambda: phi_family(3),
    "psi-flag": lambda: DensityMatrix(psi_flag_state().mat, (4, 4)),
    "genuine": q.genuine_input_state,
}


def _state(path: str | None, preset: str | None) -> DensityMatrix:
    if (path is None) == (preset is None):
        raise click.UsageError("give exactly one of --state or --preset")
    return PRESETS[preset]() if preset else load_state(path)


def _measured(text: str) -> int | tuple:
    try:
        idx = tuple(int(s) for s in text.split(","))
    except ValueError as exc:
        raise click.BadParameter(f"expected comma-separated subsystem indices, got {text!r}") from exc
    return idx[0] if len(idx) == 1 else idx


# --- commands ------------------------------------------------------------------------------


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def cli():
    """Quantum-correlating power of local channels: discord, QCP and theorem checks."""


@cli.command("discord")
@click.option("--state", "state_path", type=click.Path(exists=True, dir_okay=False), help="State JSON file.")
@click.option("--preset", type=click.Choice(sorted(PRESETS)), help="Built-in state instead of a file.")
@click.option("--measured", default="0", show_default=True, help="Measured subsystem(s), e.g. 0 or 0,1.")
@click.option("--restarts", type=int, default=8, show_default=True, help="Random restarts for sides larger than a qubit.")
@common_options
@click.pass_context
def discord_cmd(ctx, **params):
    """Projective discord of a state. --tolerance sets the simplex xatol."""
    p = _merge_config(ctx, params)
    rho = _state(p["state_path"], p["preset"])
    cfg = DiscordConfig(restarts=p["restarts"], seed=p["seed"], xatol=p["tolerance"] or 1e-7)
    measured = _measured(p["measured"])
    res = discord(rho, measured=measured, config=cfg)
    report = {"command": "discord", "dims": list(rho.dims), "measured": measured, "seed": p["seed"], **res.to_dict()}
    report["measurement"] = matrix_to_json(res.basis)
    emit(report, p["fmt"])


@cli.command("qcp")
@click.option("--channel", "spec", default=None, help="Channel spec, e.g. mp:std2.")
@click.option("--restarts", type=int, default=3, show_default=True, help="Outer search restarts.")
@click.option("--n-terms", type=int, default=None, help="CQ ensemble size (default: input dimension).")
@click.option("--flags", type=click.Choice(["orthogonal", "pure"]), default="orthogonal", show_default=True)
@common_options
@click.pass_context
def qcp_cmd(ctx, **params):
    """Estimate the QCP of a channel. --tolerance sets the final discord xatol."""
    p = _merge_config(ctx, params)
    _require(p, "spec")
    c = _channel(p["spec"])
    cfg = q.QcpConfig(n_terms=p["n_terms"], restarts=p["restarts"], seed=p["seed"], flags=p["flags"],
                      xatol=p["tolerance"] or 1e-7)
    est = q.qcp_estimate(c, cfg)
    emit({"command": "qcp", "channel": p["spec"], "seed": p["seed"], **est.to_dict()}, p["fmt"])


@cli.command("superactivation")
@click.option("--channel1", default=None)
@click.option("--channel2", default=None)
@click.option("--strategy", type=click.Choice(list(q.STRATEGIES)), default="auto", show_default=True)
@click.option("--trials", type=int, default=1000, show_default=True, help="Constrained sampler pairs.")
@common_options
@click.pass_context
def superactivation_cmd(ctx, **params):
    """Search a commuting pair whose outputs stop commuting. --tolerance is the commutator threshold."""
    p = _merge_config(ctx, params)
    _require(p, "channel1", "channel2")
    c1, c2 = _channel(p["channel1"]), _channel(p["channel2"])
    w = q.superactivation_witness(c1, c2, p["strategy"], trials=p["trials"], seed=p["seed"],
                                  threshold=p["tolerance"] or cm.NONZERO_TOL)
    report = {"command": "superactivation", "channel1": p["channel1"], "channel2": p["channel2"],
              "strategy": p["strategy"], "seed": p["seed"], "found": w is not None}
    if w is not None:
        report.update(w.to_dict())
        report["x1"] = matrix_to_json(w.x1.mat)
        report["x2"] = matrix_to_json(w.x2.mat)
    emit(report, p["fmt"])


@cli.command("verify")
@click.option("--theorem", default=None, type=click.Choice(["1", "2", "3", "4", "pd", "genuine"]),
              help="1-4, or the phase-damping / genuine-correlation examples.")
@click.option("--channel1", default=None)
@click.option("--channel2", default=None)
@click.option("--trials", type=int, default=1000, show_default=True)
@click.option("--param", type=float, default=0.5, show_default=True, help="p for 'pd', a for 'genuine'.")
@click.option("--restarts", type=int, default=3, show_default=True, help="QCP outer restarts (theorems 3, 4).")
@click.option("--timing", is_flag=True, help="Include wall-clock runtime (breaks byte-identical output).")
@common_options
@click.pass_context
def verify_cmd(ctx, **params):
    """Run one theorem check; exit 1 when it fails. --tolerance overrides the pass tolerance."""
    p = _merge_config(ctx, params)
    _require(p, "theorem")
    th, seed, tol = p["theorem"], p["seed"], p["tolerance"]
    if th in ("1", "2", "3", "4") and not (p["channel1"] and p["channel2"]):
        raise click.UsageError(f"theorem {th} needs --channel1 and --channel2")
    if th == "1":
        rep = q.verify_theorem1(_channel(p["channel1"]), _channel(p["channel2"]), p["trials"], seed,
                                tol or cm.NONZERO_TOL)
    elif th == "2":
        rep = q.verify_theorem2(_channel(p["channel1"]), _channel(p["channel2"]), p["trials"], seed,
                                tol or cm.NONZERO_TOL)
    elif th in ("3", "4"):
        cfg = q.TheoremConfig(seed=seed, qcp=q.QcpConfig(restarts=p["restarts"]), tolerance=tol)
        fn = q.verify_theorem3 if th == "3" else q.verify_theorem4
        rep = fn(_channel(p["channel1"]), _channel(p["channel2"]), cfg)
    elif th == "pd":
        rep = q.phase_damping_demo(p["param"], seed=seed)
    else:
        rep = q.genuine_correlation_demo(p["param"], seed=seed)
    emit(rep.to_dict(timing=p["timing"]), p["fmt"])
    ctx.exit(EXIT_OK if rep.passed else EXIT_FAIL)


@cli.command("commutator")
@click.option("--case", type=click.Choice(["bell", "case1", "case2", "case3"]), default=None,
              help="Built-in witness pair.")
@click.option("--state1", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--state2", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--channel1", default=None, help="Optional channel on the first qubit before decomposing.")
@click.option("--channel2", default=None, help="Optional channel on the second qubit.")
@common_options
@click.pass_context
def commutator_cmd(ctx, **params):
    """Bloch decomposition (alpha, beta, Gamma) of [x1, x2]. --tolerance is the zero threshold."""
    p = _merge_config(ctx, params)
    if p["case"]:
        x1, x2 = cm.theorem2_witness(p["case"])
    elif p["state1"] and p["state2"]:
        x1, x2 = load_state(p["state1"]), load_state(p["state2"])
    else:
        raise click.UsageError("give --case or both --state1 and --state2")
    tol = p["tolerance"] or cm.ZERO_TOL
    inputs_ok = cm.commuting_constraint_check(x1, x2, tol)
    if p["channel1"] or p["channel2"]:
        c1 = _channel(p["channel1"] or "id:2")
        c2 = _channel(p["channel2"] or "id:2")
        ops = ch.local_kraus(c1, c2)
        x1 = DensityMatrix(ch.apply_kraus(ops, x1.mat), (2, 2))
        x2 = DensityMatrix(ch.apply_kraus(ops, x2.mat), (2, 2))
    bc = cm.bloch_commutator(x1, x2)
    report = {
        "command": "commutator",
        "case": p["case"],
        "prefactor": {"re": 0.0, "im": float(np.imag(cm.BLOCH_COMMUTATOR_PREFACTOR))},
        "alpha": [float(v) for v in bc.alpha],
        "beta": [float(v) for v in bc.beta],
        "gamma": np.asarray(bc.gamma, dtype=float).tolist(),
        "norm": float(bc.norm()),
        "commutes": bool(bc.max_abs() <= tol),
        "input_pair_constrained": bool(inputs_ok),
        "seed": p["seed"],
    }
    emit(report, p["fmt"])


@cli.command("spec")
@click.argument("text")
@common_options
@click.pass_context
def spec_cmd(ctx, **params):
    """Parse a channel spec and describe it. --tolerance is the CPTP check tolerance."""
    p = _merge_config(ctx, params)
    c = _channel(p["text"])
    rep = ch.validate(c, p["tolerance"] or ch.CPTP_TOL)
    cp, _ = ch.is_commutativity_preserving(c, seed=p["seed"])
    report = {
        "command": "spec",
        "spec": p["text"],
        "label": c.label,
        "d_in": c.d_in,
        "d_out": c.d_out,
        "n_kraus": len(c.kraus_ops),
        "cptp_deviation": float(rep.deviation),
        "valid": bool(rep.ok),
        "unital": ch.is_unital(c),
        "unitary": ch.is_unitary_channel(c),
        "completely_decohering": ch.is_completely_decohering(c, seed=p["seed"]),
        "commutativity_preserving": bool(cp),
        "seed": p["seed"],
    }
    if c.d_in == 2 and c.d_out == 2:
        try:
            report["transfer"] = list(ch.transfer_coefficients(c).a)
        except ch.ChannelError:
            report["transfer"] = None
    report["kraus"] = [matrix_to_json(k) for k in c.kraus_ops]
    emit(report, p["fmt"])


def run(argv=None) -> int:
    """Run the CLI on ``argv`` and return the exit code."""
    try:
        rv = cli.main(args=argv, prog_name="qcpower", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except ch.ChannelSpecError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    except (ValueError, InvalidStateError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    return rv if isinstance(rv, int) else EXIT_OK


def main() -> None:
    sys.exit(run())

"""Command-line front end: sweeps, figure-data presets, simulator runs.

Output is CSV on stdout or a file: one comment line recording the package
version, seed, and sample count, then a header row, then data rows.  SNR is
taken in dB on the command line and converted to linear internally.  A
plain key=value file can pre-load any subcommand's flags; explicit flags
win over file values.  Exit codes: 0 success, 2 invalid arguments,
3 infeasible constraint set.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from typing import Callable, Optional, TextIO

import numpy as np

from . import __version__
from .arq_practical import (
    CrcConfig,
    DelayConstraint,
    FeedbackSpec,
    crc_joint_optimize,
    delay_constrained_optimize,
    feedback_error_prob,
    joint_optimize_noisy_fb,
    min_feedback_symbols,
    noisy_fb_goodput,
)
from .channel_stats import ChannelSpec, kappa, mi_stats
from .exceptions import InfeasibleError
from .goodput_opt import eps_star_gaussian, optimize_eps
from .harq import (
    HarqSpec,
    harq_expected_rounds,
    harq_first_round_outage,
    harq_goodput,
    harq_outage,
    optimize_initial_rate,
)
from .mc_sim import SimConfig, simulate_harq, simulate_simple_arq
from .outage import (
    ExactL1,
    FiniteBlocklength,
    GaussianFading,
    MonteCarlo,
    OutageModel,
    eps_for_rate,
    outage_finite_n,
    outage_mc,
    rate_for_eps,
)

__all__ = ["ExperimentConfig", "run_command", "main"]

CLI_SAMPLES = 100_000
CLI_SEED = 12345

# handler result: header, rows, seed text, samples text ("-" if not used)
_Result = tuple[list[str], list[list], str, str]


def _lin(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


# ---------------------------------------------------------------------------
# key=value experiment configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    """A resolved run: subcommand name plus flag values as key=value text.

    Values stay strings; the owning subcommand's argparse types convert
    them, so a file round-trips byte-for-byte through to_lines/from_lines.
    """

    command: str
    options: tuple[tuple[str, str], ...]

    def to_lines(self) -> list[str]:
        lines = [f"command={self.command}"] if self.command else []
        lines.extend(f"{key}={value}" for key, value in self.options)
        return lines

    @classmethod
    def from_lines(cls, lines) -> "ExperimentConfig":
        command = ""
        options: list[tuple[str, str]] = []
        for raw in lines:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"config line is not key=value: {line!r}")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if key == "command":
                command = value
            else:
                options.append((key, value))
        return cls(command=command, options=tuple(options))

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_lines(fh)


def _coerce(action: argparse.Action, value: str):
    if isinstance(action, argparse._StoreTrueAction):
        lowered = value.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"config key {action.dest!r} expects a boolean, got {value!r}")
    if action.choices is not None and value not in action.choices:
        raise ValueError(
            f"config key {action.dest!r} must be one of {sorted(action.choices)!r}"
        )
    return action.type(value) if action.type is not None else value


def _apply_config(sub: argparse.ArgumentParser, cfg: ExperimentConfig, command: str) -> None:
    if cfg.command and cfg.command != command:
        raise ValueError(
            f"config file is for command {cfg.command!r}, not {command!r}"
        )
    dests = {
        a.dest: a
        for a in sub._actions
        if a.dest not in ("help", "handler", "command", "config")
    }
    for key, value in cfg.options:
        if key not in dests:
            raise ValueError(f"unknown config key {key!r} for command {command!r}")
        sub.set_defaults(**{key: _coerce(dests[key], value)})


# ---------------------------------------------------------------------------
# shared flag groups
# ---------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser, *, stochastic: bool) -> None:
    sub.add_argument("--out", default="-", help="output path, - for stdout")
    sub.add_argument("--config", default=None, help="key=value file of flag defaults")
    if stochastic:
        sub.add_argument("--samples", type=int, default=CLI_SAMPLES,
                         help="Monte Carlo draws per sample set")
        sub.add_argument("--seed", type=int, default=CLI_SEED,
                         help="random seed for all stochastic backends")


def _add_channel(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--snr-db", type=float, required=True,
                     help="average SNR in dB")
    sub.add_argument("--l", type=int, default=1,
                     help="diversity branches per codeword")


def _add_model(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--model", choices=("exact", "gaussian", "mc", "finite"),
                     default="mc", help="outage backend")
    sub.add_argument("--n", type=int, default=200,
                     help="codeword length in symbols (finite backend, overheads)")


def _build_model(args) -> OutageModel:
    if args.model == "exact":
        return ExactL1()
    if args.model == "gaussian":
        return GaussianFading()
    if args.model == "mc":
        return MonteCarlo(samples=args.samples, seed=args.seed)
    return FiniteBlocklength(n=args.n, samples=args.samples, seed=args.seed)


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_stats(args) -> _Result:
    spec = ChannelSpec(snr=_lin(args.snr_db), diversity_l=args.l)
    st = mi_stats(spec.snr)
    row = [args.snr_db, args.l, st.mu_bits, st.sigma_bits, kappa(st, args.l)]
    return ["snr_db", "l", "mu_bits", "sigma_bits", "kappa"], [row], "-", "-"


def _cmd_outage(args) -> _Result:
    spec = ChannelSpec(snr=_lin(args.snr_db), diversity_l=args.l)
    model = _build_model(args)
    if args.rate is not None:
        rate = args.rate
        if isinstance(model, MonteCarlo):
            eps, se = outage_mc(spec, rate, model.samples, model.seed)
        elif isinstance(model, FiniteBlocklength):
            eps, se = outage_finite_n(spec, rate, model.n, model.samples, model.seed)
        else:
            eps, se = eps_for_rate(spec, rate, model), float("nan")
    else:
        eps, se = args.eps, float("nan")
        rate = rate_for_eps(spec, eps, model)
    header = ["snr_db", "l", "model", "rate_bits", "eps", "stderr"]
    return header, [[args.snr_db, args.l, args.model, rate, eps, se]], \
        str(args.seed), str(args.samples)


def _cmd_optimize(args) -> _Result:
    spec = ChannelSpec(snr=_lin(args.snr_db), diversity_l=args.l)
    rep = optimize_eps(spec, _build_model(args))
    header = ["snr_db", "l", "model", "eps_star", "rate_star", "goodput_star",
              "iterations", "unimodal_ok"]
    row = [args.snr_db, args.l, args.model, rep.eps_star, rep.rate_star,
           rep.goodput_star, rep.iterations, rep.unimodal_ok]
    return header, [row], str(args.seed), str(args.samples)


def _cmd_crc(args) -> _Result:
    spec = ChannelSpec(snr=_lin(args.snr_db), diversity_l=args.l)
    design = crc_joint_optimize(
        spec, CrcConfig(n=args.n, p=args.p), _build_model(args)
    )
    header = ["snr_db", "l", "model", "n", "p", "eps_star", "k_star", "goodput"]
    row = [args.snr_db, args.l, args.model, args.n, args.p,
           design.eps_star, design.k_star, design.goodput]
    return header, [row], str(args.seed), str(args.samples)


def _cmd_delay(args) -> _Result:
    spec = ChannelSpec(snr=_lin(args.snr_db), diversity_l=args.l)
    rep = delay_constrained_optimize(
        spec, DelayConstraint(d=args.d, q=args.q), _build_model(args)
    )
    header = ["snr_db", "l", "model", "d", "q", "eps", "rate_bits", "goodput"]
    row = [args.snr_db, args.l, args.model, args.d, args.q,
           rep.eps_star, rep.rate_star, rep.goodput_star]
    return header, [row], str(args.seed), str(args.samples)


def _cmd_feedback(args) -> _Result:
    if args.f is not None:
        f = args.f
    else:
        f = min_feedback_symbols(_lin(args.snr_db), args.l_fb, args.target)
    eps_fb = feedback_error_prob(FeedbackSpec(f=f, l_fb=args.l_fb, snr=_lin(args.snr_db)))
    header = ["snr_db", "l_fb", "f", "eps_fb"]
    return header, [[args.snr_db, args.l_fb, f, eps_fb]], "-", "-"


def _cmd_harq(args) -> _Result:
    spec = ChannelSpec(snr=_lin(args.snr_db), diversity_l=args.l)
    if args.optimize:
        rep = optimize_initial_rate(
            spec, args.m_max, samples=args.samples, seed=args.seed
        )
        header = ["snr_db", "l", "m_max", "r_init_star", "goodput_star",
                  "bound_rate", "bound_ok", "iterations", "unimodal_ok"]
        row = [args.snr_db, args.l, args.m_max, rep.r_init_star, rep.goodput_star,
               rep.bound_rate, rep.bound_ok, rep.iterations, rep.unimodal_ok]
        return header, [row], str(args.seed), str(args.samples)
    hs = HarqSpec(m_max=args.m_max, r_init=args.r_init)
    eps, eps_se = harq_outage(spec, hs, samples=args.samples, seed=args.seed)
    rounds, rounds_se = harq_expected_rounds(spec, hs, samples=args.samples, seed=args.seed)
    eta, eta_se = harq_goodput(spec, hs, samples=args.samples, seed=args.seed)
    first = harq_first_round_outage(spec, hs, MonteCarlo(args.samples, args.seed))
    header = ["snr_db", "l", "m_max", "r_init", "outage", "outage_stderr",
              "first_round_outage", "mean_rounds", "mean_rounds_stderr",
              "goodput", "goodput_stderr"]
    row = [args.snr_db, args.l, args.m_max, args.r_init, eps, eps_se, first,
           rounds, rounds_se, eta, eta_se]
    return header, [row], str(args.seed), str(args.samples)


def _cmd_simulate(args) -> _Result:
    fb = None
    if args.f is not None:
        fb_snr = _lin(args.fb_snr_db if args.fb_snr_db is not None else args.snr_db)
        fb = FeedbackSpec(f=args.f, l_fb=args.l_fb, snr=fb_snr)
    cfg = SimConfig(
        channel=ChannelSpec(snr=_lin(args.snr_db), diversity_l=args.l),
        rate_bits=args.rate,
        dc=DelayConstraint(d=args.d, q=args.q) if args.harq_m is None else None,
        fb=fb,
        harq=HarqSpec(m_max=args.harq_m, r_init=args.rate) if args.harq_m else None,
        packets=args.packets,
        seed=args.seed,
        n=args.n,
        forward_eps=args.forward_eps,
    )
    res = simulate_harq(cfg) if cfg.harq is not None else simulate_simple_arq(cfg)
    header = ["packets_offered", "packets_delivered", "packets_lost", "total_rounds",
              "goodput_estimate", "goodput_stderr", "loss_rate", "loss_rate_stderr",
              "mean_rounds", "mean_rounds_stderr"]
    row = [res.packets_offered, res.packets_delivered, res.packets_lost,
           res.total_rounds, res.goodput_estimate, res.goodput_stderr,
           res.loss_rate, res.loss_rate_stderr, res.mean_rounds,
           res.mean_rounds_stderr]
    return header, [row], str(args.seed), str(args.packets)


# ---------------------------------------------------------------------------
# figure-data presets
# ---------------------------------------------------------------------------

def _fig2(samples: int, seed: int) -> tuple[list[str], list[list]]:
    """Optimal outage target vs SNR, empirical backend next to the Gaussian one."""
    rows = []
    for l in (2, 5, 10):
        for snr_db in range(0, 21, 2):
            spec = ChannelSpec(snr=_lin(snr_db), diversity_l=l)
            mc = optimize_eps(spec, MonteCarlo(samples=samples, seed=seed))
            gauss = eps_star_gaussian(kappa(mi_stats(spec.snr), l))
            rows.append([snr_db, l, mc.eps_star, gauss])
    return ["snr_db", "L", "eps_star_exactish", "eps_star_gaussian"], rows


def _fig3(samples: int, seed: int) -> tuple[list[str], list[list]]:
    """Success probability and goodput against the attempted rate at 10 dB."""
    rows = []
    model = MonteCarlo(samples=samples, seed=seed)
    for l in (2, 5, 10):
        spec = ChannelSpec(snr=_lin(10.0), diversity_l=l)
        for k in range(1, 25):
            rate = 0.25 * k
            eps = eps_for_rate(spec, rate, model)
            rows.append([10.0, l, rate, 1.0 - eps, rate * (1.0 - eps)])
    return ["snr_db", "l", "rate_bits", "success_prob", "goodput"], rows


def _fig4(samples: int, seed: int) -> tuple[list[str], list[list]]:
    """Goodput of fixed outage targets vs the optimized target, across SNR."""
    rows = []
    model = MonteCarlo(samples=samples, seed=seed)
    for l in (2, 10):
        for snr_db in range(0, 21, 2):
            spec = ChannelSpec(snr=_lin(snr_db), diversity_l=l)
            for eps in (0.1, 0.01, 0.001):
                rate = rate_for_eps(spec, eps, model)
                rows.append([snr_db, l, str(eps), eps, rate, rate * (1.0 - eps)])
            rep = optimize_eps(spec, model)
            rows.append([snr_db, l, "optimal", rep.eps_star, rep.rate_star,
                         rep.goodput_star])
    return ["snr_db", "l", "policy", "eps", "rate_bits", "goodput"], rows


def _fig5(samples: int, seed: int) -> tuple[list[str], list[list]]:
    """Finite-blocklength success probability vs rate at L = 10."""
    rows = []
    for snr_db in (0.0, 10.0):
        spec = ChannelSpec(snr=_lin(snr_db), diversity_l=10)
        for n in (50, 200, None):
            model: OutageModel
            if n is None:
                model = MonteCarlo(samples=samples, seed=seed)
            else:
                model = FiniteBlocklength(n=n, samples=samples, seed=seed)
            for k in range(1, 51):
                rate = 0.1 * k
                eps = eps_for_rate(spec, rate, model)
                rows.append([snr_db, 10, "inf" if n is None else n, rate, 1.0 - eps])
    return ["snr_db", "l", "n", "rate_bits", "success_prob"], rows


def _fig6(samples: int, seed: int) -> tuple[list[str], list[list]]:
    """Optimal outage target vs SNR at several blocklengths."""
    rows = []
    for l in (2, 5, 10):
        for n in (200, 500, None):
            model: OutageModel
            if n is None:
                model = MonteCarlo(samples=samples, seed=seed)
            else:
                model = FiniteBlocklength(n=n, samples=samples, seed=seed)
            for snr_db in range(0, 21, 4):
                spec = ChannelSpec(snr=_lin(snr_db), diversity_l=l)
                rep = optimize_eps(spec, model)
                rows.append([snr_db, l, "inf" if n is None else n, rep.eps_star])
    return ["snr_db", "l", "n", "eps_star"], rows


def _fig8(samples: int, seed: int) -> tuple[list[str], list[list]]:
    """Joint forward/feedback design points under a 3-round 1e-6 loss budget."""
    rows = []
    dc = DelayConstraint(d=3, q=1e-6)
    for snr_db in (5.0, 10.0):
        spec = ChannelSpec(snr=_lin(snr_db), diversity_l=3)
        model = MonteCarlo(samples=samples, seed=seed)
        for l_fb in (1, 2, 5):
            design = joint_optimize_noisy_fb(spec, l_fb, dc, 200, model)
            rows.append([snr_db, 3, l_fb, 200, dc.d, dc.q, design.f, design.eps,
                         design.eps_fb, design.xi_d, design.expected_rounds,
                         design.goodput])
    header = ["snr_db", "l", "l_fb", "n", "d", "q", "f_star", "eps_star",
              "eps_fb", "xi_d", "expected_rounds", "goodput"]
    return header, rows


def _fig9(samples: int, seed: int) -> tuple[list[str], list[list]]:
    """Goodput against the outage target for a spread of acknowledgement lengths."""
    rows = []
    spec = ChannelSpec(snr=_lin(5.0), diversity_l=3)
    model = MonteCarlo(samples=samples, seed=seed)
    dc = DelayConstraint(d=3, q=1e-6)
    for l_fb in (1, 2):
        for f in (5, 10, 20, 40, 80):
            fb = FeedbackSpec(f=f, l_fb=l_fb, snr=spec.snr)
            for eps in np.geomspace(1e-4, 0.5, 25):
                eta = noisy_fb_goodput(spec, float(eps), fb, dc, 200, model)
                rows.append([5.0, 3, l_fb, 200, dc.d, f, float(eps), eta])
    return ["snr_db", "l", "l_fb", "n", "d", "f", "eps", "goodput"], rows


def _fig10(samples: int, seed: int) -> tuple[list[str], list[list]]:
    """Goodput vs initial rate: plain ARQ (m_max = 1) next to two-round accumulation."""
    rows = []
    for snr_db in (5.0, 10.0):
        spec = ChannelSpec(snr=_lin(snr_db), diversity_l=2)
        for m_max in (1, 2):
            for k in range(1, 33):
                r_init = 0.25 * k
                hs = HarqSpec(m_max=m_max, r_init=r_init)
                eta, se = harq_goodput(spec, hs, samples=samples, seed=seed)
                rows.append([snr_db, 2, m_max, r_init, eta, se])
    return ["snr_db", "l", "m_max", "r_init", "goodput", "goodput_stderr"], rows


_FIGURES: dict[str, Callable[[int, int], tuple[list[str], list[list]]]] = {
    "fig2": _fig2,
    "fig3": _fig3,
    "fig4": _fig4,
    "fig5": _fig5,
    "fig6": _fig6,
    "fig8": _fig8,
    "fig9": _fig9,
    "fig10": _fig10,
}


def _cmd_figure(args) -> _Result:
    header, rows = _FIGURES[args.fig](args.samples, args.seed)
    return header, rows, str(args.seed), str(args.samples)


# ---------------------------------------------------------------------------
# parser assembly and entry points
# ---------------------------------------------------------------------------

def _build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        prog="arqopt",
        description="Outage-target optimization and ARQ goodput analysis "
                    "for block-fading links.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    subs: dict[str, argparse.ArgumentParser] = {}

    def sub(name: str, helptext: str, handler, *, stochastic: bool = True):
        p = subparsers.add_parser(name, help=helptext)
        p.set_defaults(handler=handler)
        subs[name] = p
        return p, stochastic

    p, st = sub("stats", "per-codeword mutual-information moments", _cmd_stats,
                stochastic=False)
    _add_channel(p)
    _add_common(p, stochastic=st)

    p, st = sub("outage", "outage probability or supported rate", _cmd_outage)
    _add_channel(p)
    _add_model(p)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--rate", type=float, help="rate in bits/symbol")
    group.add_argument("--eps", type=float, help="outage target to invert")
    _add_common(p, stochastic=st)

    p, st = sub("optimize", "goodput-optimal outage target", _cmd_optimize)
    _add_channel(p)
    _add_model(p)
    _add_common(p, stochastic=st)

    p, st = sub("crc", "outage target plus error-detection length", _cmd_crc)
    _add_channel(p)
    _add_model(p)
    p.add_argument("--p", type=float, required=True,
                   help="undetected-error probability budget")
    _add_common(p, stochastic=st)

    p, st = sub("delay", "outage target under a round cap and loss budget",
                _cmd_delay)
    _add_channel(p)
    _add_model(p)
    p.add_argument("--d", type=int, required=True, help="maximum rounds per packet")
    p.add_argument("--q", type=float, required=True, help="residual loss budget")
    _add_common(p, stochastic=st)

    p, st = sub("feedback", "acknowledgement word error rate / length",
                _cmd_feedback, stochastic=False)
    p.add_argument("--snr-db", type=float, required=True, help="feedback SNR in dB")
    p.add_argument("--l-fb", type=int, default=1,
                   help="diversity branches on the feedback link")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--f", type=int, help="acknowledgement symbols")
    group.add_argument("--target", type=float,
                       help="error-rate target; emits the minimal length")
    _add_common(p, stochastic=st)

    p, st = sub("harq", "incremental-redundancy metrics or rate search", _cmd_harq)
    _add_channel(p)
    p.add_argument("--m-max", type=int, required=True, help="slots per cycle")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--r-init", type=float, help="initial rate in bits/symbol")
    group.add_argument("--optimize", action="store_true",
                       help="search the goodput-optimal initial rate")
    _add_common(p, stochastic=st)

    p, st = sub("simulate", "packet-level protocol simulation", _cmd_simulate)
    _add_channel(p)
    p.add_argument("--rate", type=float, required=True, help="rate in bits/symbol")
    p.add_argument("--d", type=int, default=10, help="round cap")
    p.add_argument("--q", type=float, default=0.5,
                   help="loss budget recorded in the config (not enforced)")
    p.add_argument("--f", type=int, default=None,
                   help="acknowledgement symbols; omit for ideal feedback")
    p.add_argument("--l-fb", type=int, default=1,
                   help="feedback diversity branches")
    p.add_argument("--fb-snr-db", type=float, default=None,
                   help="feedback SNR in dB; defaults to --snr-db")
    p.add_argument("--harq-m", type=int, default=None,
                   help="slots per incremental-redundancy cycle")
    p.add_argument("--forward-eps", type=float, default=None,
                   help="decode-failure probability for the coin-flip forward mode")
    p.add_argument("--packets", type=int, default=CLI_SAMPLES,
                   help="packets to simulate")
    p.add_argument("--n", type=int, default=200, help="symbols per codeword")
    p.add_argument("--seed", type=int, default=CLI_SEED, help="random seed")
    p.add_argument("--out", default="-", help="output path, - for stdout")
    p.add_argument("--config", default=None, help="key=value file of flag defaults")

    p, st = sub("figure", "emit sweep data behind one of the study plots",
                _cmd_figure)
    p.add_argument("fig", choices=sorted(_FIGURES), help="figure identifier")
    _add_common(p, stochastic=st)

    return parser, subs


def _write_csv(path: str, header: list[str], rows: list[list],
               seed: str, samples: str) -> None:
    def emit(fh: TextIO) -> None:
        fh.write(f"# arqopt {__version__} seed={seed} samples={samples}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])

    if path == "-":
        emit(sys.stdout)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            emit(fh)


def run_command(argv: Optional[list[str]] = None) -> int:
    parser, subs = _build_parser()
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        return code if isinstance(code, int) else 2
    try:
        if getattr(args, "config", None):
            cfg = ExperimentConfig.from_file(args.config)
            _apply_config(subs[args.command], cfg, args.command)
            args = parser.parse_args(argv)
        header, rows, seed, samples = args.handler(args)
        _write_csv(args.out, header, rows, seed, samples)
    except InfeasibleError as exc:
        print(f"error: infeasible: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: arguments: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run_command())

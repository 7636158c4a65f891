"""Command-line front end.

    eggsim params          [--config C] [--set k=v ...]
    eggsim validate        [--config C]
    eggsim heating         [--config C] [--out DIR] [--convergence-check]
    eggsim ms-gate         [--config C] [--out DIR] [--convergence-check]
    eggsim spam            [--config C] [--out DIR]
    eggsim ultrafast-design [--config C] [--out DIR]
    eggsim ultrafast-sim   [--config C] [--out DIR] [--sequence FILE]

Exit status: 0 on success, 2 on a configuration error, 3 when a numerical
guard (truncation, norm drift, convergence, ambiguous threshold) fails.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys

import numpy as np

from . import config as cfgmod
from . import gates, io, ultrafast
from .errors import ConfigError, NumericalGuardError
from .model import (carrier_phase_bound, eta, ms_bell_time, ms_gate_time, ms_validity_ratio,
                    quadrupole_carrier_rate, rabi_from_voltage, thermal_occupation, two_ion_modes,
                    xeq_tolerance)
from .scenarios import fock_cutoff, heating_scenario, ms_couplings, ms_scenario

EXIT_OK, EXIT_CONFIG, EXIT_GUARD = 0, 2, 3


def _load(args):
    cfg = cfgmod.load(args.config) if args.config else cfgmod.paper_config()
    return cfgmod.apply_overrides(cfg, args.set or [])


def derived_parameters(cfg):
    """Every closed-form quantity of ``cfg`` as a flat JSON-ready dict."""
    trap, mol = cfg.trap, cfg.molecule
    rabi = rabi_from_voltage(cfg.drive.voltage, mol, trap)
    modes = two_ion_modes(trap)
    rabi_g, e1, e2, mode = ms_couplings(cfg)
    gamma = cfg.gate.detuning
    out = {
        "rabi_rad_s": rabi,
        "rabi_over_2pi_hz": rabi / (2 * math.pi),
        "eta": {name: [eta(m, i, mol, trap) for i in range(2)]
                for name, m in zip(("com", "relative"), modes)},
        "mode_frequencies_rad_s": [m.frequency for m in modes],
        "nbar_heating": thermal_occupation(cfg.heating.temperature, trap.secular_frequency),
        "nbar_gate": thermal_occupation(cfg.gate.temperature, mode.frequency),
        "nbar_spam": thermal_occupation(cfg.spam.temperature, trap.secular_frequency),
        "ms_gate_time_s": ms_gate_time(rabi_g, abs(e1), abs(e2), gamma),
        "ms_bell_time_s": ms_bell_time(rabi_g, abs(e1), abs(e2), gamma),
        "ms_validity_ratio": ms_validity_ratio(gamma, rabi_g, max(abs(e1), abs(e2))),
        "xeq_tolerance_m": xeq_tolerance(mode.frequency, gamma, trap.field_radius,
                                         cfg.drive.voltage, mol.dipole_moment),
        "carrier_phase_bound_rad": carrier_phase_bound(rabi, trap.x_eq, trap.field_radius,
                                                       mode.frequency, gamma),
        "quadrupole_carrier_rate_rad_s": quadrupole_carrier_rate(cfg.drive.voltage,
                                                                 trap.field_radius),
        "kick_base": list(ultrafast.base_kicks(cfg)),
    }
    return out


def _validation_rows(cfg):
    rows = []
    trap, mol = cfg.trap, cfg.molecule
    modes = two_ion_modes(trap)
    ratio = mol.splitting / max(m.frequency for m in modes)
    rows.append(("splitting / mode frequency > 100", ratio, "pass" if ratio > 100 else "fail"))
    p = derived_parameters(cfg)
    v = p["ms_validity_ratio"]
    rows.append(("gamma / (2 Omega eta) >= 10", v, "pass" if v >= gates.MS_VALIDITY_MIN else "warn"))
    tol = p["xeq_tolerance_m"]
    rows.append(("x_eq <= tolerance (1e-4 infidelity)", abs(trap.x_eq),
                 "pass" if abs(trap.x_eq) <= tol else "warn"))
    rabi = p["rabi_rad_s"]
    eta_q = abs(p["eta"]["com"][0]) * math.sqrt(2) * cfg.heating.participation
    alpha = 2 * rabi * eta_q * cfg.heating.t_end
    if cfg.heating.n_max is not None:
        need = 2 * abs(alpha) ** 2
        rows.append(("heating n_max holds |2 Omega eta t|^2", cfg.heating.n_max,
                     "pass" if cfg.heating.n_max >= need else "fail"))
    if cfg.ms.n_max is not None:
        rabi_g, e1, e2, mode = ms_couplings(cfg)
        need = fock_cutoff(cfg.ms.initial_fock or 0,
                           2 * rabi_g * (abs(e1) + abs(e2)) / cfg.gate.detuning)
        rows.append(("ms n_max holds the spin-dependent excursion", cfg.ms.n_max,
                     "pass" if cfg.ms.n_max >= need else "warn"))
    try:
        gates.spam_model(cfg)
        rows.append(("spam threshold separates dark and bright", 0.0, "pass"))
    except NumericalGuardError:
        rows.append(("spam threshold separates dark and bright", float("nan"), "fail"))
    return rows


# --------------------------------------------------------------------------
# subcommands


def cmd_params(cfg, args):
    sys.stdout.write(io.dumps_json(derived_parameters(cfg)))
    if args.out:
        io.write_json(os.path.join(args.out, "params.json"),
                      {"config": cfg.to_dict(), "derived": derived_parameters(cfg)})
    return EXIT_OK


def cmd_validate(cfg, args):
    rows = _validation_rows(cfg)
    width = max(len(r[0]) for r in rows)
    for name, value, status in rows:
        print(f"{name:<{width}}  {value:>12.5g}  {status}")
    return EXIT_CONFIG if any(r[2] == "fail" for r in rows) else EXIT_OK


def _write_traces(out, stem, res, names, cfg, summary, title, ylabel):
    traces = {**res.traces, "norm_drift": res.drift_trace}
    io.write_csv(os.path.join(out, f"{stem}.csv"), ["t_s"] + names + ["norm_drift"],
                 io.trace_rows(res.times, traces, names + ["norm_drift"]))
    doc = {"config": cfg.to_dict(), "meta": res.meta, "summary": summary,
           "norm_drift": res.norm_drift, "dt_s": res.dt, "flags": list(res.flags),
           "convergence_delta": res.convergence_delta}
    io.write_json(os.path.join(out, f"{stem}.json"), doc)
    series = [(n, res.times * 1e6, res.traces[n]) for n in names]
    io.write_svg(os.path.join(out, f"{stem}.svg"), series, title=title, xlabel="t (us)",
                 ylabel=ylabel)


def cmd_heating(cfg, args):
    res = heating_scenario(cfg, convergence_check=args.convergence_check)
    num, ana = res.traces["mean_n"], res.traces["analytic_mean_n"]
    summary = {"final_mean_n": float(num[-1]), "final_analytic_mean_n": float(ana[-1]),
               "max_relative_error": float(np.max(np.abs(num - ana) / ana))}
    _write_traces(args.out, "heating", res, ["mean_n", "analytic_mean_n", "P_gg", "P_ee"], cfg,
                  summary, "mean phonon number", "<n>")
    print(io.dumps_json(summary), end="")
    return EXIT_OK


def cmd_ms_gate(cfg, args):
    res = ms_scenario(cfg, convergence_check=args.convergence_check)
    t_bell = res.meta["t_bell"]
    i = int(np.argmin(np.abs(res.times - t_bell)))
    summary = {
        "t_bell_s": t_bell,
        "t_bell_sample_s": float(res.times[i]),
        "bell_fidelity": float(res.traces["bell_fidelity"][i]),
        "max_abs_error_P_gg": float(np.max(np.abs(res.traces["P_gg"] -
                                                  res.traces["analytic_P_gg"]))),
        "max_abs_error_P_ee": float(np.max(np.abs(res.traces["P_ee"] -
                                                  res.traces["analytic_P_ee"]))),
    }
    names = ["P_gg", "P_ee", "P_ge_eg", "analytic_P_gg", "analytic_P_ee", "bell_fidelity",
             "mean_n"]
    _write_traces(args.out, "ms_gate", res, names, cfg, summary, "MS gate populations",
                  "population")
    print(io.dumps_json(summary), end="")
    return EXIT_OK


def cmd_spam(cfg, args):
    model = gates.spam_model(cfg)
    inputs = {"g": "g", "e": "e", "plus": np.array([1, 1]) / math.sqrt(2)}
    records = {name: gates.spam_protocol(v, cfg, model=model, rng=np.random.default_rng(0)).to_dict()
               for name, v in inputs.items()}
    doc = {"config": cfg.to_dict(), "threshold": model.threshold,
           "alpha": model.alpha, "dark_mean": model.dark_mean, "bright_mean": model.bright_mean,
           "records": records}
    io.write_json(os.path.join(args.out, "spam.json"), doc)
    print(io.dumps_json({k: r["herald"] for k, r in records.items()}), end="")
    return EXIT_OK


def _design(cfg):
    uc = cfg.ultrafast
    modes = two_ion_modes(cfg.trap)
    return ultrafast.design_sequence(uc.n_pulses, ultrafast.base_kicks(cfg),
                                     [m.frequency for m in modes], target=uc.target_phase,
                                     max_total_time=uc.max_total_time, max_kick=uc.max_kick,
                                     t_pulse=uc.t_pulse)


def _sequence_report(seq):
    return {"closure_residual": list(ultrafast.closure_residual(seq)),
            "accumulated_phase": ultrafast.accumulated_phase(seq),
            "total_time_s": seq.total_time}


def cmd_ultrafast_design(cfg, args):
    seq = _design(cfg)
    doc = seq.to_dict()
    io.write_json(os.path.join(args.out, "sequence.json"), doc)
    io.write_json(os.path.join(args.out, "sequence_report.json"),
                  {"config": cfg.to_dict(), **_sequence_report(seq)})
    print(io.dumps_json(_sequence_report(seq)), end="")
    return EXIT_OK


def cmd_ultrafast_sim(cfg, args):
    path = args.sequence or os.path.join(args.out, "sequence.json")
    if os.path.exists(path):
        try:
            with open(path, encoding="utf-8") as fh:
                seq = ultrafast.PulseSequence.from_dict(json.load(fh))
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read sequence {path}: {exc}") from exc
    elif args.sequence:
        raise ConfigError(f"sequence file {path} not found")
    else:
        seq = _design(cfg)
    uc = cfg.ultrafast
    traj = ultrafast.trajectory(seq, samples_per_period=uc.samples_per_period)
    io.write_csv(os.path.join(args.out, "trajectory.csv"),
                 ["mode", "branch", "x_over_x0", "p_over_p0", "t_s"], traj.rows())
    series = [(f"{b} mode {m}", traj.paths[(b, m)][1], traj.paths[(b, m)][2])
              for b, m in (("+X+X", 0), ("+X-X", 1))]
    io.write_svg(os.path.join(args.out, "trajectory.svg"), series, title="phase space",
                 xlabel="x / x0", ylabel="p / p0", equal=True)
    motional = {"vacuum": (0, 0), "fock_1_0": (1, 0), "coherent": (1 + 1j, 0.5)}
    branches = {k: ultrafast.simulate_branches(seq, m, uc.n_max * 3) for k, m in motional.items()}
    report = {
        "config": cfg.to_dict(),
        **_sequence_report(seq),
        "extracted_phase": {k: b.phase() for k, b in branches.items()},
        "min_overlap": {k: min(b.overlaps().values()) for k, b in branches.items()},
        "endpoint_error": {f"{b} mode {m}": traj.endpoint_error(b, m) for (b, m) in sorted(traj.paths)},
    }
    if cfg.trap.x_eq:
        report["xeq_phase_deviation"] = ultrafast.xeq_robustness_check(seq, cfg, cfg.trap.x_eq)
    io.write_json(os.path.join(args.out, "phase_report.json"), report)
    print(io.dumps_json({"accumulated_phase": report["accumulated_phase"],
                         "extracted_phase": report["extracted_phase"]["vacuum"]}), end="")
    return EXIT_OK


COMMANDS = {
    "params": cmd_params,
    "validate": cmd_validate,
    "heating": cmd_heating,
    "ms-gate": cmd_ms_gate,
    "spam": cmd_spam,
    "ultrafast-design": cmd_ultrafast_design,
    "ultrafast-sim": cmd_ultrafast_sim,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="eggsim", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (default: built-in parameters)")
    common.add_argument("--out", default="eggsim-out", help="output directory")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config value, e.g. trap.x_eq=1e-6 (repeatable)")
    common.add_argument("--convergence-check", action="store_true",
                        help="re-run at half the time step and report the change")
    common.add_argument("--threads", type=int, default=None, help="BLAS thread limit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "ultrafast-sim":
            p.add_argument("--sequence", help="PulseSequence JSON (default: OUT/sequence.json "
                           "or a freshly designed one)")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "sequence"):
        args.sequence = None
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    limiter = contextlib.nullcontext()
    if args.threads:
        from threadpoolctl import threadpool_limits
        limiter = threadpool_limits(limits=args.threads)
    try:
        with limiter:
            return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalGuardError as exc:
        print(f"numerical guard failed ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())

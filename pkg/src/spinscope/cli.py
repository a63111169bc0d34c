"""Command-line front end: ``spinscope <command> --scenario <file|fixture:name>``.

Traces are written as CSV (or JSON with ``--format json``); reports are JSON.
Exit status 2 signals an invalid scenario or usage, 3 a numerical failure; in
both cases a JSON error object goes to stderr.
"""

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from pydantic import ValidationError

from . import __version__
from ._validation import AnalysisError, InversionError
from .analysis import classify_correlation, fingerprint
from .analytic import DipParameters, magnus_coherence, semiclassical_coherence
from .dd_control import DDSequence, filter_value
from .exact_sim import CoherenceTrace, pulse_scan, tau_grid, tau_scan
from .mri import FieldDirection, SurfacePrior, forward_periods, measurement_budget, periods_from_traces, reconstruct
from .scenario import fixture_names, parse_scenario, read_scenario_data

EXIT_OK, EXIT_SCHEMA, EXIT_NUMERIC = 0, 2, 3
TRACE_COMMANDS = ("scan-tau", "scan-pulses", "sweep-field")


class _UsageError(ValueError):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


# -- traces --------------------------------------------------------------------


def _semiclassical_params(scn, system):
    couplings = tuple(system.transverse_couplings())
    return DipParameters.for_sensor(float(np.mean(system.omega0)), couplings, scn.sensor_kind)


def _model_values(scn, system, taus, ns):
    """Coherence for paired ``(tau, N)`` values under the analytic or semiclassical model."""
    out = []
    params = _semiclassical_params(scn, system) if scn.model == "semiclassical" else None
    for tau, n in zip(taus, ns):
        seq = DDSequence(int(n), float(tau))
        if params is None:
            out.append(magnus_coherence(system, scn.sensor_kind, seq))
        else:
            out.append(semiclassical_coherence(params, filter_value(params.omega0, seq).f_value))
    return np.array(out, complex)


def pulse_trace(scn, direction=None):
    if scn.sequence.n_range is None:
        raise _UsageError("scan-pulses needs sequence.n_range")
    system = scn.system(direction)
    tau = scn.tau(direction)
    lo, hi = scn.sequence.n_range
    if scn.model == "exact":
        return pulse_scan(system, scn.sensor_kind, tau, (lo, hi))
    ns = np.arange(lo, hi + 1)
    vals = _model_values(scn, system, np.full(len(ns), tau), ns)
    meta = {"system": system.describe(), "sensor": scn.sensor_kind.name, "tau": tau, "model": scn.model}
    return CoherenceTrace("N", ns.astype(float), vals, meta)


def tau_trace(scn):
    s = scn.sequence
    if s.n is None or s.tau_range is None:
        raise _UsageError("scan-tau needs sequence.n and sequence.tau_range")
    system = scn.system()
    if scn.model == "exact":
        return tau_scan(system, scn.sensor_kind, s.n, s.tau_range, s.samples)
    taus = tau_grid(s.tau_range, s.samples)
    vals = _model_values(scn, system, taus, np.full(len(taus), s.n))
    meta = {"system": system.describe(), "sensor": scn.sensor_kind.name, "n_pulses": s.n, "model": scn.model}
    return CoherenceTrace("tau", taus, vals, meta)


def _noisy(trace, sigma, seed):
    if sigma == 0:
        return trace
    rng = np.random.default_rng(seed)
    return trace.with_values(trace.values + rng.normal(0.0, sigma, len(trace)), trace_noise=sigma)


def _trace_json(trace):
    return {
        "axis": trace.axis,
        "abscissa": trace.abscissa,
        "L_real": trace.values.real,
        "L_imag": trace.values.imag,
        "metadata": trace.metadata,
    }


def _sweep_one(args):
    data, variant, phi = args
    scn = parse_scenario(data, variant)
    direction = FieldDirection(scn.field.gauss, scn.field.theta_deg, phi)
    return pulse_trace(scn, direction)


# -- commands --------------------------------------------------------------------


def cmd_scan_pulses(scn, args, ctx):
    return _noisy(pulse_trace(scn), scn.analysis.trace_noise, scn.seed)


def cmd_scan_tau(scn, args, ctx):
    return _noisy(tau_trace(scn), scn.analysis.trace_noise, scn.seed)


def _analysis_trace(scn, args):
    if args.trace:
        with open(args.trace) as fh:
            return CoherenceTrace.from_csv(fh)
    return _noisy(pulse_trace(scn), scn.analysis.trace_noise, scn.seed)


def cmd_fingerprint(scn, args, ctx):
    trace = _analysis_trace(scn, args)
    omega0 = scn.larmor()
    noise = scn.analysis.trace_noise if scn.analysis.trace_noise > 0 else None
    rep = fingerprint(trace, omega0, scn.sensor_kind, noise=noise, max_spins=scn.analysis.max_spins)
    return {"command": "fingerprint", "omega0": omega0, "sensor": scn.sensor_kind.name, "report": rep.to_dict()}


def cmd_classify(scn, args, ctx):
    trace = _analysis_trace(scn, args)
    noise = scn.analysis.trace_noise if scn.analysis.trace_noise > 0 else None
    rep = classify_correlation(trace, noise=noise)
    return {"command": "classify", "report": rep.to_dict()}


def cmd_sweep_field(scn, args, ctx):
    if scn.targets is None or scn.targets.geometry is None:
        raise _UsageError("sweep-field needs geometric targets")
    if scn.analysis.phi_grid is not None:
        phis = scn.analysis.phi_grid.values()
    else:
        phis = [d.phi for d in scn.field.directions()]
    jobs = [(ctx["data"], ctx["variant"], float(p)) for p in phis]
    if args.parallel > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as ex:
            traces = list(ex.map(_sweep_one, jobs))
    else:
        traces = [_sweep_one(j) for j in jobs]
    return {"phi_deg": np.asarray(phis, float), "traces": traces}


def cmd_reconstruct(scn, args, ctx):
    if scn.targets is None or scn.targets.geometry is None:
        raise _UsageError("reconstruct needs geometric targets")
    directions = scn.field.directions()
    geoms = scn.geometries()
    g = scn.sensor_kind
    a = scn.analysis
    if a.period_source == "forward":
        periods = forward_periods(geoms, directions, g)
    else:
        traces = [pulse_trace(scn, d) for d in directions]
        traces = [_noisy(t, a.trace_noise, scn.seed + i) for i, t in enumerate(traces)]
        periods = periods_from_traces(traces, scn.larmor(directions[0]), g, a.assignment)
    depth = scn.sensor.nv_depth_nm
    prior = SurfacePrior() if depth is None else SurfacePrior(depth=10.0 * depth)
    res = reconstruct(
        periods,
        directions,
        geoms[0].species,
        g=g,
        names=[x.name for x in geoms],
        noise_sigma=a.noise_sigma,
        n_samples=a.mc_samples,
        seed=scn.seed,
        prior=prior,
        n_workers=args.parallel,
        true_positions=[x.position for x in geoms],
    )
    return {"command": "reconstruct", "period_source": a.period_source, "result": res.to_dict()}


def cmd_budget(scn, args, ctx):
    b = scn.budget
    if b is None:
        raise _UsageError("budget needs a budget section")
    out = measurement_budget(b.a_perp, b.readout_fidelity, b.target_sigma, b.t_init_readout)
    return {"command": "budget", "inputs": b.model_dump(), "K": out["K"], "t_dd": out["t_dd"], "T_total": out["T_total"]}


COMMANDS = {
    "scan-tau": (cmd_scan_tau, "coherence versus half pulse spacing at fixed N"),
    "scan-pulses": (cmd_scan_pulses, "coherence versus pulse number at fixed tau"),
    "fingerprint": (cmd_fingerprint, "count spins and estimate couplings from dip zeros"),
    "classify": (cmd_classify, "read the cluster dimension off the dip minimum"),
    "sweep-field": (cmd_sweep_field, "pulse scans over a grid of field azimuths"),
    "reconstruct": (cmd_reconstruct, "locate labelled spins from three field directions"),
    "budget": (cmd_budget, "repetitions and wall time for one dip zero"),
}


def build_parser():
    p = argparse.ArgumentParser(prog="spinscope", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, helptext) in COMMANDS.items():
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--scenario", required=True, help="scenario JSON path or fixture:<name>")
        s.add_argument("--variant", default=None, help="named variant inside the scenario")
        s.add_argument("--out", default=None, help="output path (default stdout)")
        s.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        s.add_argument("--parallel", type=int, default=1, help="worker processes")
        s.add_argument("--format", choices=("csv", "json"), default=None)
        if name in ("fingerprint", "classify"):
            s.add_argument("--trace", default=None, help="analyse this N-axis CSV instead of simulating")
    sub.add_parser("fixtures", help="list bundled scenario fixtures")
    return p


def _render(name, result, fmt):
    fmt = fmt or ("csv" if name in TRACE_COMMANDS else "json")
    if name not in TRACE_COMMANDS:
        if fmt != "json":
            raise _UsageError(f"{name} produces a JSON report; --format csv is not available")
        return dumps(result)
    if name == "sweep-field":
        if fmt == "json":
            return dumps({"phi_deg": result["phi_deg"], "traces": [_trace_json(t) for t in result["traces"]]})
        lines = ["phi_deg,N,L_real,L_imag"]
        for phi, tr in zip(result["phi_deg"], result["traces"]):
            body = tr.to_csv().splitlines()[1:]
            lines.extend(f"{phi:.12g},{row}" for row in body)
        return "\n".join(lines) + "\n"
    return dumps(_trace_json(result)) if fmt == "json" else result.to_csv()


def _fail(code, kind, message, details=None):
    sys.stderr.write(json.dumps(_jsonable({"error": kind, "message": message, "details": details or {}}), sort_keys=True) + "\n")
    return code


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "fixtures":
        sys.stdout.write("\n".join(fixture_names()) + "\n")
        return EXIT_OK
    try:
        data = read_scenario_data(args.scenario)
        if args.seed is not None:
            data = {**data, "seed": args.seed}
        scn = parse_scenario(data, args.variant)
    except ValidationError as exc:
        return _fail(EXIT_SCHEMA, "schema", "scenario failed validation", {"errors": json.loads(exc.json())})
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        return _fail(EXIT_SCHEMA, "schema", str(exc))
    func = COMMANDS[args.command][0]
    try:
        result = func(scn, args, {"data": data, "variant": args.variant})
        text = _render(args.command, result, args.format)
    except (InversionError, AnalysisError, ArithmeticError, np.linalg.LinAlgError, MemoryError) as exc:
        return _fail(EXIT_NUMERIC, "numerical", str(exc), getattr(exc, "diagnostics", {}))
    except (ValueError, KeyError, OSError) as exc:
        return _fail(EXIT_SCHEMA, "input", str(exc))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line driver: learn, simulate, evaluate, serve, dataset.

Every command accepts --config pointing at a JSON file whose keys
mirror the long flag names; explicit flags win over the config file,
which wins over built-in defaults.  Each command writes a manifest
listing every artifact with its content hash, so a run can be
reproduced and checked from the manifest alone.  Log level comes from
the SAFEFLOW_LOG environment variable.
"""

from __future__ import annotations

import functools
import hashlib
import json
import logging
import os
import socket
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, cones, dataset, ds, model_io, simulate, so3, synthetic
from .errors import ParseError, SafeflowError


def _setup_logging():
    level = os.environ.get("SAFEFLOW_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


@click.group()
@click.version_option(version=__version__)
def main():
    _setup_logging()


def guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except SafeflowError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)
        except FileNotFoundError as exc:
            click.echo(f"error: no such file: {exc.filename or exc}", err=True)
            sys.exit(3)
    return wrapper


def _load_config(path):
    if path is None:
        return {}
    with open(path) as handle:
        data = json.load(handle)
    if not isinstance(data, dict):
        raise ParseError(f"config file {path} must hold a JSON object")
    return data


def _resolve(flag_value, config, key, default):
    if flag_value is not None:
        return flag_value
    if key in config:
        return config[key]
    return default


def _sha256(path):
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(out_path, command, config, seed, artifacts):
    manifest = {"command": command,
                "config": config,
                "seed": seed,
                "version": __version__,
                "artifacts": [{"path": str(p), "sha256": _sha256(p)}
                              for p in artifacts]}
    path = f"{out_path}.manifest.json"
    with open(path, "w") as handle:
        json.dump(manifest, handle, indent=2)
    return path


@main.command()
@click.argument("dataset_path")
@click.option("-k", "--components", type=int, default=None,
              help="mixture components (default 8)")
@click.option("-m", "--rows", type=int, default=None,
              help="distance-grid resampling rows (default 60)")
@click.option("--degree", type=int, default=None, help="local polynomial degree (default 5)")
@click.option("--kernels", type=int, default=None, help="regression kernels (default 10)")
@click.option("--floor", type=float, default=None, help="cone angle floor, rad (default 0.01)")
@click.option("--seed", type=int, default=None, help="mixture init seed (default 0)")
@click.option("--out", default=None, help="output model path (default model.json)")
@click.option("--config", "config_path", default=None, help="JSON config mirroring flags")
@guarded
def learn(dataset_path, components, rows, degree, kernels, floor, seed, out, config_path):
    """Fit the motion model and cone angles from a demonstration file."""
    config = _load_config(config_path)
    components = int(_resolve(components, config, "components", 8))
    rows = int(_resolve(rows, config, "rows", 60))
    degree = int(_resolve(degree, config, "degree", 5))
    kernels = int(_resolve(kernels, config, "kernels", 10))
    floor = float(_resolve(floor, config, "floor", 0.01))
    seed = int(_resolve(seed, config, "seed", 0))
    out = _resolve(out, config, "out", "model.json")
    if components <= 0:
        raise click.BadParameter("components must be positive")
    if rows < 2:
        raise click.BadParameter("rows must be at least 2")

    dset = dataset.load(dataset_path)
    xi, _ = ds.prepare_tangent_data(dset)
    gmm = ds.fit_gmm(xi, n_components=components, seed=seed)
    model = ds.fit_system_matrices(dset, gmm)
    resampled = dataset.resample_by_distance(dset, m=rows)
    lwr = cones.learn_cone_angles(resampled, dset.goal,
                                  cones.LWRConfig(degree=degree, n_kernels=kernels))
    tv = cones.TimeVaryingCones(angle_model=lwr, reference=model, angle_floor=floor)
    start = so3.tangent_mean([d.rotations[0] for d in dset.demos])

    pred = np.array([lwr.predict(d) for d in lwr.train_d])
    lwr_rmse = float(np.sqrt(np.mean((pred - lwr.train_y) ** 2)))
    meta = {"dataset": str(dataset_path), "components": components, "rows": rows,
            "degree": degree, "kernels": kernels, "floor": floor, "seed": seed,
            "velocity_residual": model.diagnostics["residual"],
            "baseline_residual": model.diagnostics["baseline_residual"],
            "lwr_rmse": lwr_rmse, "version": __version__}
    model_io.save_model(out, model, tv, start, meta)
    echo_config = {"components": components, "rows": rows, "degree": degree,
                   "kernels": kernels, "floor": floor, "out": str(out),
                   "dataset": str(dataset_path)}
    manifest = _write_manifest(out, "learn", echo_config, seed, [out])
    click.echo(f"velocity residual: {model.diagnostics['residual']:.6g}")
    click.echo(f"baseline residual: {model.diagnostics['baseline_residual']:.6g}")
    click.echo(f"cone angle rmse: {lwr_rmse:.6g}")
    click.echo(f"wrote {out} and {manifest}")


@main.command("simulate")
@click.argument("model_path")
@click.option("--dt", type=float, default=None, help="integration step, s (default 0.003)")
@click.option("--duration", type=float, default=None, help="run length, s (default 25)")
@click.option("--perturb-onset", type=float, default=None, help="pulse onset, s (default 1.5)")
@click.option("--perturb-dur", type=float, default=None, help="pulse rise time, s (default 0.5)")
@click.option("--perturb-amp", type=float, nargs=3, default=None,
              help="pulse amplitude, rad/s (default 2 0 0)")
@click.option("--filter/--no-filter", "filter_on", default=None,
              help="safety filter toggle (default on)")
@click.option("--alpha-gain", type=float, default=None, help="barrier gain, 1/s (default 10)")
@click.option("--u-max", type=float, default=None, help="input box bound, rad/s (default 5)")
@click.option("--speed-scale", type=float, default=None, help="joint velocity scale (default 1)")
@click.option("--seed", type=int, default=None, help="echoed into the manifest (default 0)")
@click.option("--out", default=None, help="output prefix (default trace)")
@click.option("--config", "config_path", default=None, help="JSON config mirroring flags")
@guarded
def simulate_cmd(model_path, dt, duration, perturb_onset, perturb_dur, perturb_amp,
                 filter_on, alpha_gain, u_max, speed_scale, seed, out, config_path):
    """Run the perturbation protocol against a trained model."""
    config = _load_config(config_path)
    dt = float(_resolve(dt, config, "dt", 0.003))
    duration = float(_resolve(duration, config, "duration", 25.0))
    onset = float(_resolve(perturb_onset, config, "perturb_onset", 1.5))
    pdur = float(_resolve(perturb_dur, config, "perturb_dur", 0.5))
    amp = _resolve(perturb_amp or None, config, "perturb_amp", (2.0, 0.0, 0.0))
    filter_on = bool(_resolve(filter_on, config, "filter", True))
    alpha_gain = float(_resolve(alpha_gain, config, "alpha_gain", 10.0))
    u_max = float(_resolve(u_max, config, "u_max", 5.0))
    speed_scale = float(_resolve(speed_scale, config, "speed_scale", 1.0))
    seed = int(_resolve(seed, config, "seed", 0))
    out = _resolve(out, config, "out", "trace")
    if duration <= 0:
        raise click.BadParameter("duration must be positive")
    if dt <= 0:
        raise click.BadParameter("dt must be positive")

    bundle = model_io.load_model(model_path)
    profile = simulate.PerturbationProfile(onset=onset, duration=pdur,
                                           amplitude=np.asarray(amp, dtype=float))
    cfg = simulate.SimConfig(duration=duration, initial_exc=bundle.start.copy(),
                             initial_ref=bundle.start.copy(), dt=dt,
                             perturbation=profile, filter_on=filter_on,
                             speed_scale=speed_scale, alpha_gain=alpha_gain,
                             u_max=u_max)
    trace = simulate.run(cfg, bundle.model, bundle.cones)
    csv_path, json_path = f"{out}.csv", f"{out}.json"
    simulate.write_csv(trace, csv_path)
    simulate.write_json(trace, json_path)
    echo_config = {"model": str(model_path), "dt": dt, "duration": duration,
                   "perturb_onset": onset, "perturb_dur": pdur,
                   "perturb_amp": list(np.asarray(amp, dtype=float)),
                   "filter": filter_on, "alpha_gain": alpha_gain, "u_max": u_max,
                   "speed_scale": speed_scale, "out": str(out)}
    manifest = _write_manifest(out, "simulate", echo_config, seed,
                               [csv_path, json_path])
    s = trace.summary
    click.echo(f"nacv: {s['nacv']:.6g}")
    click.echo(f"final error: {s['final_error']:.6g} rad")
    click.echo(f"min h: {s['min_h']:.6g}")
    click.echo(f"wrote {csv_path}, {json_path}, {manifest}")


def _load_trace(path):
    try:
        with open(path) as handle:
            data = json.load(handle)
    except json.JSONDecodeError as exc:
        raise ParseError(f"trace {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict) or "records" not in data or "summary" not in data:
        raise ParseError(f"trace {path} lacks records/summary blocks")
    return data


@main.command()
@click.argument("trace_paths", nargs=-1)
@click.option("--series-out", default=None,
              help="prefix for per-trace axis angle vs bound CSV series")
@guarded
def evaluate(trace_paths, series_out):
    """Summarize one or more simulation traces side by side."""
    if not trace_paths:
        raise click.UsageError("provide at least one trace JSON path")
    rows = []
    for path in trace_paths:
        data = _load_trace(path)
        summary = data["summary"]
        rows.append((path, summary))
        if series_out is not None:
            name = f"{series_out}.{Path(path).stem}.series.csv"
            with open(name, "w") as handle:
                handle.write("t,th_act1,th_act2,th_act3,th1,th2,th3\n")
                for rec in data["records"]:
                    theta = np.asarray(rec["theta"], dtype=float)
                    actual = np.arccos(np.clip(np.asarray(rec["h"], dtype=float)
                                               + np.cos(theta), -1.0, 1.0))
                    vals = [rec["t"], *actual, *theta]
                    handle.write(",".join(format(v, ".17g") for v in vals) + "\n")
            click.echo(f"wrote {name}")
    click.echo(f"{'trace':40s} {'nacv':>10s} {'final_err':>12s} {'min_h':>12s}")
    for path, summary in rows:
        click.echo(f"{path:40s} {summary['nacv']:10.4f} "
                   f"{summary['final_error']:12.4g} {summary['min_h']:12.4g}")
    values = np.array([summary["nacv"] for _, summary in rows])
    click.echo(f"NACV {values.mean():.3f} ± {values.std():.3f}")


@main.command()
@click.argument("model_path")
@click.option("--port", type=int, default=8000, help="listen port")
@click.option("--host", default="127.0.0.1", help="bind address")
@click.option("--dt", type=float, default=0.003, help="tick length, s")
@guarded
def serve(model_path, port, host, dt):
    """Host the interactive teleoperation service for a model."""
    import uvicorn

    from . import service

    bundle = model_io.load_model(model_path)
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.bind((host, port))
    except OSError:
        click.echo(f"error: port {port} on {host} is busy", err=True)
        sys.exit(4)
    finally:
        probe.close()
    app = service.create_app({Path(model_path).stem: bundle}, dt=dt)
    uvicorn.run(app, host=host, port=port,
                log_level=os.environ.get("SAFEFLOW_LOG", "warning").lower())


@main.command("dataset")
@click.argument("shape", type=click.Choice(sorted(synthetic.SHAPES)))
@click.option("--demos", type=int, default=10, help="number of demonstrations")
@click.option("--seed", type=int, default=0, help="generator seed")
@click.option("--out", default=None, help="output path (default <shape>.json)")
@guarded
def dataset_cmd(shape, demos, seed, out):
    """Write a synthetic demonstration file for the chosen motion shape."""
    if demos < 2:
        raise click.BadParameter("need at least two demonstrations")
    out = out or f"{shape}.json"
    dset = synthetic.make_demo_set(shape, n_demos=demos, seed=seed)
    dataset.save(dset, out)
    manifest = _write_manifest(out, "dataset", {"shape": shape, "demos": demos,
                                                "out": str(out)}, seed, [out])
    click.echo(f"wrote {out} ({demos} demonstrations) and {manifest}")


if __name__ == "__main__":
    main()

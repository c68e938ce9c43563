# apps/cli/main.py
from __future__ import annotations

import functools
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import click
import numpy as np
from pydantic import ValidationError
from tabulate import tabulate

from common.errors import EXIT_VERDICT, ArgumentError, ConfigError, CurveFileError, NondegError
from common.files import dumps_report, load_frame_csv, save_frame_csv, save_rows_csv, write_json_atomic
from common.logs import configure_logging, get_logger
from common.models import (
    AsymptoticsReport,
    CensusReport,
    CheckReport,
    ConcatReport,
    JumpModel,
    LocEqualReport,
    ManifoldDescriptor,
    MollifyReport,
    SpinReport,
    TransferReport,
    WireReport,
    diagnostics,
)
from common.registry import get_metric, get_preset, list_metrics, load_presets
from common.settings import RunConfig, load_run_config, set_settings
from geometry.construct import (
    derivative_asymptotics,
    find_wire_N,
    jump_fixture,
    make_twist,
    manifold_wire,
    matrix_wire,
    mollify,
    rotation_loop,
    scale_family,
    scale_into_manifold,
    scan_manifold_wire,
    transfer_flat,
)
from geometry.curve import (
    FrameCurve,
    MoorePath,
    concat_all,
    end_frames,
    in_LMdelta,
    load_curve,
    nondeg_margin,
    save_curve,
)
from geometry.manifold import ChartedManifold, parallel_transport
from geometry.monoid import StabilizedCurve, pi0_census, stabilized_equal_pi0, standard_samples
from geometry.spin import curve_class, loop_class

log = get_logger("cli")


# -------- plumbing ----------

def _cfg(ctx: click.Context) -> RunConfig:
    return ctx.obj["cfg"]


def _emit(ctx: click.Context, report, path: Optional[str] = None) -> None:
    """Print the report as JSON on stdout and optionally write it atomically."""
    payload = report.model_dump(mode="json", by_alias=True)
    if path:
        write_json_atomic(path, payload)
    click.echo(dumps_report(payload), nl=False)


def guarded(fn):
    """Map library errors to their exit codes and a one-line stderr message."""
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return fn(*args, **kwargs)
        except NondegError as e:
            click.echo(f"error: {e.message}", err=True)
            for d in getattr(e, "diagnostics", []):
                click.echo(f"  {d}", err=True)
            ctx.exit(e.exit_code)
    return wrapper


def _load_loop(path: str) -> FrameCurve:
    times, frames = load_frame_csv(path)
    return FrameCurve(times - times[0], frames)


def _out(ctx: click.Context, path: Optional[str]) -> Optional[str]:
    """Relative output paths land under the configured output directory."""
    if not path:
        return None
    p = Path(path)
    return str(p if p.is_absolute() else Path(_cfg(ctx).output_dir) / p)


def _preset(name: str) -> ChartedManifold:
    try:
        d = ManifoldDescriptor.model_validate(get_preset(name))
    except ValidationError as e:
        raise ConfigError(f"invalid manifold preset '{name}': " + "; ".join(diagnostics(e, "manifold"))) from e
    return ChartedManifold.from_descriptor(d.model_dump(exclude_none=True))


@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="JSON run configuration (defaults to $NONDEG_CONFIG).")
@click.option("--grid-density", type=int, default=None)
@click.option("--samples-per-turn", type=int, default=None)
@click.option("--margin-tol", type=float, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--n-max", type=int, default=None)
@click.option("--output-dir", default=None, help="Base directory for relative --out, --report and --csv paths.")
@click.option("--log-level", default=None)
@click.option("--log-json/--no-log-json", default=None)
@click.pass_context
def cli(ctx, config_path, grid_density, samples_per_turn, margin_tol, delta, n_max, output_dir, log_level, log_json):
    """Non-degenerate curves: certification, constructions and frame classes."""
    try:
        cfg = load_run_config(
            config_path,
            grid_density=grid_density,
            samples_per_turn=samples_per_turn,
            margin_tol=margin_tol,
            delta=delta,
            n_max=n_max,
            output_dir=output_dir,
            log_level=log_level,
            log_json=log_json,
        )
    except NondegError as e:
        click.echo(f"error: {e.message}", err=True)
        ctx.exit(e.exit_code)
    set_settings(cfg)
    configure_logging(cfg.log_level, cfg.log_json)
    ctx.ensure_object(dict)
    ctx.obj["cfg"] = cfg


# -------- check ----------

@cli.command()
@click.argument("curve", type=click.Path(dir_okay=False))
@click.option("--report", "report_path", default=None, help="Also write the JSON report here.")
@click.pass_context
@guarded
def check(ctx, curve, report_path):
    """Margin, end frames and L M / L M(delta) membership of a curve file."""
    cfg = _cfg(ctx)
    report_path = _out(ctx, report_path)
    gamma = load_curve(curve)
    M = gamma.manifold
    strict = in_LMdelta(M, gamma, 0.0)
    loose = in_LMdelta(M, gamma, cfg.delta)
    f0, f1 = end_frames(gamma) if not gamma.is_neutral else (gamma.basepoint.frame, gamma.basepoint.frame)
    report = CheckReport(
        config=cfg.echo(),
        dim=gamma.dim,
        duration=gamma.duration,
        margin=loose.margin,
        frame_start=np.asarray(f0).tolist(),
        frame_end=np.asarray(f1).tolist(),
        in_LM=strict.ok,
        in_LMdelta=loose.ok,
        delta=cfg.delta,
        failures=list(loose.failures),
        jumps=[JumpModel(t=t, closeness=c) for t, c in gamma.jumps],
    )
    _emit(ctx, report, report_path)
    if not loose.ok:
        ctx.exit(EXIT_VERDICT)


# -------- wires ----------

@cli.group()
def wire():
    """Telephone wires: matrix wires over a frame loop, manifold wires along a curve."""


@wire.command("matrix")
@click.argument("loop_csv", type=click.Path(dir_okay=False))
@click.argument("omega", type=click.Path(dir_okay=False))
@click.option("--n", "N", type=int, default=None, help="Number of turns (even).")
@click.option("--scan", is_flag=True, help="Search the smallest even N reaching the margin tolerance.")
@click.option("--out", default=None, help="Write the resulting curve here.")
@click.option("--report", "report_path", default=None)
@click.pass_context
@guarded
def wire_matrix(ctx, loop_csv, omega, N, scan, out, report_path):
    cfg = _cfg(ctx)
    out, report_path = _out(ctx, out), _out(ctx, report_path)
    if (N is None) == (not scan):
        raise ArgumentError("give exactly one of --n and --scan")
    A = _load_loop(loop_csv)
    w = load_curve(omega)
    if scan:
        res = find_wire_N(A, w, cfg.margin_tol, cfg.n_max)
        path, N, margin, profile = res.path, res.N, res.margin, list(res.profile)
    else:
        path = matrix_wire(A, w, N)
        margin, profile = nondeg_margin(w.manifold, path), []
    passed = margin >= cfg.margin_tol
    klass = curve_class(w.manifold, path).value if passed else None
    if out:
        save_curve(path, out)
    _emit(ctx, WireReport(config=cfg.echo(), mode="matrix", N=N, margin=margin, margin_tol=cfg.margin_tol,
                          passed=passed, loop_class=klass, profile=profile, output=out), report_path)
    if not passed:
        ctx.exit(EXIT_VERDICT)


@wire.command("manifold")
@click.argument("curve", type=click.Path(dir_okay=False))
@click.option("--n", "N", type=int, default=None)
@click.option("--scan", is_flag=True)
@click.option("--lam", type=float, default=None, help="Twist scale; found by halving when omitted.")
@click.option("--out", default=None)
@click.option("--report", "report_path", default=None)
@click.pass_context
@guarded
def wire_manifold(ctx, curve, N, scan, lam, out, report_path):
    """Wire along a (possibly degenerate) base curve with its parallel-transported frame."""
    cfg = _cfg(ctx)
    out, report_path = _out(ctx, out), _out(ctx, report_path)
    if (N is None) == (not scan):
        raise ArgumentError("give exactly one of --n and --scan")
    gamma = load_curve(curve)
    M = gamma.manifold
    twist = make_twist(gamma.dim)
    if lam is None:
        lam, _ = scale_into_manifold(M, twist, cfg.margin_tol)
    lift = parallel_transport(M, gamma, gamma.basepoint.frame)
    if scan:
        res = scan_manifold_wire(M, lift, twist, lam, cfg.margin_tol, cfg.delta, cfg.n_max)
    else:
        res = manifold_wire(M, lift, twist, lam, N)
    passed = res.margin >= cfg.margin_tol and max(res.closeness) <= cfg.delta
    if out:
        save_curve(res.path, out)
    _emit(ctx, WireReport(config=cfg.echo(), mode="manifold", N=res.N, margin=res.margin,
                          margin_tol=cfg.margin_tol, passed=passed, endpoint_closeness=list(res.closeness),
                          profile=list(res.profile), output=out), report_path)
    if not passed:
        ctx.exit(EXIT_VERDICT)


# -------- spin / smooth / concat / asymptotics ----------

@cli.group()
def spin():
    """Spin(n) lifts of frame loops."""


@spin.command("invariant")
@click.argument("source", type=click.Path(dir_okay=False))
@click.option("--report", "report_path", default=None)
@click.pass_context
@guarded
def spin_invariant(ctx, source, report_path):
    """Class +1/-1 of a frame loop (CSV) or of the frame loop of a closed curve (JSON)."""
    report_path = _out(ctx, report_path)
    if Path(source).suffix.lower() == ".csv":
        res = loop_class(_load_loop(source))
    else:
        gamma = load_curve(source)
        res = curve_class(gamma.manifold, gamma)
    _emit(ctx, SpinReport(config=_cfg(ctx).echo(), loop_class=res.value, residual=res.residual,
                          samples=res.samples), report_path)


@cli.command()
@click.argument("curve", type=click.Path(dir_okay=False))
@click.option("--anchor", required=True, type=click.Path(dir_okay=False), help="Closed curve of duration 1 (gamma_0).")
@click.option("--tau", type=float, default=0.01, show_default=True)
@click.option("--eps2", type=float, default=0.05, show_default=True)
@click.option("--out", default=None)
@click.option("--report", "report_path", default=None)
@click.pass_context
@guarded
def smooth(ctx, curve, anchor, tau, eps2, out, report_path):
    """Mollify a curve with frame jumps, blending back onto the anchor near both ends."""
    out, report_path = _out(ctx, out), _out(ctx, report_path)
    res = mollify(load_curve(curve), tau, load_curve(anchor), eps2)
    if out:
        save_curve(res.path, out)
    _emit(ctx, MollifyReport(config=_cfg(ctx).echo(), tau=res.tau, eps2=res.eps2, kernel=res.kernel,
                             margin_before=res.margin_before, margin_after=res.margin_after,
                             jumps_removed=res.jumps_removed, endpoint_closeness=list(res.closeness),
                             output=out), report_path)


@cli.command("concat")
@click.argument("curves", nargs=-1, required=True, type=click.Path(dir_okay=False))
@click.option("--enforce/--record", default=False, help="Fail on frame jumps above delta instead of recording them.")
@click.option("--out", default=None)
@click.option("--report", "report_path", default=None)
@click.pass_context
@guarded
def concat_cmd(ctx, curves, enforce, out, report_path):
    """Moore concatenation of curve files, in order."""
    cfg = _cfg(ctx)
    out, report_path = _out(ctx, out), _out(ctx, report_path)
    path = concat_all([load_curve(c) for c in curves], cfg.delta if enforce else None)
    if out:
        save_curve(path, out)
    _emit(ctx, ConcatReport(config=cfg.echo(), duration=path.duration,
                            jumps=[JumpModel(t=t, closeness=c) for t, c in path.jumps],
                            max_jump=path.max_jump, delta=cfg.delta, output=out), report_path)


def _monotone(rows: Sequence[dict], k: int) -> bool:
    devs = [r["deviation"] for r in sorted(rows, key=lambda r: r["N"]) if r["k"] == k]
    return all(b <= a for a, b in zip(devs, devs[1:]))


@cli.command()
@click.argument("loop_csv", type=click.Path(dir_okay=False))
@click.argument("omega", type=click.Path(dir_okay=False))
@click.option("--n", "Ns", type=int, multiple=True, required=True, help="Repeat for each N.")
@click.option("--k-max", type=int, default=None)
@click.option("--csv", "csv_path", default=None, help="Deviation table for plotting.")
@click.option("--report", "report_path", default=None)
@click.pass_context
@guarded
def asymptotics(ctx, loop_csv, omega, Ns, k_max, csv_path, report_path):
    """Normalized deviation of wire derivatives from their leading term."""
    csv_path, report_path = _out(ctx, csv_path), _out(ctx, report_path)
    A = _load_loop(loop_csv)
    w = load_curve(omega)
    k_max = k_max or w.dim
    rows = derivative_asymptotics(A, w, sorted(Ns), k_max)
    if csv_path:
        save_rows_csv(rows, csv_path, columns=["N", "k", "deviation"])
    _emit(ctx, AsymptoticsReport(config=_cfg(ctx).echo(), Ns=sorted(Ns), k_max=k_max,
                                 monotone={str(k): _monotone(rows, k) for k in range(1, k_max + 1)},
                                 rows=rows, csv=csv_path), report_path)


# -------- pi0 / localization ----------

@cli.group()
def pi0():
    """Frame-class censuses."""


@pi0.command("census")
@click.option("--dim", "n", type=int, required=True)
@click.option("--in", "in_dir", type=click.Path(file_okay=False), default=None,
              help="Directory of curve files; the standard samples are used when omitted.")
@click.option("--report", "report_path", default=None)
@click.pass_context
@guarded
def pi0_census_cmd(ctx, n, in_dir, report_path):
    report_path = _out(ctx, report_path)
    if in_dir:
        files = sorted(Path(in_dir).glob("*.json"))
        if not files:
            raise CurveFileError(f"no curve files in {in_dir}")
        labels = [f.stem for f in files]
        samples = [load_curve(f) for f in files]
    else:
        std = standard_samples(n)
        labels, samples = list(std), list(std.values())
    res = pi0_census(n, samples, labels)
    rows = [{"label": l, "class": res.classes[l], "duration": s.duration} for l, s in zip(labels, samples)]
    _emit(ctx, CensusReport(config=_cfg(ctx).echo(), dim=n, samples=rows, classes=res.classes,
                            class_count=res.class_count, both_classes=res.both_classes), report_path)


@cli.group()
def loc():
    """Localization at a twist."""


@loc.command("equal")
@click.argument("a", type=click.Path(dir_okay=False))
@click.argument("b", type=click.Path(dir_okay=False))
@click.option("--omega", required=True, type=click.Path(dir_okay=False))
@click.option("--power-a", type=int, default=0, show_default=True)
@click.option("--power-b", type=int, default=0, show_default=True)
@click.option("--report", "report_path", default=None)
@click.pass_context
@guarded
def loc_equal(ctx, a, b, omega, power_a, power_b, report_path):
    """Whether (a, power_a) and (b, power_b) have the same frame class after localization."""
    report_path = _out(ctx, report_path)
    ga, gb, w = load_curve(a), load_curve(b), load_curve(omega)
    equal = stabilized_equal_pi0(StabilizedCurve(ga, power_a), StabilizedCurve(gb, power_b), w)
    M = w.manifold
    _emit(ctx, LocEqualReport(config=_cfg(ctx).echo(), equal=equal,
                              class_a=curve_class(M, ga).value, class_b=curve_class(M, gb).value,
                              class_omega=curve_class(M, w).value, power_a=power_a, power_b=power_b),
          report_path)
    if not equal:
        ctx.exit(EXIT_VERDICT)


# -------- registry and fixtures ----------

@cli.group()
def manifold():
    """Manifold presets and named metrics."""


@manifold.command("list")
@guarded
def manifold_list():
    rows = [[name, d.get("kind"), d.get("dim"), d.get("chart_radius", ""), d.get("metric", "")]
            for name, d in sorted(load_presets().items())]
    click.echo(tabulate(rows, headers=["preset", "kind", "dim", "chart_radius", "metric"]))
    click.echo()
    click.echo(tabulate([[m, get_metric(m).description] for m in list_metrics()], headers=["metric", "description"]))


@cli.command()
@click.option("--dim", "n", type=int, required=True)
@click.option("--out", required=True)
@click.option("--jump", type=float, default=None, help="Write the jump fixture with this closeness instead.")
@click.option("--manifold", "preset", default=None, help="Write exp of the twist, scaled into this preset.")
@click.pass_context
@guarded
def twist(ctx, n, out, jump, preset):
    """Write the certified twist of R^n (or the jump fixture built on it)."""
    out = _out(ctx, out)
    t = make_twist(n)
    if preset:
        if jump:
            raise ArgumentError("--jump and --manifold do not combine")
        M = _preset(preset)
        if M.dim != n:
            raise ArgumentError(f"preset '{preset}' has dimension {M.dim}, not {n}")
        lam, omega = scale_into_manifold(M, t, _cfg(ctx).margin_tol)
        log.info("twist scaled into %s with lambda=%g", preset, lam)
        save_curve(omega, out)
    else:
        save_curve(jump_fixture(t, jump) if jump else t.path, out)
    click.echo(out)


@cli.command()
@click.argument("curves", nargs=-1, required=True, type=click.Path(dir_okay=False))
@click.option("--manifold", "preset", required=True, help="Target manifold preset.")
@click.option("--lam", type=float, default=None, help="Common scale; found by halving when omitted.")
@click.option("--out-dir", required=True, help="One transferred curve per input, same file name.")
@click.option("--report", "report_path", default=None)
@click.pass_context
@guarded
def transfer(ctx, curves, preset, lam, out_dir, report_path):
    """Carry flat curves into a manifold preset: exp at the origin of lam times each curve."""
    cfg = _cfg(ctx)
    out_dir, report_path = _out(ctx, out_dir), _out(ctx, report_path)
    M = _preset(preset)
    flat: List[MoorePath] = [load_curve(c) for c in curves]
    scanned = lam is None
    if scanned:
        lam, family = scale_family(M, flat, cfg.margin_tol)
        paths = list(family.paths)
    else:
        if lam <= 0:
            raise ArgumentError("--lam must be positive")
        bad = [c for c, g in zip(curves, flat) if g.dim != M.dim or not g.manifold.is_flat]
        if bad:
            raise ArgumentError(f"not a flat {M.dim}-dimensional curve: {', '.join(bad)}")
        paths = [transfer_flat(M, g, lam) for g in flat]

    members = []
    for src, path in zip(curves, paths):
        dest = str(Path(out_dir) / Path(src).name)
        save_curve(path, dest)
        members.append({"source": str(src), "output": dest, "duration": path.duration,
                        "margin": nondeg_margin(M, path)})
    passed = all(m["margin"] >= cfg.margin_tol for m in members)
    _emit(ctx, TransferReport(config=cfg.echo(), manifold=preset, lam=lam, scanned=scanned,
                              members=members, passed=passed), report_path)
    if not passed:
        ctx.exit(EXIT_VERDICT)


@cli.command()
@click.option("--dim", "n", type=int, required=True)
@click.option("--turns", type=float, default=1.0, show_default=True)
@click.option("--out", required=True)
@click.pass_context
@guarded
def loop(ctx, n, turns, out):
    """Write a rotation loop in the (e1, e2)-plane as a frame CSV."""
    out = _out(ctx, out)
    A = rotation_loop(n, turns)
    save_frame_csv(A.times, A.frames, out)
    click.echo(out)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        rc = cli.main(args=argv, prog_name="nondeg", standalone_mode=False)
    except click.ClickException as e:
        e.show()
        return 3
    except click.exceptions.Abort:
        return 3
    return rc if isinstance(rc, int) else 0


if __name__ == "__main__":
    sys.exit(main())

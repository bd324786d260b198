"""Command line front end.

Exit codes: 0 success, 1 a verification check failed, 2 usage error,
3 validation error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .domain import Scene, SCENE_KEYS, map_set, parse_scene
from .errors import FiniteGapError, NumericalError, SceneError, ValidationError

CONFIG_KEYS = {"grid", "tol", "out", "comb", "verblunsky", "length"}
SUBCOMMANDS = ("comb", "invert-comb", "mfun", "s2j", "flow", "verify", "cmv-schur")


@dataclass
class SceneConfig:
    scene: Scene
    grid: int = 200
    tol: float | None = None
    out: str = "csv"
    length: float | None = None
    extra: dict = field(default_factory=dict)


BUNDLED = ("zero_gap", "one_gap", "two_gap")


def _bundled(path: str | None) -> str | None:
    if path is None:
        return "zero_gap"
    return path if path in BUNDLED and not Path(path).is_file() else None


def load_config(path: str | None, args) -> SceneConfig:
    name = _bundled(path)
    if name is not None:
        raw = json.loads(resources.files("finitegap").joinpath(f"scenes/{name}.json").read_text())
    else:
        raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise SceneError("scene must be a JSON object")
    unknown = set(raw) - SCENE_KEYS - CONFIG_KEYS
    if unknown:
        raise SceneError(f"unknown scene keys: {sorted(unknown)}", keys=sorted(unknown))
    scene = parse_scene({k: v for k, v in raw.items() if k in SCENE_KEYS})
    cfg = SceneConfig(scene, int(raw.get("grid", 200)), raw.get("tol"), raw.get("out", "csv"),
                      raw.get("length"), {k: raw[k] for k in ("comb", "verblunsky") if k in raw})
    if args.grid is not None:
        cfg.grid = args.grid
    if args.tol is not None:
        cfg.tol = args.tol
    if args.out is not None:
        cfg.out = args.out
    if cfg.out not in ("csv", "json"):
        raise SceneError("out must be 'csv' or 'json'")
    if cfg.grid < 2:
        raise SceneError("grid must be at least 2")
    return cfg


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if np.isnan(x):
        return "nan"
    if np.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x + 0.0, ".17g")  # no signed zeros


class Writer:
    """Emits tables as CSV (``#`` comment header) or JSON; optionally PNGs."""

    def __init__(self, outdir: Path, out: str, plots: bool):
        self.outdir, self.out, self.plots = outdir, out, plots
        self.written: list[Path] = []

    def table(self, name: str, header: list[str], rows: list[list], note: str = "",
              plot: dict | None = None):
        self.outdir.mkdir(parents=True, exist_ok=True)
        if self.out == "csv":
            path = self.outdir / f"{name}.csv"
            lines = [f"# {note}"] if note else []
            lines.append(",".join(header))
            lines += [",".join(fmt(v) for v in row) for row in rows]
            path.write_text("\n".join(lines) + "\n")
        else:
            path = self.outdir / f"{name}.json"
            doc = {"note": note, "columns": header,
                   "rows": [[float(fmt(v)) if fmt(v) not in ("nan", "inf", "-inf") else fmt(v)
                             for v in row] for row in rows]}
            path.write_text(json.dumps(doc, indent=1) + "\n")
        self.written.append(path)
        if self.plots and rows and plot is not None:
            from .plotting import plot_table

            self.written.append(plot_table(path, header, rows, **plot))

    def document(self, name: str, doc: dict):
        self.outdir.mkdir(parents=True, exist_ok=True)
        path = self.outdir / f"{name}.json"
        path.write_text(json.dumps(_jsonable(doc), indent=1, sort_keys=True) + "\n")
        self.written.append(path)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(fmt(obj)) if np.isfinite(obj) else fmt(obj)
    return obj


def _lam_grid(fgs, n: int) -> np.ndarray:
    hi = (fgs.right[-1] if fgs.g else -1.0) + 1.0
    return np.linspace(-2.0, hi, n)


def cmd_comb(cfg: SceneConfig, w: Writer) -> int:
    from .comb import comb_data, martin_map, theta_eval

    fgs = cfg.scene.fgs
    mm = martin_map(fgs) if cfg.tol is None else martin_map(fgs, cfg.tol)
    cd = comb_data(mm)
    rows = []
    for lam in _lam_grid(fgs, cfg.grid):
        th = theta_eval(mm, lam)
        rows.append([lam, th.real, th.imag])
    w.table("comb_trace", ["lambda", "re_theta", "im_theta"], rows,
            "boundary values from the upper half-plane; sqrt(R) > 0 right of E",
            plot={"x": 0, "title": "comb map on the real line"})
    w.table("comb_teeth", ["k", "critical_point", "omega", "height"],
            [[k, c, o, h] for k, (c, o, h) in
             enumerate(zip(mm.critical_points, cd.omegas, cd.heights))],
            "tooth k sits over gap k")
    return 0


def cmd_invert_comb(cfg: SceneConfig, w: Writer) -> int:
    from .comb import comb_of_set, set_from_comb
    from .domain import CombData

    raw = cfg.extra.get("comb")
    if raw is None:
        comb = comb_of_set(cfg.scene.fgs)
    else:
        if set(raw) - {"omegas", "heights"}:
            raise SceneError("comb needs exactly 'omegas' and 'heights'")
        comb = CombData(tuple(map(float, raw["omegas"])), tuple(map(float, raw["heights"])))
    fgs = set_from_comb(comb) if cfg.tol is None else set_from_comb(comb, cfg.tol)
    back = comb_of_set(fgs)
    res = max([0.0] + [abs(a - b) for a, b in zip(back.omegas + back.heights,
                                                   comb.omegas + comb.heights)])
    w.table("gaps", ["k", "left", "right"], [[k, a, b] for k, (a, b) in enumerate(fgs.gaps)],
            f"recovered gaps; comb residual {fmt(res)}")
    return 0


def cmd_mfun(cfg: SceneConfig, w: Writer) -> int:
    from .weyl import m_values

    fgs, div = cfg.scene.fgs, cfg.scene.divisor
    lam = _lam_grid(fgs, cfg.grid)
    mp = m_values("+", fgs, div, lam)
    mm = m_values("-", fgs, div, lam)
    rows = [[x, a.real, a.imag, b.real, b.imag] for x, a, b in zip(lam, mp, mm)]
    w.table("mfun", ["lambda", "re_m_plus", "im_m_plus", "re_m_minus", "im_m_minus"], rows,
            "boundary values m(lambda + i0); eps = +1 puts the pole in m_plus",
            plot={"x": 0, "title": "Weyl functions"})
    return 0


def cmd_s2j(cfg: SceneConfig, w: Writer) -> int:
    from .jacobi import extract_divisor, jacobi_from_context
    from .transform import coupling_a0, r_values, transform_context

    sc = cfg.scene
    ctx = transform_context(sc.fgs, sc.divisor, sc.cov.lambda_star)
    zset, zdiv = map_set(sc.cov, sc.fgs, sc.divisor)
    jac, meas = jacobi_from_context(ctx, zset)
    lo, hi = jac.window
    w.table("jacobi", ["n", "a_n", "b_n"],
            [[n, jac.a.get(n, float("nan")), jac.b[n]] for n in range(lo, hi + 1)],
            "a_n couples n-1 and n; a_0 couples -1 and 0",
            plot={"x": 0, "title": "Jacobi coefficients"})
    z = np.linspace(zset.outer[0], zset.outer[1], cfg.grid + 2)[1:-1]
    rp = r_values("+", ctx, z, boundary=True)
    rm = r_values("-", ctx, z, boundary=True)
    w.table("r_grid", ["z", "re_r_plus", "im_r_plus", "re_r_minus", "im_r_minus"],
            [[x, a.real, a.imag, b.real, b.imag] for x, a, b in zip(z, rp, rm)],
            "z = 1/(lambda - lambda_star); boundary values r(z + i0)")
    ex = extract_divisor(ctx, zset)
    w.document("s2j", {"a0": coupling_a0(ctx), "lambda_star": sc.cov.lambda_star,
                       "z_gaps": zset.gaps, "z_outer": zset.outer,
                       "mapped_divisor": {"points": zdiv.points, "signs": zdiv.signs},
                       "jacobi_divisor": {"points": ex.points, "signs": ex.signs},
                       "atoms_plus": meas["+"].atoms, "atoms_minus": meas["-"].atoms})
    return 0


def cmd_flow(cfg: SceneConfig, w: Writer) -> int:
    from .comb import abelian_basis, comb_of_set
    from .flow import FlowState, Trajectory, abel_phases, divisor_from_angles

    fgs, div = cfg.scene.fgs, cfg.scene.divisor
    length = cfg.length
    if length is None:
        length = 4 * np.pi / min(comb_of_set(fgs).omegas) if fgs.g else 10.0
    ells = np.linspace(0.0, float(length), cfg.grid)
    traj = Trajectory(fgs, FlowState(div), 0.0, float(length))
    basis = abelian_basis(fgs) if fgs.g else None
    thetas = traj.theta(ells)
    qs = traj.trace(ells)
    header = ["ell"] + [f"lambda_{k}" for k in range(fgs.g)] + [f"eps_{k}" for k in range(fgs.g)] \
        + [f"phi_{k}" for k in range(fgs.g)] + ["q"]
    rows = []
    for i, ell in enumerate(ells):
        d = divisor_from_angles(fgs, thetas[:, i])
        ph = abel_phases(fgs, basis, d).phases if fgs.g else ()
        rows.append([ell, *d.points, *d.signs, *ph, qs[i]])
    w.table("flow", header, rows,
            "divisor of q(. - ell); q column is the trace formula at ell, i.e. q(-ell)",
            plot={"x": 0, "ys": [len(header) - 1], "title": "trace-formula potential"})
    return 0


def cmd_verify(cfg: SceneConfig, w: Writer) -> int:
    from .verify import run_checks

    checks = run_checks(cfg.scene, grid=min(cfg.grid, 50) if cfg.grid else 50, tol=cfg.tol)
    ok = all(c.passed for c in checks)
    w.document("verify", {"all_passed": ok, "checks": [c.as_dict() for c in checks]})
    for c in checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name} value={fmt(c.value)} tol={fmt(c.tolerance)}")
    return 0 if ok else 1


def _parse_complex(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    return complex(float(v))


def cmd_cmv_schur(cfg: SceneConfig, w: Writer) -> int:
    from .cmv import VerblunskySeq, cmv_reflectionless_defect, schur_function

    raw = cfg.extra.get("verblunsky", {"constant": 0.0, "length": 400})
    n = int(raw.get("length", 400))
    if "constant" in raw:
        seq = VerblunskySeq.constant(_parse_complex(raw["constant"]), n)
    elif "plus" in raw and "minus" in raw:
        seq = VerblunskySeq(np.array([_parse_complex(v) for v in raw["plus"]]),
                            np.array([_parse_complex(v) for v in raw["minus"]]))
    else:
        raise SceneError("verblunsky needs 'constant' or both 'plus' and 'minus'")
    ang = np.linspace(0.0, 2 * np.pi, cfg.grid, endpoint=False)
    rep = cmv_reflectionless_defect(seq, ang)
    phi = np.exp(1j * ang) * (1 - 1e-3)
    sp = schur_function(seq, "+", phi, seq.window)
    sm = schur_function(seq, "-", phi, seq.window)
    w.table("cmv_schur", ["angle", "re_s_plus", "im_s_plus", "re_s_minus", "im_s_minus",
                          "defect", "flagged"],
            [[a, p.real, p.imag, m.real, m.imag, d, int(f)]
             for a, p, m, d, f in zip(ang, sp, sm, rep.defects, rep.flagged)],
            "s values at radius 1 - 1e-3; defect |conj(phi s_+) - s_-| radially extrapolated",
            plot={"x": 0, "ys": [5], "title": "reflectionless defect"})
    return 0


HANDLERS = {"comb": cmd_comb, "invert-comb": cmd_invert_comb, "mfun": cmd_mfun, "s2j": cmd_s2j,
            "flow": cmd_flow, "verify": cmd_verify, "cmv-schur": cmd_cmv_schur}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finitegap", description="Finite-gap spectral toolkit.")
    p.add_argument("command", choices=SUBCOMMANDS)
    p.add_argument("scene", nargs="?", default=None,
                   help="scene JSON file or a bundled name (zero_gap, one_gap, two_gap)")
    p.add_argument("--grid", type=int, default=None, help="number of grid points")
    p.add_argument("--tol", type=float, default=None, help="tolerance override")
    p.add_argument("--out", choices=("csv", "json"), default=None, help="table format")
    p.add_argument("--outdir", default="out", help="output directory")
    p.add_argument("--plots", action="store_true", help="also render PNG figures")
    return p


def _report(kind: str, exc: FiniteGapError | Exception) -> None:
    details = getattr(exc, "details", {})
    msg = {"error": kind, "type": type(exc).__name__, "message": str(exc),
           "details": _jsonable({k: (v if isinstance(v, (int, float, str, list, tuple, dict))
                                     else repr(v)) for k, v in details.items()})}
    print(json.dumps(msg, sort_keys=True), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if _bundled(args.scene) is None and not Path(args.scene).is_file():
        _report("usage", FileNotFoundError(f"scene file not found: {args.scene}"))
        return 2
    try:
        cfg = load_config(args.scene, args)
        writer = Writer(Path(args.outdir), cfg.out, args.plots)
        return HANDLERS[args.command](cfg, writer)
    except json.JSONDecodeError as exc:
        _report("validation", exc)
        return 3
    except ValidationError as exc:
        _report("validation", exc)
        return 3
    except NumericalError as exc:
        _report("numerical", exc)
        return 4


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()

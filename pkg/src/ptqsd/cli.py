"""Command-line front end: ``ptqsd {evolve,orth,map,brach,lindblad-compare}``.

Times are dimensionless (``Jt``) throughout.  Settings are resolved as
command-line flag > ``--config`` file (``key = value`` lines) > default.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import lindblad as lb
from .brachistochrone import BrachOpts, brach_curve
from .orthogonality import SolverFailure, SolverOpts, orth_time, region_map
from .pt_core import PTParams
from .states import bloch, candidate_pair, evolve, populations
from .tables import FORMATS, write_table

EXIT_CONFIG = 2
EXIT_SOLVER = 3

DEFAULTS = {
    "J": 1.0,
    "phi": 1.5 * math.pi,
    "theta": 1.3,
    "state": "psi1",
    "tmax": 1.5,
    "n": 151,
    "tol": 1e-10,
    "format": "csv",
    "out": None,
    "a_grid": "0:4:80",
    "theta_grid": "0.02:1.55:80",
    "thetas": 30,
    "theta_range": "0.05:1.5",
    "workers": 1,
    "lindblad": False,
    "rates": None,
    "jc": None,
}

FLOAT_KEYS = {"a", "J", "gamma", "theta", "phi", "tmax", "tol", "jc"}
INT_KEYS = {"n", "thetas", "workers"}


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"--{key.replace('_', '-')}: {message}")
        self.key = key


def read_config_file(path: str) -> dict:
    cfg = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc.strerror}") from None
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        cfg[key.lstrip("-").replace("-", "_")] = value
    return cfg


def _coerce(key: str, value):
    if value is None or not isinstance(value, str):
        return value
    try:
        if key in FLOAT_KEYS:
            return float(value)
        if key in INT_KEYS:
            return int(value)
    except ValueError:
        raise ConfigError(key, f"not a number: {value!r}") from None
    if key == "lindblad":
        return value.strip().lower() in ("1", "true", "yes", "on")
    return value


def resolve(args: argparse.Namespace) -> dict:
    given = {k: v for k, v in vars(args).items() if k not in ("command", "config", "handler")}
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(read_config_file(args.config))
    cfg.update(given)
    return {k: _coerce(k, v) for k, v in cfg.items()}


def parse_grid(key: str, spec: str) -> np.ndarray:
    """``start:stop:n`` (inclusive linspace) or a comma-separated list."""
    try:
        if ":" in spec:
            start, stop, n = spec.split(":")
            grid = np.linspace(float(start), float(stop), int(n))
        else:
            grid = np.array([float(s) for s in spec.split(",") if s.strip()])
    except ValueError:
        raise ConfigError(key, f"expected start:stop:n or a comma list, got {spec!r}") from None
    if grid.size == 0 or np.any(~np.isfinite(grid)):
        raise ConfigError(key, "grid is empty or not finite")
    if np.any(np.diff(grid) <= 0):
        raise ConfigError(key, "grid must be strictly increasing")
    return grid


def _pt_params(cfg: dict) -> PTParams:
    J = cfg["J"]
    if not (math.isfinite(J) and J > 0):
        raise ConfigError("J", f"must be positive, got {J}")
    a, gamma = cfg.get("a"), cfg.get("gamma")
    if a is not None and gamma is not None:
        raise ConfigError("a", "give either --a or --gamma, not both")
    if a is None and gamma is None:
        raise ConfigError("a", "required (or --gamma with --J)")
    if a is not None:
        if not (math.isfinite(a) and a >= 0):
            raise ConfigError("a", f"must be finite and >= 0, got {a}")
        return PTParams(J, a * J)
    if not (math.isfinite(gamma) and gamma >= 0):
        raise ConfigError("gamma", f"must be finite and >= 0, got {gamma}")
    return PTParams(J, gamma)


def _theta(cfg: dict) -> float:
    theta = cfg["theta"]
    if not (math.isfinite(theta) and 0 < theta <= math.pi / 2):
        raise ConfigError("theta", f"must lie in (0, pi/2] = (0, 1.5707963...], got {theta}")
    return theta


def _pair(cfg: dict):
    phi = cfg["phi"]
    if not math.isfinite(phi):
        raise ConfigError("phi", f"must be finite, got {phi}")
    return candidate_pair(_theta(cfg), phi)


def _initial_state(cfg: dict) -> np.ndarray:
    state = str(cfg["state"]).strip()
    if state in ("psi1", "psi2"):
        pair = _pair(cfg)
        return np.array(pair.psi1 if state == "psi1" else pair.psi2)
    try:
        amps = np.array([complex(s.strip().replace(" ", "")) for s in state.split(",")])
    except ValueError:
        raise ConfigError("state", f"expected psi1, psi2 or two complex amplitudes, got {state!r}") from None
    if amps.shape != (2,) or not np.any(amps):
        raise ConfigError("state", "explicit state needs two amplitudes, not both zero")
    return amps


def _time_grid(cfg: dict, J: float) -> np.ndarray:
    tmax, n = cfg["tmax"], cfg["n"]
    if not (math.isfinite(tmax) and tmax >= 0):
        raise ConfigError("tmax", f"must be finite and >= 0, got {tmax}")
    if n < 1:
        raise ConfigError("n", f"must be >= 1, got {n}")
    return np.linspace(0.0, tmax, n) / J


def _solver_opts(cfg: dict) -> SolverOpts:
    tol = cfg["tol"]
    if not (math.isfinite(tol) and tol > 0):
        raise ConfigError("tol", f"must be positive, got {tol}")
    return SolverOpts(tol_orth=tol)


def _lindblad_model(cfg: dict, p: PTParams) -> lb.LindbladModel:
    J = p.J
    if cfg["rates"] is None:
        ref = lb.reference_pts_model()
        rates = (ref.Gamma1 * J, ref.Gamma2 * J, ref.Gamma3 * J)
    else:
        try:
            rates = tuple(float(s) for s in str(cfg["rates"]).split(","))
        except ValueError:
            raise ConfigError("rates", f"expected G1,G2,G3, got {cfg['rates']!r}") from None
        if len(rates) != 3 or min(rates) < 0 or sum(rates) <= 0:
            raise ConfigError("rates", "need three nonnegative rates with positive sum")
    jc = cfg["jc"]
    if jc is None:
        jc = lb.jc_for_a(p.a, *rates, J)
    elif not (math.isfinite(jc) and jc >= 0):
        raise ConfigError("jc", f"must be finite and >= 0, got {jc}")
    return lb.build_ca40_model(*rates, jc, J)


def cmd_evolve(cfg: dict) -> list[dict]:
    p = _pt_params(cfg)
    s0 = _initial_state(cfg)
    t = _time_grid(cfg, p.J)
    pops = populations(p, s0, t)
    r = bloch(evolve(p, s0, t, "pt"))
    rows = []
    for k in range(len(t)):
        rows.append({
            "Jt": float(t[k] * p.J),
            "P_pt_zp": float(pops.P_pt_zp[k]),
            "P_pt_zm": float(pops.P_pt_zm[k]),
            "P_diss_zp": float(pops.P_diss_zp[k]),
            "P_diss_zm": float(pops.P_diss_zm[k]),
            "Pbar_zp": float(pops.Pbar_zp[k]),
            "Pbar_zm": float(pops.Pbar_zm[k]),
            "Pbar_yp": float(pops.Pbar_yp[k]),
            "bloch_x": float(r[k, 0]),
            "bloch_y": float(r[k, 1]),
            "bloch_z": float(r[k, 2]),
        })
    if cfg["lindblad"]:
        m = _lindblad_model(cfg, p)
        lp = lb.lind_populations(m, lb.integrate(m, lb.qubit_density_matrix(s0), t), t)
        for k, row in enumerate(rows):
            row.update({
                "Lind_P_zp": float(lp.P_zp[k]),
                "Lind_P_zm": float(lp.P_zm[k]),
                "Lind_Pbar_zp": float(lp.Pbar_zp[k]),
                "Lind_Pbar_zm": float(lp.Pbar_zm[k]),
                "Lind_Pbar_yp": float(lp.Pbar_yp[k]),
            })
    return rows


def cmd_orth(cfg: dict) -> list[dict]:
    p = _pt_params(cfg)
    r = orth_time(p, _pair(cfg), _solver_opts(cfg))
    c = r.certificate
    return [{
        "a": p.a,
        "theta": r.theta,
        "status": r.status.value,
        "Jt_orth": r.jt_orth,
        "sqrt_Jt_orth": math.sqrt(r.jt_orth) if r.found else math.nan,
        "overlap_residual": r.overlap_residual,
        "Pbar1_zp": c.Pbar1_zp if c else math.nan,
        "Pbar2_zm": c.Pbar2_zm if c else math.nan,
        "Pbar1_yp": c.Pbar1_yp if c else math.nan,
        "Pbar2_yp": c.Pbar2_yp if c else math.nan,
        "certificate_ok": c.passes() if c else False,
    }]


def _workers(cfg: dict) -> int:
    if cfg["workers"] < 1:
        raise ConfigError("workers", f"must be >= 1, got {cfg['workers']}")
    return cfg["workers"]


def cmd_map(cfg: dict) -> list[dict]:
    a_grid = parse_grid("a_grid", cfg["a_grid"])
    theta_grid = parse_grid("theta_grid", cfg["theta_grid"])
    if a_grid[0] < 0:
        raise ConfigError("a_grid", "a must be >= 0")
    if theta_grid[0] <= 0 or theta_grid[-1] >= math.pi / 2:
        raise ConfigError("theta_grid", "theta must lie inside (0, pi/2)")
    rmap = region_map(theta_grid, a_grid, _solver_opts(cfg), max_workers=_workers(cfg))
    return rmap.rows()


def cmd_brach(cfg: dict) -> list[dict]:
    if cfg.get("theta_grid_given"):
        thetas = parse_grid("theta_grid", cfg["theta_grid"])
    else:
        lo, hi = parse_grid("theta_range", cfg["theta_range"].replace(":", ","))
        if cfg["thetas"] < 1:
            raise ConfigError("thetas", f"must be >= 1, got {cfg['thetas']}")
        thetas = np.linspace(lo, hi, cfg["thetas"])
    if thetas[0] <= 0 or thetas[-1] >= math.pi / 2:
        raise ConfigError("theta_grid", "theta must lie inside (0, pi/2)")
    opts = BrachOpts(solver=_solver_opts(cfg))
    return [{
        "theta": r.theta,
        "a_opt": r.a_opt,
        "Jt_min": r.t_min,
        "regime": r.regime_at_opt.value,
        "unimodal": r.unimodal,
    } for r in brach_curve(thetas, opts, max_workers=_workers(cfg))]


def cmd_lindblad_compare(cfg: dict) -> list[dict]:
    p = _pt_params(cfg)
    pair = _pair(cfg)
    m = _lindblad_model(cfg, p)
    t = _time_grid(cfg, p.J)
    rows = [{"Jt": float(x * p.J)} for x in t]
    for label, psi in (("1", pair.psi1), ("2", pair.psi2)):
        lp = lb.lind_populations(m, lb.integrate(m, lb.qubit_density_matrix(psi), t), t)
        dp = populations(p, psi, t)
        for k, row in enumerate(rows):
            for obs in ("zp", "zm"):
                row[f"Pbar{label}_{obs}_diss"] = float(getattr(dp, f"Pbar_{obs}")[k])
                row[f"Pbar{label}_{obs}_lind"] = float(getattr(lp, f"Pbar_{obs}")[k])
    rep = lb.compare_two_level(m, pair, t * p.J, a=p.a, opts=_solver_opts(cfg))
    print(
        f"a={p.a:.6g} a_eff={lb.effective_gamma(m).a:.6g} sup|dPbar_z|={rep.sup_z:.3e} "
        f"Jt_orth lind={rep.jt_orth_lind:.6f} diss={rep.jt_orth_diss:.6f}",
        file=sys.stderr,
    )
    return rows


COMMANDS = {
    "evolve": cmd_evolve,
    "orth": cmd_orth,
    "map": cmd_map,
    "brach": cmd_brach,
    "lindblad-compare": cmd_lindblad_compare,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--a", type=float, help="dimensionless dissipation Gamma/J")
    common.add_argument("--J", type=float, help="coupling J (default 1)")
    common.add_argument("--gamma", type=float, help="dissipation rate Gamma, with --J")
    common.add_argument("--theta", type=float, help="half angle between candidates, (0, pi/2]")
    common.add_argument("--phi", type=float, help="relative phase (default 3pi/2)")
    common.add_argument("--tol", type=float, help="orthogonality tolerance on |delta - pi|")
    common.add_argument("--out", help="output file (default stdout)")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--workers", type=int, help="worker processes for map/brach")

    lind = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    lind.add_argument("--rates", help="Gamma1,Gamma2,Gamma3 in units of J's unit")
    lind.add_argument("--jc", type=float, help="dissipation-beam coupling (default: matches --a)")

    timing = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    timing.add_argument("--tmax", type=float, help="final Jt")
    timing.add_argument("--n", type=int, help="number of time points")

    parser = argparse.ArgumentParser(prog="ptqsd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", parents=[common, lind, timing], argument_default=argparse.SUPPRESS)
    p.add_argument("--state", help="psi1, psi2 or explicit amplitudes 'c_up,c_down'")
    p.add_argument("--lindblad", action="store_true", help="add master-equation columns")

    sub.add_parser("orth", parents=[common], argument_default=argparse.SUPPRESS)

    p = sub.add_parser("map", parents=[common], argument_default=argparse.SUPPRESS)
    p.add_argument("--a-grid", dest="a_grid", help="start:stop:n or comma list")
    p.add_argument("--theta-grid", dest="theta_grid", help="start:stop:n or comma list")

    p = sub.add_parser("brach", parents=[common], argument_default=argparse.SUPPRESS)
    p.add_argument("--thetas", type=int, help="number of theta points over --theta-range")
    p.add_argument("--theta-range", dest="theta_range", help="lo:hi inside (0, pi/2)")
    p.add_argument("--theta-grid", dest="theta_grid", help="explicit grid; overrides --thetas")

    sub.add_parser("lindblad-compare", parents=[common, lind, timing], argument_default=argparse.SUPPRESS)
    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        if args.command == "brach":
            cfg["theta_grid_given"] = "theta_grid" in vars(args)
        rows = COMMANDS[args.command](cfg)
        text = write_table(rows, cfg["format"], cfg["out"])
    except ConfigError as exc:
        print(f"ptqsd {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverFailure, lb.IntegrationError) as exc:
        print(f"ptqsd {args.command}: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if cfg["out"] is None:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()

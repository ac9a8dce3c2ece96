"""Command-line experiment runner.

Configs are INI files (see README).  Every experiment produces
``<experiment>.csv``, ``<experiment>.json`` and gnuplot-ready ``.dat`` files,
all tagged with the config hash.  Cases run in a process pool and rows are
written in sorted order, so outputs do not depend on ``--jobs``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .envelopes import (check_containment, crossing_time_tilde, estimate_constants, run_offset, solve_X)
from .fronts import (STALL_SPEED, extract_pulsating_front, measure_reverse_speed, measure_speed,
                     profile_error, run_front, speed_bound, width_stats, zeta_residual)
from .homowave import harmonic_mean, harmonic_mean_of, solve_frozen_wave, wave_family
from .medium import PeriodicMedium, closed_form_speed_function, medium_from_config, validate
from .pdesolver import Grid1D, SolverConfig, default_config
from .zeros import (SignWord, calibrate_band, checkpoint_run, is_subword, probe_initial_data, solve_stationary,
                    zero_monotonicity_report)

EXPERIMENTS = ("speed-sweep", "profile-sweep", "width-sweep", "sign-classify", "envelope-audit",
               "zeros-audit", "reverse-speed")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    media: Dict[str, dict]
    kind: str
    L_values: List[float]
    h: float = 0.05
    dt: Optional[float] = None
    snapshot_stride: int = 1
    domain_pad: float = 40.0
    out: str = "results"
    jobs: int = 1
    options: Dict[str, str] = field(default_factory=dict)
    digest: str = ""

    def solver_config(self, medium: PeriodicMedium) -> SolverConfig:
        cfg = default_config(medium, self.h, snapshot_stride=self.snapshot_stride)
        return cfg if self.dt is None else replace(cfg, dt=float(self.dt))

    def option(self, key: str, default: float) -> float:
        return float(self.options.get(key, default))


def _canonical(parser: configparser.ConfigParser) -> str:
    buf = io.StringIO()
    for name in sorted(parser.sections()):
        buf.write(f"[{name}]\n")
        for key in sorted(parser[name]):
            buf.write(f"{key}={parser[name][key].strip()}\n")
    return buf.getvalue()


def load_config(path, experiment: Optional[str] = None, out: Optional[str] = None,
                jobs: Optional[int] = None) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    if not parser.read(path):
        raise ConfigError(f"cannot read config {path}")
    media = {name: dict(parser[name]) for name in sorted(parser.sections())
             if name == "medium" or name.startswith("medium.")}
    if not media:
        raise ConfigError("config needs at least one [medium] section")
    for req in ("solver", "experiment"):
        if req not in parser:
            raise ConfigError(f"config is missing the [{req}] section")
    sol, exp = parser["solver"], parser["experiment"]
    kind = experiment or exp.get("kind")
    if kind not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {kind!r}; choose from {', '.join(EXPERIMENTS)}")
    Ls = [float(v) for v in exp.get("L", "").replace(",", " ").split()]
    if not Ls:
        raise ConfigError("experiment needs a non-empty L list")
    if min(Ls) < 4:
        raise ConfigError("L values must be at least 4")
    reserved = {"kind", "l", "out", "jobs"}
    cfg = ExperimentConfig(
        media=media, kind=kind, L_values=sorted(Ls), h=sol.getfloat("h", 0.05),
        dt=sol.getfloat("dt") if sol.get("dt", "").strip() else None,
        snapshot_stride=sol.getint("snapshot_stride", 1), domain_pad=sol.getfloat("domain_pad", 40.0),
        out=out or exp.get("out", "results"), jobs=jobs or exp.getint("jobs", 1),
        options={k: v for k, v in exp.items() if k not in reserved},
    )
    for L in cfg.L_values:
        if abs(round(L / cfg.h) * cfg.h - L) > 1e-9 * L:
            raise ConfigError(f"L={L} is not a multiple of h={cfg.h}")
    cfg.digest = hashlib.sha256(_canonical(parser).encode()).hexdigest()[:16]
    return cfg


# ---------------------------------------------------------------------------
# helpers


def frozen_speeds(medium: PeriodicMedium, n_y: int = 16) -> np.ndarray:
    cf = closed_form_speed_function(medium)
    ys = np.arange(n_y) / n_y
    if cf is not None:
        return np.asarray(cf(ys), dtype=float)
    return np.array([solve_frozen_wave(medium, y, tol=1e-9).c for y in ys])


def limit_speed_or_zero(medium: PeriodicMedium) -> float:
    """Harmonic mean of c(y), or 0 when c changes sign (stationary regime)."""
    cf = closed_form_speed_function(medium)
    speeds = frozen_speeds(medium)
    if not (np.all(speeds > 0) or np.all(speeds < 0)):
        return 0.0
    if cf is not None:
        return harmonic_mean_of(cf, 256).c_star
    return harmonic_mean(speeds)[0]


def expected_sign(medium: PeriodicMedium) -> str:
    s = frozen_speeds(medium)
    return "+" if np.all(s > 0) else "-" if np.all(s < 0) else "0"


def observed_sign(c: float, stalled: bool) -> str:
    if stalled or abs(c) <= STALL_SPEED:
        return "0"
    return "+" if c > 0 else "-"


def _require_a4(medium: PeriodicMedium):
    if not medium.a_is_constant or medium.delta0p is None:
        raise ConfigError("this experiment needs an a4 medium")


# ---------------------------------------------------------------------------
# per-case workers (top-level so they pickle)


def _case_speed(cfg: ExperimentConfig, name: str, medium: PeriodicMedium, L: float, extra) -> List[dict]:
    est = measure_speed(medium, L, config=cfg.solver_config(medium), h=cfg.h, pad=cfg.domain_pad)
    return [{"medium": name, "L": L, "c_L": est.c_L, "converged": est.converged, "stalled": est.stalled,
             "rel_spread": est.rel_spread}]


def _case_reverse(cfg, name, medium, L, extra):
    sc = cfg.solver_config(medium)
    fwd = measure_speed(medium, L, config=sc, h=cfg.h, pad=cfg.domain_pad)
    rev = measure_reverse_speed(medium, L, config=sc, h=cfg.h, pad=cfg.domain_pad)
    return [{"medium": name, "L": L, "c_L": fwd.c_L, "c_rev": rev.c_L,
             "converged": bool(fwd.converged and rev.converged),
             "sign_L": observed_sign(fwd.c_L, fwd.stalled), "sign_rev": observed_sign(rev.c_L, rev.stalled)}]


def _case_width(cfg, name, medium, L, extra):
    run = run_front(medium, L, h=cfg.h, config=cfg.solver_config(medium), pad=cfg.domain_pad, record=True)
    ws = width_stats(run.record, cfg.option("delta", 0.1))
    return [{"medium": name, "L": L, "c_L": run.speed.c_L, "space_diam": ws.max_space_diam,
             "time_diam": ws.max_time_diam, "min_dt_U": ws.min_dt_U}]


def _case_sign(cfg, name, medium, L, extra):
    est = measure_speed(medium, L, config=cfg.solver_config(medium), h=cfg.h, pad=cfg.domain_pad)
    exp = extra[name]
    obs = observed_sign(est.c_L, est.stalled)
    return [{"medium": name, "L": L, "c_L": est.c_L, "stalled": est.stalled, "expected": exp,
             "observed": obs, "pass": exp == obs}]


def _case_profile(cfg, name, medium, L, extra):
    _require_a4(medium)
    waves = extra[name]
    run = run_front(medium, L, h=cfg.h, config=cfg.solver_config(medium), pad=cfg.domain_pad, record=True)
    front = extract_pulsating_front(medium, L, run.record, run.speed.c_L)
    row = {"medium": name, "L": L, "c_L": run.speed.c_L,
           "profile_sup_error": profile_error(front, waves),
           "zeta_residual": zeta_residual(front, waves.c, A=cfg.option("zeta_window", 4.0)),
           "max_abs_zeta": float(np.max(np.abs(front.zeta)))}
    row["_dat"] = {f"profile_{name}_L{L:g}.dat": np.column_stack([front.y_grid * L, front.zeta])}
    return [row]


def _case_envelope(cfg, name, medium, L, extra):
    _require_a4(medium)
    waves = extra[name]
    eps = cfg.option("eps", 0.05)
    params = estimate_constants(medium, waves, eps)
    cfun = waves.c
    c_star = harmonic_mean_of(cfun, 256).c_star
    T_L = L / c_star
    traj = solve_X(cfun, 0.0, L, 2.0 * T_L + 1.0, c_star=c_star)
    pace1 = abs(float(traj(T_L)) - L)
    pace2 = abs(float(traj(2.0 * T_L)) - 2.0 * L)
    init = lambda x: waves.psi(x, 0.0)  # noqa: E731
    run = run_offset(medium, 0.0, L, init, 2.0 * T_L, h=cfg.h, pad=cfg.domain_pad)
    viol = check_containment(params, waves, traj, run)["max_violation"]
    fine = run_offset(medium, 0.0, L, init, 1.5 * T_L, h=cfg.h, pad=cfg.domain_pad,
                      travel=1.2 * L, snapshot_every=0.05, dt=cfg.option("crossing_dt_factor", 0.1) * cfg.h)
    T_tilde = crossing_time_tilde(fine, L)
    return [{"medium": name, "L": L, "eps": eps, "L1eps": params.L1eps, "max_violation": viol,
             "pace_err_1": pace1, "pace_err_2": pace2, "T_L": T_L, "T_tilde": T_tilde,
             "crossing_gap": T_tilde - T_L}]


def _case_zeros(cfg, name, medium, L, extra):
    n = cfg.option("half_length", 80.0)
    delta = min(cfg.option("delta", 0.05), medium.delta0)
    sc = cfg.solver_config(medium)
    stat = solve_stationary(medium, L, delta, n, cfg.h, config=sc)
    band = calibrate_band(medium, L, delta, n, cfg.h)
    grid = Grid1D.from_spacing(0.0, n, cfg.h)
    run_cfg = replace(stat.config, left_value=1.0, right_value=0.0)
    t_end = 0.5 * n / speed_bound(medium)
    comparators = [("decaying", stat.w, "+-")]
    b = medium.b(grid.x / L)
    if np.ptp(b) < 1e-12:
        comparators.append(("constant_b", np.full(grid.n, float(b[0])), None))
    rows = []
    for label, w, bound in comparators:
        times, values = checkpoint_run(medium, L, probe_initial_data(grid), grid, run_cfg, t_end, 20)
        rep = zero_monotonicity_report(times, values, w, band)
        term = rep.terminal
        if bound is not None:
            term_ok = is_subword(term, SignWord.parse(bound))
        else:
            term_ok = term.z <= 1 or str(term) == "+-+"
        rows.append({"medium": name, "L": L, "comparator": label, "band": band,
                     "z_initial": rep.words[0].z, "z_terminal": term.z, "terminal_word": str(term),
                     "nonincreasing": rep.z_nonincreasing, "subword_chain": rep.subword_chain,
                     "terminal_ok": bool(term_ok), "decay_bound_ok": stat.decay_violation() <= 0.0,
                     "pass": bool(rep.z_nonincreasing and rep.subword_chain and term_ok
                                  and stat.decay_violation() <= 0.0)})
    return rows


WORKERS = {"speed-sweep": _case_speed, "reverse-speed": _case_reverse, "width-sweep": _case_width,
           "sign-classify": _case_sign, "profile-sweep": _case_profile, "envelope-audit": _case_envelope,
           "zeros-audit": _case_zeros}


def _run_case(args) -> List[dict]:
    cfg, name, L, extra = args
    try:
        medium = medium_from_config(cfg.media[name])
        return WORKERS[cfg.kind](cfg, name, medium, L, extra)
    except Exception as exc:  # recorded per row; the sweep continues
        return [{"medium": name, "L": L, "error": f"{type(exc).__name__}: {exc}", "pass": False}]


# ---------------------------------------------------------------------------
# post-processing


def _per_medium(rows):
    groups: Dict[str, List[dict]] = {}
    for r in rows:
        groups.setdefault(r["medium"], []).append(r)
    return groups


def _finish_speed(cfg, rows, extra):
    for group in _per_medium(rows).values():
        prev = None
        for r in group:
            if "error" in r:
                continue
            c_star = extra[r["medium"]]
            r["c_star"] = c_star
            r["abs_error"] = abs(r["c_L"] - c_star)
            if c_star == 0.0:
                ok = r["abs_error"] <= STALL_SPEED
            else:
                small = r["abs_error"] <= 0.01 * abs(c_star)
                ok = r["converged"] and (prev is None or small or r["abs_error"] < prev)
            r["pass"] = bool(ok)
            prev = r["abs_error"]


def _finish_reverse(cfg, rows, extra):
    for r in rows:
        if "error" in r:
            continue
        c_star = extra[r["medium"]]
        r["c_star"] = c_star
        r["rel_error_L"] = abs(r["c_L"] - c_star) / abs(c_star) if c_star else abs(r["c_L"])
        r["rel_error_rev"] = abs(r["c_rev"] - c_star) / abs(c_star) if c_star else abs(r["c_rev"])
        r["pass"] = bool(r["converged"] or r["sign_L"] == "0") and r["sign_L"] == r["sign_rev"]


def _finish_width(cfg, rows, extra):
    factor = cfg.option("band_factor", 2.0)
    for group in _per_medium(rows).values():
        good = [r for r in group if "error" not in r]
        if not good:
            continue
        sd = [r["space_diam"] for r in good]
        td = [r["time_diam"] for r in good]
        in_band = max(sd) <= factor * min(sd) and max(td) <= factor * min(td)
        for r in good:
            r["within_band"] = bool(in_band)
            r["pass"] = bool(in_band and r["min_dt_U"] > 0)


def _finish_decreasing(keys):
    def finish(cfg, rows, extra):
        for group in _per_medium(rows).values():
            prev = None
            for r in group:
                if "error" in r:
                    continue
                vals = [r[k] for k in keys]
                ok = all(np.isfinite(vals))
                if prev is not None:
                    ok = ok and all(v < p for v, p in zip(vals, prev))
                r["decreasing"] = bool(ok)
                r["pass"] = bool(ok)
                prev = vals
    return finish


def _finish_envelope(cfg, rows, extra):
    tol_v = cfg.option("violation_tol", 5e-3)
    for group in _per_medium(rows).values():
        good = [r for r in group if "error" not in r]
        ref = abs(good[0]["crossing_gap"]) if good else np.inf
        for r in good:
            r["crossing_uniform"] = bool(abs(r["crossing_gap"]) <= 1.5 * ref)
            r["pass"] = bool(r["max_violation"] <= tol_v and r["pace_err_1"] <= 1e-6
                             and r["pace_err_2"] <= 1e-6 and r["crossing_uniform"])


FINISHERS = {"speed-sweep": _finish_speed, "reverse-speed": _finish_reverse, "width-sweep": _finish_width,
             "profile-sweep": _finish_decreasing(("profile_sup_error", "zeta_residual")),
             "envelope-audit": _finish_envelope}


def _prepare(cfg: ExperimentConfig):
    """Per-medium data shared by all L values."""
    out = {}
    for name, section in cfg.media.items():
        try:
            medium = medium_from_config(section)
            if cfg.kind in ("speed-sweep", "reverse-speed"):
                out[name] = limit_speed_or_zero(medium)
            elif cfg.kind == "sign-classify":
                out[name] = expected_sign(medium)
            elif cfg.kind in ("profile-sweep", "envelope-audit"):
                out[name] = wave_family(medium, n_y=int(cfg.option("n_y", 16)), jobs=cfg.jobs)
        except Exception:  # the per-case worker reports the failure
            out[name] = None
    return out


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        v = float(v)
    if isinstance(v, float) and not np.isfinite(v):
        return repr(v)
    return v


def write_outputs(cfg: ExperimentConfig, rows: List[dict]) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    dat_blocks = {}
    for r in rows:
        dat_blocks.update(r.pop("_dat", {}))
    prov = {"config_hash": cfg.digest, "h": cfg.h, "dt": "auto" if cfg.dt is None else cfg.dt}
    keys: List[str] = []
    for r in rows:
        keys += [k for k in r if k not in keys]
    keys += list(prov)
    with open(out / f"{cfg.kind}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(keys)
        for r in rows:
            full = {**r, **prov}
            w.writerow([_fmt(full.get(k, "")) for k in keys])
    doc = {"experiment": cfg.kind, **prov, "passed": all(r.get("pass", False) for r in rows),
           "rows": [{k: _jsonable(v) for k, v in r.items()} for r in rows]}
    (out / f"{cfg.kind}.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    numeric = [k for k in keys if k not in prov and all(isinstance(r.get(k), (int, float, np.floating))
                                                     and not isinstance(r.get(k), bool) for r in rows)]
    with open(out / f"{cfg.kind}.dat", "w") as fh:
        fh.write(f"# config_hash {cfg.digest}\n# medium {' '.join(numeric)}\n")
        for r in rows:
            fh.write(" ".join([str(r["medium"])] + [_fmt(r[k]) for k in numeric]) + "\n")
    for fname, arr in sorted(dat_blocks.items()):
        np.savetxt(out / fname, arr, header=f"config_hash {cfg.digest}")
    return out


def run_experiment(cfg: ExperimentConfig) -> Tuple[List[dict], bool]:
    extra = _prepare(cfg)
    cases = [(cfg, name, L, extra) for name in sorted(cfg.media) for L in cfg.L_values]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(_run_case, cases))
    else:
        results = [_run_case(c) for c in cases]
    rows = [r for block in results for r in block]
    rows.sort(key=lambda r: (r["medium"], r["L"], r.get("comparator", "")))
    finish = FINISHERS.get(cfg.kind)
    if finish is not None:
        finish(cfg, rows, extra)
    for r in rows:
        r.setdefault("pass", False)
    return rows, all(r["pass"] for r in rows)


# ---------------------------------------------------------------------------
# entry point


def _cmd_run(args) -> int:
    cfg = load_config(args.config, args.experiment, args.out, args.jobs)
    rows, ok = run_experiment(cfg)
    out = write_outputs(cfg, rows)
    failed = sum(1 for r in rows if not r["pass"])
    print(f"{cfg.kind}: {len(rows)} rows, {failed} failed -> {out}")
    return 0 if ok else 1


def _cmd_validate(args) -> int:
    parser = configparser.ConfigParser()
    if not parser.read(args.config):
        raise ConfigError(f"cannot read config {args.config}")
    names = [n for n in sorted(parser.sections()) if n == "medium" or n.startswith("medium.")]
    if not names:
        raise ConfigError("config needs at least one [medium] section")
    ok = True
    for name in names:
        rep = validate(medium_from_config(dict(parser[name])))
        ok &= rep.bistable
        print(json.dumps({"medium": name, "bistable": rep.bistable, "zeros_ok": rep.zeros_ok,
                          "margins_ok": rep.margins_ok, "positive_mean": rep.positive_mean,
                          "constant_diffusion": rep.constant_diffusion,
                          "flat_near_states": rep.flat_near_states,
                          "gamma0": rep.estimated_gamma0, "delta0": rep.estimated_delta0,
                          "mean_reaction_range": list(rep.mean_reaction_range)}))
    return 0 if ok else 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="pulsefront", description="Pulsating front experiments.")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run an experiment from a config file")
    r.add_argument("config")
    r.add_argument("--experiment", choices=EXPERIMENTS)
    r.add_argument("--out")
    r.add_argument("--jobs", type=int)
    r.set_defaults(func=_cmd_run)
    v = sub.add_parser("validate", help="validate the media of a config file")
    v.add_argument("config")
    v.set_defaults(func=_cmd_validate)
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

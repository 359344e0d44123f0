"""Batch front-end: census, verify, spectrum, cascade and wavelets.

Each subcommand writes a YAML report (and CSV samples where relevant) into
--out and exits 0 on success, 1 on a failed verdict and 2 on usage or
configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import platform
import sys
import warnings
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import __version__
from .builtins import BUILTINS, builtin, sec5_candidates
from .cascade import (duality_check, invariance_check, orthonormality_check, probe_points,
                      scaling_function)
from .errors import ConfigError, NonConvergent, NotUniformlyPositive
from .lattice import DilationMatrix, IntMatrix
from .symmetry import census_n2, group_closure, is_affiliated
from .torusfn import LaurentPoly
from .transfer import FilterSpec, analyze
from .waveletgen import (build_family, haar_alignment, measured_gram, polyphase,
                         spatial_samples, sufficiency_flag, symmetry_check, wavelet_q2)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunConfig:
    filter: object = "haar"
    n: Optional[int] = None
    A: Optional[list] = None
    H: Optional[list] = None
    w: Optional[list] = None
    name: Optional[str] = None
    depth: int = 30
    grid: int = 64
    bracket_radius: int = 64
    tail_tol: float = 1e-3
    phi_tol: float = 1e-4
    ortho_tol: float = 1e-6
    delta: float = 1e-6
    seed: int = 0
    max_entry: int = 3
    normalization: str = "paper"
    symmetry_convention: str = "minus"
    bracket_grid: Optional[int] = None
    measure_grid: Optional[int] = None
    samples: int = 33

    @classmethod
    def from_mapping(cls, data) -> "RunConfig":
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        known = {f.name for f in fields(cls)}
        extra = sorted(set(data) - known)
        if extra:
            raise ConfigError(f"unknown config keys: {extra}")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def validate(self):
        if isinstance(self.filter, str):
            if self.filter not in BUILTINS:
                raise ConfigError(f"unknown builtin filter {self.filter!r}")
            given = [k for k in ("n", "A", "H", "w") if getattr(self, k) is not None]
            if given:
                raise ConfigError(f"builtin filters fix {given}; remove these keys")
        elif isinstance(self.filter, list):
            if self.n is None or self.A is None:
                raise ConfigError("custom filters need n and A")
        else:
            raise ConfigError("filter must be a builtin name or a list of coefficient records")
        for k in ("bracket_grid", "measure_grid"):
            v = getattr(self, k)
            if v is not None and (not isinstance(v, int) or isinstance(v, bool) or v < 4):
                raise ConfigError(f"{k} must be an integer >= 4")
        for k in ("depth", "grid", "bracket_radius", "max_entry", "samples"):
            v = getattr(self, k)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{k} must be a positive integer")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed must be an integer")
        for k in ("tail_tol", "phi_tol", "ortho_tol", "delta"):
            v = getattr(self, k)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or v <= 0:
                raise ConfigError(f"{k} must be a positive number")
        if self.normalization not in ("paper", "conjugate"):
            raise ConfigError("normalization must be 'paper' or 'conjugate'")
        if self.symmetry_convention not in ("minus", "plus"):
            raise ConfigError("symmetry_convention must be 'minus' or 'plus'")

    def spec(self) -> FilterSpec:
        if isinstance(self.filter, str):
            return builtin(self.filter)
        try:
            m = LaurentPoly.from_records(self.filter, self.n)
            A = DilationMatrix.of(self.A)
            H = group_closure(self.H or [IntMatrix.identity(self.n).entries])
            w = np.ones(1) if self.w is None else np.asarray(self.w, dtype=float)
            return FilterSpec(m, A, H, w, self.name or "custom")
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    def group(self):
        if isinstance(self.filter, str):
            return builtin(self.filter).H, builtin(self.filter).A
        try:
            return (group_closure(self.H or [IntMatrix.identity(self.n).entries]),
                    DilationMatrix.of(self.A))
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- output

def clean(obj):
    """Plain Python data for YAML: numpy scalars, tuples and complex values."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    return obj


def versions() -> dict:
    return {"symwave": __version__, "numpy": np.__version__, "python": platform.python_version()}


def write_report(out: Path, name: str, report: dict) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    with open(path, "w") as fh:
        yaml.safe_dump(clean(report), fh, sort_keys=False, default_flow_style=None, width=100)
    return path


def write_csv(path: Path, x: np.ndarray, values: np.ndarray) -> None:
    x = np.asarray(x, dtype=float).reshape(len(values), -1)
    values = np.asarray(values, dtype=complex).ravel()
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow([f"x{i + 1}" for i in range(x.shape[1])] + ["re", "im"])
        for xi, v in zip(x, values):
            wr.writerow([f"{c:.17g}" for c in xi] + [f"{v.real:.17g}", f"{v.imag:.17g}"])


# ---------------------------------------------------------------- commands

def cmd_census(cfg: RunConfig, out: Path) -> int:
    res = census_n2(cfg.max_entry)
    write_report(out, "census.yaml", {"command": "census", "versions": versions(),
                                      "config": asdict(cfg), "census": res.as_dict()})
    return EXIT_OK if res.ok else EXIT_FAIL


def cmd_verify(cfg: RunConfig, out: Path) -> int:
    H, A = cfg.group()
    rep = is_affiliated(A.matrix, H)
    write_report(out, "verify.yaml", {
        "command": "verify", "versions": versions(), "config": asdict(cfg),
        "A": [list(r) for r in A.matrix.entries], "H_order": H.order,
        "H_structure": H.structure(), "affiliation": rep.as_dict()})
    return EXIT_OK if rep.verdict else EXIT_FAIL


def _q_mismatch(spec: FilterSpec) -> dict:
    m0 = complex(spec.m_prime(np.zeros((1, spec.n)))[0, 0, 0])
    out = {"m_prime_at_0": [m0.real, m0.imag], "sqrt_q": float(np.sqrt(spec.q)),
           "matches": bool(abs(m0 - np.sqrt(spec.q)) < 1e-12), "candidates": []}
    for cand in sec5_candidates():
        an = analyze(cand)
        out["candidates"].append({
            "name": cand.name,
            "A": [list(r) for r in cand.A.matrix.entries],
            "q": cand.q,
            "m_prime_at_0": float(np.real(cand.m_prime(np.zeros((1, 2)))[0, 0, 0])),
            "raw_unit_eigenvalue": bool(an.prime_report.verdicts.get("2_peripheral_is_1", False)),
            "fixed_point_error": an.fixed_error,
            "passes_conditions_1_to_5": an.passes,
        })
    passing = [c["name"] for c in out["candidates"] if c["passes_conditions_1_to_5"]]
    out["passing_configurations"] = passing
    return out


def _analysis(cfg: RunConfig):
    spec = cfg.spec()
    return spec, analyze(spec, convention=cfg.normalization)


def _failing(an) -> list:
    names = list(an.report.failing())
    if an.fixed_error:
        names.append(an.fixed_error)
    return names


def cmd_spectrum(cfg: RunConfig, out: Path) -> int:
    spec, an = _analysis(cfg)
    report = {"command": "spectrum", "versions": versions(), "config": asdict(cfg),
              "transfer": an.as_dict(), "failing_conditions": _failing(an)}
    if spec.name.startswith("paper-sec5"):
        report["q_mismatch"] = _q_mismatch(spec)
    write_report(out, "spectrum.yaml", report)
    return EXIT_OK if an.passes else EXIT_FAIL


def _cascade(cfg: RunConfig, spec, an, out: Path) -> tuple:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = scaling_function(spec, an.m_used, cfg.depth, spectral_ok=an.passes)
    rep = {"cascade": None, "orthonormality_error": None}
    try:
        N = cfg.bracket_grid or (cfg.grid if spec.n == 1 else 16)
        orthonormality_check(res, R=cfg.bracket_radius, N=N, tail_tol=cfg.tail_tol)
    except NonConvergent as exc:
        rep["orthonormality_error"] = str(exc)
    invariance_check(res, spec.H)
    if spec.n == 1:
        duality_check(res, R=cfg.bracket_radius)
    rep["cascade"] = res.as_dict()
    x = probe_points(spec.n, cfg.samples, 2.0)
    write_csv(out / "phi.csv", x, res.phi_scalar(x))
    return res, rep


def _cascade_ok(cfg, res, rep) -> bool:
    inv = max(res.invariance.values()) if res.invariance else 0.0
    return (rep["orthonormality_error"] is None and res.orthonormality_residual is not None
            and res.orthonormality_residual < cfg.phi_tol and inv < 1e-8)


def cmd_cascade(cfg: RunConfig, out: Path) -> int:
    spec, an = _analysis(cfg)
    out.mkdir(parents=True, exist_ok=True)
    res, rep = _cascade(cfg, spec, an, out)
    ok = an.passes and _cascade_ok(cfg, res, rep)
    write_report(out, "cascade.yaml", {
        "command": "cascade", "versions": versions(), "config": asdict(cfg),
        "spectral_conditions_passed": an.passes, "failing_conditions": _failing(an), **rep,
        "files": ["phi.csv"], "ok": ok})
    return EXIT_OK if ok else EXIT_FAIL


def _spatial_grid(n: int, count: int) -> np.ndarray:
    if n == 1:
        return np.linspace(-2.0, 1.0, count).reshape(-1, 1)
    ax = np.linspace(-1.5, 1.5, max(5, count // 4))
    g1, g2 = np.meshgrid(ax, ax, indexing="ij")
    return np.stack([g1.ravel(), g2.ravel()], axis=1)


def cmd_wavelets(cfg: RunConfig, out: Path) -> int:
    spec, an = _analysis(cfg)
    out.mkdir(parents=True, exist_ok=True)
    res, crep = _cascade(cfg, spec, an, out)
    report = {"command": "wavelets", "versions": versions(), "config": asdict(cfg),
              "spectral_conditions_passed": an.passes, "failing_conditions": _failing(an), **crep,
              "sufficiency_flag_q_ge_n_over_2d_plus_1": sufficiency_flag(spec.n, spec.q, spec.d)}
    files = ["phi.csv"]
    if spec.d != 1:
        report["wavelets"] = {"error": "wavelet construction is implemented for d = 1"}
        write_report(out, "wavelets.yaml", report)
        return EXIT_FAIL
    poly = polyphase(an.m_used, spec.A, cfg.grid)
    report["polyphase"] = poly.as_dict()
    ok = an.passes and _cascade_ok(cfg, res, crep) and poly.unit_norm_defect() < cfg.ortho_tol
    try:
        fam = build_family(res, poly, spec.H, cfg.delta, cfg.seed)
    except NotUniformlyPositive as exc:
        report["wavelets"] = {"error": f"NotUniformlyPositive: {exc}"}
        write_report(out, "wavelets.yaml", report)
        return EXIT_FAIL
    sym = symmetry_check(fam, spec.H, convention=cfg.symmetry_convention)
    mg = cfg.measure_grid or (64 if spec.n == 1 else 8)
    try:
        measured_gram(fam, R=cfg.bracket_radius, N=mg, tail_tol=cfg.tail_tol)
    except NonConvergent as exc:
        fam.residuals["measured_error"] = str(exc)
    wrep = fam.as_dict()
    wrep["symmetry"] = sym
    ok = ok and fam.residuals["intrinsic_gram"] < cfg.ortho_tol
    ok = ok and (max(sym.values()) if sym else 0.0) < cfg.ortho_tol
    meas = fam.residuals.get("measured")
    ok = ok and meas is not None and meas["gram_residual"] < cfg.phi_tol
    if spec.q == 2:
        q2 = wavelet_q2(res, poly)
        q2sym = symmetry_check(q2, spec.H, convention=cfg.symmetry_convention)
        wrep["q2_formula"] = {"residuals": q2.residuals, "symmetry": q2sym}
    x = probe_points(spec.n, cfg.samples, 2.0)
    vals = fam.psi(x)
    t = _spatial_grid(spec.n, cfg.samples)
    box, quad = (2.0 ** 12, 2 ** 18 + 1) if spec.n == 1 else (8.0, 257)
    spatial = []
    for i, k in enumerate(fam.labels):
        write_csv(out / f"psi_{k}.csv", x, vals[:, i])
        ss = spatial_samples(lambda y, i=i: fam.psi(y)[:, i], spec.n, t, box, quad)
        write_csv(out / f"psi_spatial_{k}.csv", t, ss.values[:, 0])
        files += [f"psi_{k}.csv", f"psi_spatial_{k}.csv"]
        spatial.append({"label": k, **ss.as_dict()})
    wrep["spatial_samples"] = spatial
    if spec.name == "haar":
        tt = np.arange(-2.0, 1.0001, 0.25)
        wrep["haar_alignment"] = haar_alignment(
            lambda q: spatial_samples(lambda y: fam.psi(y)[:, 0], 1, q, 2.0 ** 14, 2 ** 20 + 1).values[:, 0], tt)
        ok = ok and wrep["haar_alignment"]["residual"] < 1e-3
    report["wavelets"] = wrep
    report["files"] = files
    report["ok"] = ok
    write_report(out, "wavelets.yaml", report)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "census": cmd_census,
    "verify": cmd_verify,
    "spectrum": cmd_spectrum,
    "cascade": cmd_cascade,
    "wavelets": cmd_wavelets,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="symwave", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="YAML run configuration")
    p.add_argument("--out", type=Path, default=Path("symwave-out"), help="output directory")
    p.add_argument("--depth", type=int, help="cascade depth K")
    p.add_argument("--grid", type=int, help="torus grid resolution N")
    p.add_argument("--bracket-radius", type=int, help="lattice-sum radius R")
    p.add_argument("--max-entry", type=int, help="census entry bound")
    p.add_argument("--seed", type=int, help="seed for the frame recombination search")
    return p


def load_config(args) -> RunConfig:
    data: dict = {}
    if args.config is not None:
        try:
            with open(args.config) as fh:
                data = yaml.safe_load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"config is not valid YAML: {exc}") from exc
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
    for flag, key in (("depth", "depth"), ("grid", "grid"), ("bracket_radius", "bracket_radius"),
                      ("max_entry", "max_entry"), ("seed", "seed")):
        v = getattr(args, flag)
        if v is not None:
            data[key] = v
    try:
        return RunConfig.from_mapping(data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = load_config(args)
        return COMMANDS[args.command](cfg, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

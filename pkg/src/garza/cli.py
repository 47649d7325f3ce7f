"""Command-line front end.

Exit codes: 0 definite verdict or success, 1 failure (FAIL verdict, an
indefinite comparison, a refused certificate or bad input), 2 indeterminate.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .chebyshev import ChainBreakdown, SamplerConfig, Verdict, WronskianChain, check_chebyshev
from .improve import (DEFAULT_GRID, TOL_MOM, TOL_PSD, CaseTag, CertificateError, Direction,
                      improve_design, is_admissible_candidate)
from .io import ConfigError, load_design, load_model
from .matrices import criterion, difference_eigenvalues, info_matrix, loewner_compare, Loewner
from .models import CATALOG, check_lemma_4_1, cleared_system

EXIT_OK, EXIT_FAIL, EXIT_INDETERMINATE = 0, 1, 2


@dataclass
class RunConfig:
    command: str
    model: Optional[Path] = None
    design: Optional[Path] = None
    design2: Optional[Path] = None
    direction: str = "auto"
    grid: int = DEFAULT_GRID
    seed: int = 0
    tol_mom: float = TOL_MOM
    tol_psd: float = TOL_PSD
    out: Optional[Path] = None
    csv: Optional[Path] = None

    def __post_init__(self):
        for name in ("model", "design", "design2", "out", "csv"):
            val = getattr(self, name)
            if val is not None:
                setattr(self, name, Path(val))
        for name in ("model", "design", "design2"):
            path = getattr(self, name)
            if path is not None and not path.is_file():
                raise ConfigError(f"--{name}: no such file {path}")
        if self.tol_mom <= 0 or self.tol_psd <= 0:
            raise ConfigError("tolerances must be positive")
        if self.grid < 11:
            raise ConfigError("--grid must be at least 11")

    def require(self, *names):
        for name in names:
            if getattr(self, name) is None:
                raise ConfigError(f"{self.command} needs --{name}")


def _emit(cfg: RunConfig, payload: dict) -> None:
    text = json.dumps(payload, indent=2, ensure_ascii=False)
    if cfg.out is None:
        print(text)
    else:
        cfg.out.write_text(text + "\n", encoding="utf-8")


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _criteria(M) -> dict:
    return {"D": criterion(M, "D"), "A": criterion(M, "A")}


def cmd_check_cheb(cfg: RunConfig) -> int:
    cfg.require("model")
    model = load_model(cfg.model)
    report = check_chebyshev(model.psi, model.domain, SamplerConfig(seed=cfg.seed))
    payload = {"model": model.name, **report.to_json()}
    if model.extra.get("family") == "rational":
        cleared = check_chebyshev(cleared_system(model), model.domain, SamplerConfig(seed=cfg.seed))
        payload["cleared_system_verdict"] = cleared.verdict.value
        payload["root_prediction"] = check_lemma_4_1(model).value
    if cfg.csv is not None:
        x = model.domain.grid(201)
        try:
            F = WronskianChain(model.psi, model.domain).F(x)
        except (ChainBreakdown, ValueError):
            F = np.full_like(x, np.nan)
        _write_csv(cfg.csv, ["x", "F"], zip(x.tolist(), F.tolist()))
    _emit(cfg, payload)
    if report.verdict is Verdict.FAIL:
        return EXIT_FAIL
    return EXIT_OK if report.verdict.definite else EXIT_INDETERMINATE


def cmd_improve(cfg: RunConfig) -> int:
    cfg.require("model", "design")
    model = load_model(cfg.model)
    design = load_design(cfg.design, model.domain)
    cheb = check_chebyshev(model.psi, model.domain, SamplerConfig(seed=cfg.seed))
    direction = None if cfg.direction == "auto" else Direction(cfg.direction.upper())
    res = improve_design(design, model, direction, cheb, cfg.grid, cfg.tol_mom, cfg.tol_psd)
    payload = res.to_json()
    if model.layout is not None:
        payload["criteria_before"] = _criteria(info_matrix(design, model))
        payload["criteria_after"] = _criteria(info_matrix(res.improved, model))
    if cfg.csv is not None:
        rows = [("before", x, w) for x, w in zip(design.support.tolist(), design.weights.tolist())]
        rows += [("after", x, w) for x, w in zip(res.improved.support.tolist(), res.improved.weights.tolist())]
        _write_csv(cfg.csv, ["design", "support", "weight"], rows)
    _emit(cfg, payload)
    return EXIT_INDETERMINATE if res.case_tag is CaseTag.UNCERTIFIED else EXIT_OK


def cmd_admissible(cfg: RunConfig) -> int:
    cfg.require("model", "design")
    model = load_model(cfg.model)
    design = load_design(cfg.design, model.domain)
    cheb = check_chebyshev(model.psi, model.domain, SamplerConfig(seed=cfg.seed))
    if not cheb.verdict.definite:
        _emit(cfg, {"verdict": cheb.verdict.value, "status": None,
                    "error": "admissibility needs a definite Chebyshev verdict"})
        return EXIT_FAIL if cheb.verdict is Verdict.FAIL else EXIT_INDETERMINATE
    res = is_admissible_candidate(design, model, cheb, cfg.grid)
    _emit(cfg, {"verdict": cheb.verdict.value, **res.to_json()})
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    cfg.require("model", "design", "design2")
    model = load_model(cfg.model)
    d1 = load_design(cfg.design, model.domain)
    d2 = load_design(cfg.design2, model.domain)
    M1, M2 = info_matrix(d1, model), info_matrix(d2, model)
    verdict = loewner_compare(M1, M2)
    _emit(cfg, {"verdict": verdict.value, "relation": "M(design2) vs M(design)",
                "eigenvalues": difference_eigenvalues(M1, M2).tolist(),
                "criteria_design": _criteria(M1), "criteria_design2": _criteria(M2),
                "matrix_design": M1.to_json(), "matrix_design2": M2.to_json()})
    return EXIT_FAIL if verdict is Loewner.INDEFINITE else EXIT_OK


def cmd_catalog(cfg: RunConfig) -> int:
    _emit(cfg, {"models": CATALOG})
    return EXIT_OK


COMMANDS = {"check-cheb": cmd_check_cheb, "improve": cmd_improve, "admissible": cmd_admissible,
            "compare": cmd_compare, "catalog": cmd_catalog}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="garza", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--model", help="model JSON file")
    ap.add_argument("--design", help="design JSON file")
    ap.add_argument("--design2", help="second design JSON file (compare)")
    ap.add_argument("--direction", choices=["upper", "lower", "auto"], default="auto")
    ap.add_argument("--grid", type=int, default=DEFAULT_GRID, help="LP grid size")
    ap.add_argument("--seed", type=int, default=0, help="seed of the tuple sampler")
    ap.add_argument("--tol-mom", type=float, default=TOL_MOM)
    ap.add_argument("--tol-psd", type=float, default=TOL_PSD)
    ap.add_argument("--out", help="write the JSON report here instead of stdout")
    ap.add_argument("--csv", help="plot-ready CSV: support/weights (improve) or F(x) (check-cheb)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(args.command, args.model, args.design, args.design2, args.direction,
                        args.grid, args.seed, args.tol_mom, args.tol_psd, args.out, args.csv)
        return COMMANDS[cfg.command](cfg)
    except (ValueError, CertificateError) as exc:   # input, design and model errors are ValueErrors
        print(f"garza {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

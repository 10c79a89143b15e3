"""
Refinement sweeps over (gamma, N) and table output.

Rates are log2(e_{2h} / e_h) against the previous level of the same gamma.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .forms import DWDGForms, error_energy, error_l2
from .mesh import build_crisscross
from .ocp import OcpConfig, OcpSolution, pdas_solve
from .problems import ExampleSpec, get_example

CSV_HEADER = ("example", "k", "gamma", "N", "h", "dof_state", "dof_control",
              "err_y_energy", "rate_y", "err_p_energy", "rate_p", "err_u_l2", "rate_u",
              "pdas_iters")
DEFAULT_LEVELS = (1, 2, 4, 8, 16, 32, 64)
DEFAULT_GAMMAS = (-1.0, 0.0, 5.0)


class SweepError(RuntimeError):
    def __init__(self, gamma, N, cause):
        super().__init__(f"solve failed at gamma={gamma:g}, N={N}: {cause}")
        self.gamma = gamma
        self.N = N


@dataclass
class ConvergenceRecord:
    example: int
    k: int
    gamma: float
    N: int
    dof_state: int
    dof_control: int
    err_y_energy: float
    err_p_energy: float
    err_u_l2: float
    pdas_iters: int
    converged: bool = True
    kkt_residual: float = 0.0
    rate_y: Optional[float] = None
    rate_p: Optional[float] = None
    rate_u: Optional[float] = None
    # control error with the 3-point vertex rule, reported for comparison only
    err_u_l2_vertex: float = math.nan
    solution: Optional[OcpSolution] = field(default=None, repr=False, compare=False)

    @property
    def h(self) -> float:
        return 1.0 / (2 * self.N)


def _rate(coarse: float, fine: float) -> Optional[float]:
    if coarse > 0 and fine > 0:
        return math.log2(coarse / fine)
    return None


def _check_levels(levels: Sequence[int]):
    if not levels:
        raise ValueError("need at least one level")
    for a, b in zip(levels, levels[1:]):
        if b != 2 * a:
            raise ValueError(f"levels must double: got {a} then {b}")
    if levels[0] < 1:
        raise ValueError("levels must be positive")


def make_config(example: ExampleSpec, k: int, gamma: float, beta: Optional[float] = None,
                bounds: Optional[tuple] = None, tol: float = 1e-10,
                max_iter: int = 100) -> OcpConfig:
    u_a, u_b = bounds if bounds is not None else example.bounds
    return OcpConfig(y_d=example.y_d, beta=example.beta if beta is None else beta,
                     u_a=u_a, u_b=u_b, k=k, gamma=gamma, tol=tol, max_iter=max_iter,
                     f=example.f)


def solve_level(example: ExampleSpec, config: OcpConfig, N: int,
                forms: Optional[DWDGForms] = None, keep_solution: bool = False
                ) -> ConvergenceRecord:
    if forms is None:
        forms = DWDGForms.build(build_crisscross(N), config.gamma)
    try:
        sol = pdas_solve(config, forms=forms)
    except Exception as exc:  # report the failing level, keep the cause
        raise SweepError(config.gamma, N, exc) from exc
    return ConvergenceRecord(
        example=example.identifier,
        k=config.k,
        gamma=config.gamma,
        N=N,
        dof_state=sol.y.dofmap.ndof,
        dof_control=sol.u.dofmap.ndof,
        err_y_energy=error_energy(example.grad_y_bar, sol.y, forms.lifting, forms.penalty),
        err_p_energy=error_energy(example.grad_p_bar, sol.p, forms.lifting, forms.penalty),
        err_u_l2=error_l2(example.u_bar, sol.u),
        err_u_l2_vertex=error_l2(example.u_bar, sol.u, degree=2),
        pdas_iters=sol.iterations,
        converged=sol.converged,
        kkt_residual=sol.kkt_residual,
        solution=sol if keep_solution else None,
    )


def run_sweep(example, k: int, gammas: Iterable[float] = DEFAULT_GAMMAS,
              levels: Sequence[int] = DEFAULT_LEVELS, beta: Optional[float] = None,
              bounds: Optional[tuple] = None, tol: float = 1e-10, max_iter: int = 100,
              forms_cache: Optional[dict] = None, keep_solutions: bool = False
              ) -> list[ConvergenceRecord]:
    """One record per (gamma, N), sorted by gamma then N, with rates filled in.

    `forms_cache` maps (N, gamma) to assembled forms so that sweeps over
    both control degrees can share the factorizations.
    """
    if isinstance(example, int):
        example = get_example(example)
    levels = list(levels)
    _check_levels(levels)
    cache = {} if forms_cache is None else forms_cache
    records = []
    for gamma in sorted({float(g) for g in gammas}):
        cfg = make_config(example, k, gamma, beta, bounds, tol, max_iter)
        prev = None
        for N in levels:
            key = (N, gamma)
            if key not in cache:
                cache[key] = DWDGForms.build(build_crisscross(N), gamma)
            rec = solve_level(example, cfg, N, cache[key], keep_solutions)
            if prev is not None:
                rec.rate_y = _rate(prev.err_y_energy, rec.err_y_energy)
                rec.rate_p = _rate(prev.err_p_energy, rec.err_p_energy)
                rec.rate_u = _rate(prev.err_u_l2, rec.err_u_l2)
            records.append(rec)
            prev = rec
    return records


def _fmt_err(v: float) -> str:
    return f"{v:.2e}"


def _fmt_rate(v: Optional[float]) -> str:
    return "--" if v is None else f"{v:.2f}"


def _fmt_h(N: int) -> str:
    return f"1/{2 * N}"


def _csv_row(r: ConvergenceRecord) -> list[str]:
    return [str(r.example), str(r.k), f"{r.gamma:g}", str(r.N), f"{r.h:.6g}",
            str(r.dof_state), str(r.dof_control),
            _fmt_err(r.err_y_energy), _fmt_rate(r.rate_y),
            _fmt_err(r.err_p_energy), _fmt_rate(r.rate_p),
            _fmt_err(r.err_u_l2), _fmt_rate(r.rate_u), str(r.pdas_iters)]


_MD_QUANTITIES = (
    ("err_y_energy", "rate_y", "|||y - y_h|||"),
    ("err_p_energy", "rate_p", "|||p - p_h|||"),
    ("err_u_l2", "rate_u", "||u - u_h||"),
)


def _markdown(records: list[ConvergenceRecord]) -> str:
    gammas = sorted({r.gamma for r in records})
    levels = sorted({r.N for r in records})
    by_key = {(r.gamma, r.N): r for r in records}
    first = records[0]
    out = []
    for err_attr, rate_attr, title in _MD_QUANTITIES:
        dof_attr = "dof_control" if err_attr == "err_u_l2" else "dof_state"
        out.append(f"### Example {first.example}, k={first.k}: {title}")
        out.append("")
        head = ["h", "DOF"]
        for g in gammas:
            head += [f"gamma={g:g}", "rate"]
        out.append("| " + " | ".join(head) + " |")
        out.append("|" + "---|" * len(head))
        for N in levels:
            rows = [by_key.get((g, N)) for g in gammas]
            dof = next(getattr(r, dof_attr) for r in rows if r is not None)
            cells = [_fmt_h(N), str(dof)]
            for r in rows:
                if r is None:
                    cells += ["", ""]
                else:
                    cells += [_fmt_err(getattr(r, err_attr)), _fmt_rate(getattr(r, rate_attr))]
            out.append("| " + " | ".join(cells) + " |")
        out.append("")
    return "\n".join(out)


def emit_table(records: Sequence[ConvergenceRecord], fmt: str = "csv") -> str:
    """Render records as CSV (fixed header) or Markdown (one table per quantity)."""
    records = list(records)
    if not records:
        raise ValueError("no records to emit")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow(_csv_row(r))
        return buf.getvalue()
    if fmt in ("md", "markdown"):
        return _markdown(records)
    raise ValueError(f"unknown format {fmt!r}; use csv or md")


def parse_csv(text: str) -> list[dict]:
    """Inverse of the CSV output: numeric fields as numbers, `--` as None."""
    rows = []
    for row in csv.DictReader(io.StringIO(text)):
        parsed = {}
        for key, val in row.items():
            if val == "--":
                parsed[key] = None
            elif key in ("example", "k", "N", "dof_state", "dof_control", "pdas_iters"):
                parsed[key] = int(val)
            else:
                parsed[key] = float(val)
        rows.append(parsed)
    return rows

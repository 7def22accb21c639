"""Command-line front end: ``chiralrmt <command> [options]``.

Exit codes: 0 success, 1 usage / domain error, 2 numerical non-convergence,
3 failed selftest.  Output goes to ``--output`` (``-`` for stdout) or to a
default file name inside $CHIRALRMT_OUTPUT_DIR (current directory if unset).
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import shlex
import sys
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import trapezoid

from . import __version__
from .quadrature import QuadratureError, SingularityError

OUTPUT_DIR_ENV = "CHIRALRMT_OUTPUT_DIR"
COMMANDS = ("density", "mc-density", "compare", "poly", "kernel", "corr", "groupint", "selftest")
DEFAULT_FORMAT = {"compare": "json", "selftest": "csv"}

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_SELFTEST = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit with status 2
        raise UsageError(message)


# --- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    lo: float
    hi: float
    points: int

    @classmethod
    def parse(cls, text: str) -> "Grid":
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid must be min:max:points, got {text!r}")
        try:
            lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as e:
            raise UsageError(f"bad grid {text!r}: {e}") from None
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo < 0 or hi <= lo or n < 2:
            raise UsageError("grid needs 0 <= min < max and points >= 2")
        return cls(lo, hi, n)

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)

    def __str__(self) -> str:
        return f"{self.lo!r}:{self.hi!r}:{self.points}"


@dataclass(frozen=True)
class RunConfig:
    command: str
    N: int = 2
    mu: float = 0.5
    samples: int = 100_000
    bins: int = 50
    grid: Grid | None = None
    seed: int = 0
    workers: int = 1
    output_path: str | None = None
    format: str = "csv"
    lambda_max: float = 5.0
    j: int = 2
    xi: float = 0.0
    a: tuple[float, ...] = ()
    argv: tuple[str, ...] = field(default=(), compare=False)

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.N < 1:
            raise UsageError("--n must be >= 1")
        if not (0.0 <= self.mu <= 1.0) or not math.isfinite(self.mu):
            raise UsageError("--mu must lie in [0, 1]")
        if self.command in ("density", "compare", "kernel", "corr") and self.N >= 2 and not 0.0 < self.mu < 1.0:
            raise UsageError("analytic kernels need 0 < mu < 1 for N >= 2")
        if self.command in ("density", "compare", "kernel", "corr") and self.mu == 0.0:
            raise UsageError("analytic kernels need mu > 0")
        if self.samples < 1 or self.bins < 1 or self.workers < 1:
            raise UsageError("--samples, --bins and --workers must be >= 1")
        if self.command == "groupint" and self.samples < 1000:
            raise UsageError("groupint needs --samples >= 1000")
        if not 0 <= self.seed < 2**64:
            raise UsageError("--seed must be a 64-bit unsigned integer")
        if self.lambda_max <= 0:
            raise UsageError("--lambda-max must be positive")
        if self.format not in ("csv", "json", "svg"):
            raise UsageError("--format must be csv, json or svg")
        if self.command == "corr" and self.N < 2:
            raise UsageError("corr needs --n >= 2")
        if self.command == "poly" and not 0 <= self.j <= 16:
            raise UsageError("--j must lie in 0..16")
        if self.command == "groupint":
            a = self.a or default_masses(self.N)
            if len(a) != self.N or min(a) < 0 or len(set(a)) != len(a):
                raise UsageError("--a needs N distinct nonnegative values")


def default_masses(N: int) -> tuple[float, ...]:
    return tuple(round(0.4 + 0.35 * k, 10) for k in range(N))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chiralrmt", description="Finite-N spectral statistics of W = H1 + i mu H2.")
    p.add_argument("--version", action="version", version=f"chiralrmt {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "density": "analytic level density on a grid",
        "mc-density": "Monte Carlo histogram of the singular values",
        "compare": "analytic density vs Monte Carlo histogram with per-bin z-scores",
        "poly": "skew-orthogonal polynomials q_j and q~_j (coefficients, or values on --grid)",
        "kernel": "kernels K_N, G_N, W_N on a grid x grid",
        "corr": "two-point correlation R2 on a grid x grid",
        "groupint": "group integral: Pfaffian formula vs Haar Monte Carlo",
        "selftest": "run the built-in invariant checks",
    }
    for name in COMMANDS:
        s = sub.add_parser(name, help=helps[name])
        s.add_argument("--n", dest="N", type=int, default=4 if name in ("density", "mc-density", "compare") else 2)
        s.add_argument("--mu", type=float, default=0.5)
        s.add_argument("--format", choices=("csv", "json", "svg"), default=DEFAULT_FORMAT.get(name, "csv"))
        s.add_argument("--output", dest="output_path", default=None, help="output file, '-' for stdout")
        if name in ("density", "poly", "kernel", "corr"):
            default = {"density": "0:5:200", "poly": None, "kernel": "0.25:3:12", "corr": "0.25:3:12"}[name]
            s.add_argument("--grid", default=default, help="min:max:points, endpoints inclusive")
        if name in ("mc-density", "compare", "groupint"):
            s.add_argument("--samples", type=int, default=1_000_000 if name == "groupint" else 100_000)
            s.add_argument("--seed", type=int, default=0)
        if name in ("mc-density", "compare"):
            s.add_argument("--bins", type=int, default=50)
            s.add_argument("--workers", type=int, default=1)
            s.add_argument("--lambda-max", dest="lambda_max", type=float, default=5.0)
        if name == "poly":
            s.add_argument("--j", type=int, default=2)
        if name == "groupint":
            s.add_argument("--xi", type=float, default=0.0)
            s.add_argument("--a", default=None, help="comma-separated singular values of AB")
    return p


def parse_config(argv: Sequence[str]) -> RunConfig:
    ns = vars(build_parser().parse_args(list(argv)))
    grid = ns.pop("grid", None)
    a = ns.pop("a", None)
    try:
        avals = tuple(float(v) for v in a.split(",")) if a else ()
    except ValueError:
        raise UsageError(f"bad --a value {a!r}") from None
    if avals:
        ns["N"] = len(avals)  # --a fixes the matrix size
    cfg = RunConfig(grid=Grid.parse(grid) if grid else None, a=avals, argv=tuple(argv), **ns)
    cfg.validate()
    return cfg


# --- output --------------------------------------------------------------------

def provenance(cfg: RunConfig) -> dict:
    return {
        "command_line": shlex.join(("chiralrmt",) + cfg.argv),
        "version": __version__,
        "seed": cfg.seed if cfg.command in ("mc-density", "compare", "groupint") else None,
        "n": cfg.N,
        "mu": cfg.mu,
    }


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def render_csv(prov: dict, header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    for k, v in prov.items():
        buf.write(f"# {k}: {v}\n")
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(_fmt(v) for v in r) + "\n")
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        return float(v) if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def render_json(prov: dict, payload: dict) -> str:
    obj = {**prov, **payload}
    return json.dumps({k: _jsonable(v) for k, v in obj.items()}, indent=1) + "\n"


def render_svg(prov: dict, draw: Callable) -> str:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "chiralrmt", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(800 / 72, 600 / 72), dpi=72)
        draw(ax)
        ax.set_title(prov["command_line"], fontsize=9)
        buf = io.StringIO()
        desc = "; ".join(f"{k}={v}" for k, v in prov.items())
        fig.savefig(buf, format="svg", metadata={"Date": None, "Description": desc})
        plt.close(fig)
    return buf.getvalue()


@dataclass
class Table:
    header: list[str]
    columns: list[np.ndarray]
    extra: dict = field(default_factory=dict)
    draw: Callable | None = None

    def rows(self):
        return list(zip(*[np.asarray(c).tolist() for c in self.columns]))


def render(cfg: RunConfig, table: Table) -> str:
    prov = provenance(cfg)
    if cfg.format == "csv":
        return render_csv(prov, table.header, table.rows())
    if cfg.format == "json":
        payload = {h: np.asarray(c) for h, c in zip(table.header, table.columns)}
        payload.update(table.extra)
        return render_json(prov, payload)
    return render_svg(prov, table.draw or (lambda ax: ax.plot(table.columns[0], table.columns[1])))


def output_target(cfg: RunConfig) -> str:
    if cfg.output_path:
        return cfg.output_path
    name = f"{cfg.command}_n{cfg.N}_mu{cfg.mu:g}.{cfg.format}"
    return os.path.join(os.environ.get(OUTPUT_DIR_ENV, "."), name)


def write_output(cfg: RunConfig, text: str) -> str:
    target = output_target(cfg)
    if target == "-":
        sys.stdout.write(text)
        return target
    d = os.path.dirname(target)
    if d:
        os.makedirs(d, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return target


# --- commands --------------------------------------------------------------------

def _kernelset(cfg: RunConfig):
    from .ensemble import make_coupling
    from .kernels import KernelSet

    return KernelSet(cfg.N, make_coupling(cfg.mu))


def cmd_density(cfg: RunConfig) -> Table:
    x = cfg.grid.values()
    rho = np.asarray(_kernelset(cfg).level_density(x))
    return Table(["lambda", "density"], [x, rho],
                 extra={"integral_trapezoid": float(trapezoid(rho, x))},
                 draw=lambda ax: (ax.plot(x, rho), ax.set_xlabel("lambda"), ax.set_ylabel("density")))


def _histogram(cfg: RunConfig):
    from .montecarlo import histogram_density, sample_spectra

    spectra = sample_spectra(cfg.N, cfg.mu, cfg.samples, cfg.seed, workers=cfg.workers)
    return histogram_density(spectra, cfg.bins, (0.0, cfg.lambda_max))


def cmd_mc_density(cfg: RunConfig) -> Table:
    h = _histogram(cfg)

    def draw(ax):
        ax.errorbar(h.centers, h.density, yerr=h.std_error, fmt=".")
        ax.set_xlabel("lambda")
        ax.set_ylabel("density")

    return Table(["bin_center", "density", "std_error"], [h.centers, h.density, h.std_error],
                 extra={"samples": cfg.samples, "bins": cfg.bins}, draw=draw)


def cmd_compare(cfg: RunConfig) -> Table:
    from .montecarlo import compare_density

    ks = _kernelset(cfg)
    h = _histogram(cfg)
    cmp = compare_density(h, ks.level_density)
    passed = cmp.frac_within_3se >= 0.95 and cmp.max_abs_z <= 5.0 and cmp.chi2_dof <= 1.5
    fine = np.linspace(0.0, cfg.lambda_max, 400)

    def draw(ax):
        ax.errorbar(h.centers, h.density, yerr=h.std_error, fmt=".", label="Monte Carlo")
        ax.plot(fine, ks.level_density(fine), label="analytic")
        ax.set_xlabel("lambda")
        ax.legend()

    return Table(
        ["bin_center", "analytic", "histogram", "std_error", "z"],
        [cmp.centers, cmp.analytic, cmp.histogram, cmp.std_error, cmp.z],
        extra={"samples": cfg.samples, "bins": cfg.bins, "chi2_dof": cmp.chi2_dof,
               "frac_within_3se": cmp.frac_within_3se, "max_abs_z": cmp.max_abs_z, "passed": passed},
        draw=draw)


def cmd_poly(cfg: RunConfig) -> Table:
    from .ensemble import make_coupling
    from .polynomials import q, q_tilde

    c = make_coupling(cfg.mu)
    p, pt = q(cfg.j, c), q_tilde(cfg.j, c)
    extra = {"j": cfg.j}
    if cfg.grid is None:
        k = np.arange(cfg.j + 2)
        qc = np.append(p.coeffs, 0.0)
        return Table(["power", "q", "q_tilde"], [k, qc, pt.coeffs], extra=extra,
                     draw=lambda ax: (ax.plot(k, qc, "o-"), ax.plot(k, pt.coeffs, "s-")))
    x = cfg.grid.values()
    return Table(["lambda", "q", "q_tilde"], [x, p(x), pt(x)], extra=extra,
                 draw=lambda ax: (ax.plot(x, p(x)), ax.plot(x, pt(x))))


def _pairs(grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    x = grid.values()
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    return X1.ravel(), X2.ravel()


def _heatmap(grid: Grid, values: np.ndarray, label: str):
    def draw(ax):
        v = values.reshape(grid.points, grid.points)
        im = ax.imshow(v.T, origin="lower", extent=(grid.lo, grid.hi, grid.lo, grid.hi), aspect="auto")
        ax.figure.colorbar(im, ax=ax, label=label)
        ax.set_xlabel("lambda1")
        ax.set_ylabel("lambda2")
    return draw


def cmd_kernel(cfg: RunConfig) -> Table:
    ks = _kernelset(cfg)
    a, b = _pairs(cfg.grid)
    K, G, W = (np.asarray(f(a, b)) for f in (ks.K, ks.G, ks.W))
    return Table(["lambda1", "lambda2", "k", "g", "w"], [a, b, K, G, W], draw=_heatmap(cfg.grid, G, "G_N"))


def cmd_corr(cfg: RunConfig) -> Table:
    ks = _kernelset(cfg)
    a, b = _pairs(cfg.grid)
    r2 = np.array([ks.correlation([x, y]) for x, y in zip(a, b)])
    return Table(["lambda1", "lambda2", "r2"], [a, b, r2], draw=_heatmap(cfg.grid, r2, "R2"))


def cmd_groupint(cfg: RunConfig) -> Table:
    from .groupint import group_integral, mc_group_integral
    from .linalg import RngStream

    a = cfg.a or default_masses(cfg.N)
    exact = group_integral(list(a), cfg.xi)
    D = np.diag(a)
    mean, se = mc_group_integral(D, D, cfg.xi, cfg.samples, RngStream(cfg.seed))
    label = f"N={cfg.N};xi={cfg.xi:g};a=" + "/".join(f"{v:g}" for v in a)

    def draw(ax):
        ax.errorbar([1], [mean], yerr=[3 * se], fmt="o", label="Haar MC (3 SE)")
        ax.plot([1], [exact], "x", markersize=12, label="Pfaffian formula")
        ax.set_xticks([1], [label])
        ax.legend()

    return Table(["label", "analytic", "mc_mean", "mc_se"], [[label], [exact], [mean], [se]],
                 extra={"xi": cfg.xi, "z": (exact - mean) / se if se > 0 else 0.0}, draw=draw)


def cmd_selftest(cfg: RunConfig) -> Table:
    from .selftest import run_checks

    results = run_checks()
    names = [r.name for r in results]
    ok = [int(r.passed) for r in results]
    detail = [r.detail for r in results]
    return Table(["check", "passed", "detail"], [names, ok, detail],
                 extra={"all_passed": all(ok)},
                 draw=lambda ax: (ax.barh(names, ok), ax.set_xlim(0, 1)))


HANDLERS = {
    "density": cmd_density, "mc-density": cmd_mc_density, "compare": cmd_compare, "poly": cmd_poly,
    "kernel": cmd_kernel, "corr": cmd_corr, "groupint": cmd_groupint, "selftest": cmd_selftest,
}


def run(cfg: RunConfig) -> int:
    from .ensemble import CouplingDomainError, DegenerateEndpointError

    try:
        table = HANDLERS[cfg.command](cfg)
    except (QuadratureError, SingularityError, ArithmeticError) as e:
        print(f"chiralrmt: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CouplingDomainError, DegenerateEndpointError, ValueError) as e:
        print(f"chiralrmt: {e}", file=sys.stderr)
        return EXIT_USAGE
    target = write_output(cfg, render(cfg, table))
    if target != "-":
        print(f"wrote {target}", file=sys.stderr)
    if cfg.command == "selftest":
        for name, ok, detail in table.rows():
            print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}", file=sys.stderr)
        if not table.extra["all_passed"]:
            return EXIT_SELFTEST
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = parse_config(argv)
    except UsageError as e:
        print(f"chiralrmt: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

"""Seeded experiment runner.

Each run writes ``config.json`` and ``result.json`` (plus optional CSV/SVG)
into a fresh timestamped directory under ``--out``; ``--force`` writes into
``--out`` itself. Exit codes: 0 ok, 2 invalid config, 3 tolerance breach,
4 resource guard.
"""
from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from qegraphs.graph_core import Graph, cartesian_product, cycle_graph, hub_glue, random_regular, read_edge_list, write_edge_list
from qegraphs.greens import (
    finite_green,
    finite_green_source,
    im_bound_sweep,
    im_triangle_bound,
    product_density,
    product_density_integral,
    product_green,
    smoothed_product_density,
    tree_green_entry,
    truncated_tree_green,
)
from qegraphs.local_limits import (
    BallHistogram,
    BallSizeError,
    ball_distribution,
    bs_distance,
    bst_profile,
    injectivity_radius,
    limit_histogram_product_tree,
)
from qegraphs.quantum_ergodicity import (
    c4_localized_basis,
    complete_basis_containing,
    hub_localized_family,
    observable_hub,
    observable_product_c4,
    qe_report,
    tensor_basis,
)
from qegraphs.spectral import eig_sym, exp_report

EXIT_OK, EXIT_VALIDATION, EXIT_TOLERANCE, EXIT_GUARD = 0, 2, 3, 4
RHO_CAP = 8


class ValidationError(ValueError):
    pass


class ToleranceError(RuntimeError):
    pass


@dataclass
class ExperimentConfig:
    command: str
    n: int = 50
    d: int = 3
    seed: int = 1
    radius: int = 2
    z_re_min: float = -7.0
    z_re_max: float = 7.0
    z_im_min: float = 1e-3
    z_im_max: float = 2.0
    grid_points: int = 600
    trials: int = 20
    fiber: str = "c4"
    base: str = "random"
    family: str = "regular"
    edge: tuple[int, int] | None = None
    graph: str | None = None
    out: str = "runs"
    format: str = "json"
    force: bool = False

    def validate(self) -> None:
        if self.n < 1:
            raise ValidationError("--n must be positive")
        if self.d < 0:
            raise ValidationError("--d must be nonnegative")
        if self.radius < 0:
            raise ValidationError("--radius must be nonnegative")
        if self.z_re_min > self.z_re_max:
            raise ValidationError("--z-re-min exceeds --z-re-max")
        if not 0 < self.z_im_min <= self.z_im_max:
            raise ValidationError("need 0 < --z-im-min <= --z-im-max")
        if self.grid_points < 2:
            raise ValidationError("--grid-points must be >= 2")
        if self.trials < 1:
            raise ValidationError("--trials must be positive")
        if self.fiber not in ("c4", "point"):
            raise ValidationError("--fiber must be c4 or point")
        if self.format not in ("json", "csv", "svg"):
            raise ValidationError("--format must be json, csv or svg")
        if self.command in ("theorem2", "theorem4", "bslimit") or (self.command == "generate" and self.family != "cycle"):
            if (self.n * self.d) % 2 or self.d >= self.n:
                raise ValidationError(f"no simple {self.d}-regular graph on {self.n} vertices")
        if self.command == "theorem4" and (self.d % 2 or self.d < 8):
            raise ValidationError("theorem4 needs even d >= 8")
        if self.command == "bslimit" and self.radius > 3:
            raise BallSizeError("bslimit supports --radius <= 3")

    def as_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in dataclasses.asdict(self).items()}


# --- output -----------------------------------------------------------------

def _run_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    if cfg.force:
        out.mkdir(parents=True, exist_ok=True)
        return out
    stamp = _dt.datetime.now().strftime("%Y%m%dT%H%M%S")
    path = out / f"{cfg.command}-{stamp}"
    k = 1
    while path.exists():
        path = out / f"{cfg.command}-{stamp}-{k}"
        k += 1
    path.mkdir(parents=True)
    return path


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(f"not serializable: {type(o)}")


def svg_line_plot(x, y, width: int = 640, height: int = 400, xlabel: str = "lambda", ylabel: str = "density") -> str:
    x, y = np.asarray(x, float), np.asarray(y, float)
    pad = 40
    x0, x1 = float(x.min()), float(x.max())
    y1 = float(y.max()) or 1.0
    sx = lambda v: pad + (v - x0) / (x1 - x0) * (width - 2 * pad)
    sy = lambda v: height - pad - v / y1 * (height - 2 * pad)
    pts = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{pts}"/>\n'
        f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle">{xlabel} [{x0:g}, {x1:g}]</text>\n'
        f'<text x="12" y="{height / 2}" transform="rotate(-90 12 {height / 2})" text-anchor="middle">{ylabel}</text>\n'
        "</svg>\n"
    )


# --- helpers ----------------------------------------------------------------

def _fiber_graph(name: str) -> Graph:
    return cycle_graph(4) if name == "c4" else Graph(1, ((),))


def _fiber_spectrum(name: str):
    return c4_localized_basis() if name == "c4" else eig_sym(_fiber_graph(name))


def _random_simple_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    iu = np.triu_indices(n, 1)
    keep = rng.random(len(iu[0])) < p
    return Graph.from_edges(n, zip(iu[0][keep].tolist(), iu[1][keep].tolist()))


def _require(ok: bool, what: str) -> None:
    if not ok:
        raise ToleranceError(what)


# --- commands ---------------------------------------------------------------

def cmd_generate(cfg: ExperimentConfig) -> tuple[dict, dict]:
    if cfg.family == "regular":
        g = random_regular(cfg.n, cfg.d, cfg.seed)
    elif cfg.family == "cycle":
        g = cycle_graph(cfg.n)
    elif cfg.family == "product-c4":
        g = cartesian_product(random_regular(cfg.n, cfg.d, cfg.seed), cycle_graph(4))
    elif cfg.family == "hub":
        g = hub_glue(random_regular(cfg.n, cfg.d, cfg.seed), cfg.edge).graph
    else:
        raise ValidationError(f"unknown family {cfg.family}")
    result = {"vertices": g.n, "edges": g.num_edges, "regularity": g.regularity()}
    return result, {"graph.txt": write_edge_list(g)}


def cmd_spectrum(cfg: ExperimentConfig) -> tuple[dict, dict]:
    if cfg.graph:
        g = read_edge_list(Path(cfg.graph).read_text())
    else:
        g = random_regular(cfg.n, cfg.d, cfg.seed)
    s = eig_sym(g)
    files = {"spectrum.json": s.to_json() + "\n"}
    if cfg.format == "csv":
        files["vectors.csv"] = "\n".join(",".join(f"{x:.17g}" for x in row) for row in s.vectors) + "\n"
    result = {"eigenvalues": s.eigenvalues, "residual": s.residual}
    d = g.regularity()
    if d and g.n > 1 and g.is_connected():
        result["exp"] = exp_report(s, d).as_dict()
    return result, files


def cmd_theorem2(cfg: ExperimentConfig) -> tuple[dict, dict]:
    g = random_regular(cfg.n, cfg.d, cfg.seed)
    prod = cartesian_product(g, cycle_graph(4))
    s = eig_sym(g)
    basis = tensor_basis(s, c4_localized_basis())
    _require(basis.residual_against(prod.adjacency_matrix()) <= 1e-8, "tensor basis residual")
    _require(basis.gram_deviation() <= 1e-8, "tensor basis orthonormality")
    rep = qe_report(f"G_{cfg.n}xC4", basis, observable_product_c4(cfg.n), "tensor basis with localized C4 table", 0.5)
    exp_g = exp_report(s, cfg.d)
    exp_p = exp_report(eig_sym(prod), cfg.d + 2)
    predicted = min(cfg.d * exp_g.epsilon, 2) / (cfg.d + 2)
    bst = bst_profile(prod, 2)
    result = {
        "report": {"n": prod.n, "statistic": rep.statistic, "bound": 0.5, "diagonal_terms": rep.diagonal_terms},
        "exp_base": exp_g.as_dict(),
        "exp_product": exp_p.as_dict(),
        "exp_product_predicted_epsilon": predicted,
        "bst_profile_R2": bst,
    }
    _require(abs(rep.statistic - 0.5) <= 1e-9, f"statistic {rep.statistic} != 1/2")
    _require(exp_p.epsilon >= predicted - 1e-6, "product EXP parameter below prediction")
    _require(bst == 1.0, f"bst_profile {bst} != 1")
    return result, {}


def cmd_theorem4(cfg: ExperimentConfig) -> tuple[dict, dict]:
    n, d = cfg.n, cfg.d
    f = random_regular(n, d, cfg.seed)
    h = hub_glue(f, cfg.edge)
    sh = eig_sym(h.graph)
    fam = hub_localized_family(h, eig_sym(h.base))
    lam = complete_basis_containing(fam, sh)
    _require(lam.gram_deviation() <= 1e-8, "completed basis orthonormality")
    _require(lam.residual_against(h.graph.adjacency_matrix()) <= 1e-6, "completed basis residual")
    bound = n / ((d // 2) * n + 1)
    rep = qe_report(f"H_{n}", lam, observable_hub(h), "eigenbasis containing the hub-localized family", bound)
    ex = exp_report(sh, d)
    violations = []
    for k in range(h.copies):
        for i in range(n):
            x = h.offsets[k] + i
            rh, rf = injectivity_radius(h.graph, x, RHO_CAP), injectivity_radius(f, i, RHO_CAP)
            if rh < rf:
                violations.append([x, rh, rf])
    result = {
        "report": {"n": h.graph.n, "statistic": rep.statistic, "bound": bound, "diagonal_terms": rep.diagonal_terms},
        "deleted_edge": list(h.deleted_edge),
        "exp": ex.as_dict(),
        "lambda2_threshold": (1 - 4 / n) * d,
        "rho_samples": h.copies * n,
        "rho_violations": violations,
    }
    _require(rep.statistic >= bound - 1e-9, f"statistic {rep.statistic} below bound {bound}")
    _require(bound >= 1 / d, "bound below 1/d")
    _require(ex.lambda2 >= (1 - 4 / n) * d - 1e-6, "lambda2 below (1-4/n)d")
    _require(not violations, "injectivity radius decreased")
    return result, {}


def cmd_green_verify(cfg: ExperimentConfig) -> tuple[dict, dict]:
    rng = np.random.default_rng(cfg.seed)
    pairs = []
    for _ in range(cfg.trials):
        n1, n2 = rng.integers(1, 13, size=2)
        g1 = _random_simple_graph(int(n1), 0.4, rng)
        g2 = _random_simple_graph(int(n2), 0.4, rng)
        z = complex(rng.uniform(-3, 3), rng.uniform(max(cfg.z_im_min, 0.1), max(cfg.z_im_max, 0.1)))
        pairs.append((g1, g2, z))
    c4, c5 = cycle_graph(4), cycle_graph(5)
    pairs.insert(0, (c4, c5, 0.3 + 0.7j))
    worst = 0.0
    rows = []
    for g1, g2, z in pairs:
        pg = product_green(finite_green_source(g1), eig_sym(g2), z).matrix
        direct = finite_green(cartesian_product(g1, g2), z).matrix
        err = float(np.abs(pg - direct).max())
        worst = max(worst, err)
        rows.append({"n1": g1.n, "n2": g2.n, "z": z, "discrepancy": err})
    tree_rows = []
    for d in (3, 5):
        for z in (0.5 + 0.1j, 0.5 + 1j, 2 * math.sqrt(d - 1) + 1 + 0.1j):
            for k in range(5):
                closed = tree_green_entry(z, d, k)
                tree_rows.append({
                    "d": d, "z": z, "dist": k,
                    "depth20_error": abs(truncated_tree_green(z, d, 20, k) - closed),
                    "depth400_error": abs(truncated_tree_green(z, d, 400, k) - closed),
                })
    diag = tree_green_entry(1j, 3, 0)
    re = np.linspace(cfg.z_re_min, cfg.z_re_max, 41)
    im = np.geomspace(cfg.z_im_min, cfg.z_im_max, 8)
    zs = [complex(a, b) for a in re for b in im]
    spec = _fiber_spectrum(cfg.fiber)
    sweep = im_bound_sweep(cfg.d, spec, zs)
    tri = im_triangle_bound(cfg.d, spec, zs)
    result = {
        "product_formula": {"cases": rows, "max_discrepancy": worst},
        "tree_diagonal_d3_z_i": diag,
        "truncation_table": tree_rows,
        "sweep": {"max_im": sweep, "triangle_bound": tri, "grid": {"re": [cfg.z_re_min, cfg.z_re_max, 41], "im": [cfg.z_im_min, cfg.z_im_max, 8]}},
    }
    _require(worst <= 1e-8, f"product formula discrepancy {worst:.2e}")
    _require(abs(diag - 0.4j) <= 1e-10, "tree diagonal at z=i")
    _require(math.isfinite(sweep) and sweep <= tri + 1e-12, "Im sweep exceeds triangle bound")
    return result, {}


def cmd_density(cfg: ExperimentConfig) -> tuple[dict, dict]:
    spec = _fiber_spectrum(cfg.fiber)
    grid = np.linspace(cfg.z_re_min, cfg.z_re_max, cfg.grid_points)
    curve = product_density(cfg.d, spec, grid)
    smooth = smoothed_product_density(cfg.d, spec, grid, eta=1e-3)
    integral = product_density_integral(cfg.d, spec.eigenvalues)
    result = {
        "d": cfg.d,
        "fiber": cfg.fiber,
        "support": curve.support(),
        "integral": integral,
        "trapezoid_integral": curve.trapezoid_integral(),
        "max_deviation_from_resolvent_eta_1e-3": float(np.abs(curve.density - smooth.density).max()),
    }
    files = {"density.csv": curve.to_csv()}
    if cfg.format == "svg":
        files["density.svg"] = svg_line_plot(curve.grid, curve.density)
    _require(abs(integral - 1) <= 1e-6, f"density integral {integral}")
    return result, files


def cmd_bslimit(cfg: ExperimentConfig) -> tuple[dict, dict]:
    X = _fiber_graph(cfg.fiber)
    R = cfg.radius
    rows = []
    if cfg.base == "random":
        limit = limit_histogram_product_tree(cfg.d, X, R)
        for n in (cfg.n, 2 * cfg.n, 4 * cfg.n):
            g = random_regular(n, cfg.d, cfg.seed)
            h = ball_distribution(cartesian_product(g, X), R)
            rows.append({"n": n, "distance": bs_distance(h, limit), "bst_profile": bst_profile(g, R),
                         "classes": len(h.freqs)})
        ref = json.loads(limit.to_json())
    elif cfg.base == "cycle":
        big = ball_distribution(cartesian_product(cycle_graph(8 * cfg.n), X), R)
        for n in (cfg.n, 2 * cfg.n, 4 * cfg.n):
            h = ball_distribution(cartesian_product(cycle_graph(n), X), R)
            rows.append({"n": n, "distance": bs_distance(h, big), "classes": len(h.freqs)})
        ref = json.loads(big.to_json())
    else:
        raise ValidationError(f"unknown base {cfg.base}")
    result = {"R": R, "reference": ref, "trend": rows}
    if cfg.base == "random":
        for r in rows:
            _require(r["distance"] <= r["bst_profile"] + 1e-12, f"distance exceeds bst profile at n={r['n']}")
    return result, {}


COMMANDS = {
    "generate": cmd_generate,
    "spectrum": cmd_spectrum,
    "theorem2": cmd_theorem2,
    "theorem4": cmd_theorem4,
    "green-verify": cmd_green_verify,
    "density": cmd_density,
    "bslimit": cmd_bslimit,
}

DEFAULT_D = {"theorem4": 8, "density": 5}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=50)
    common.add_argument("--d", type=int, default=None)
    common.add_argument("--seed", type=int, default=1)
    common.add_argument("--radius", type=int, default=2)
    common.add_argument("--z-re-min", type=float, default=-7.0)
    common.add_argument("--z-re-max", type=float, default=7.0)
    common.add_argument("--z-im-min", type=float, default=1e-3)
    common.add_argument("--z-im-max", type=float, default=2.0)
    common.add_argument("--grid-points", type=int, default=600)
    common.add_argument("--trials", type=int, default=20)
    common.add_argument("--fiber", default="c4", help="c4 or point")
    common.add_argument("--base", default="random", help="bslimit base family: random or cycle")
    common.add_argument("--family", default="regular", help="generate: regular, cycle, product-c4, hub")
    common.add_argument("--edge", type=int, nargs=2, default=None, metavar=("U", "V"),
                        help="edge deleted by the hub construction")
    common.add_argument("--graph", default=None, help="edge-list file for spectrum")
    common.add_argument("--out", default="runs")
    common.add_argument("--format", default="json", help="json, csv or svg")
    common.add_argument("--force", action="store_true")
    parser = argparse.ArgumentParser(prog="qegraphs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fields = {k: v for k, v in vars(args).items()}
    if fields["d"] is None:
        fields["d"] = DEFAULT_D.get(args.command, 3)
    if fields["edge"] is not None:
        fields["edge"] = tuple(fields["edge"])
    cfg = ExperimentConfig(**fields)
    run_dir = None
    try:
        cfg.validate()
        run_dir = _run_dir(cfg)
        (run_dir / "config.json").write_text(_dump(cfg.as_dict()))
        result, files = COMMANDS[cfg.command](cfg)
    except BallSizeError as exc:
        return _fail(run_dir, cfg, EXIT_GUARD, "resource_guard", exc)
    except (ToleranceError, RuntimeError, np.linalg.LinAlgError) as exc:
        return _fail(run_dir, cfg, EXIT_TOLERANCE, "tolerance", exc)
    except ValueError as exc:
        return _fail(run_dir, cfg, EXIT_VALIDATION, "validation", exc)
    payload = {"config": cfg.as_dict(), "result": result,
               "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat()}
    (run_dir / "result.json").write_text(_dump(payload))
    for name, text in files.items():
        (run_dir / name).write_text(text)
    print(run_dir)
    return EXIT_OK


def _fail(run_dir, cfg, code, kind, exc) -> int:
    err = {"error": kind, "message": str(exc), "exit_code": code, "config": cfg.as_dict()}
    text = _dump(err)
    if run_dir is not None:
        (run_dir / "error.json").write_text(text)
    sys.stderr.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

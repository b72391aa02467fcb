"""Command-line interface: ``hmera <command> [options]``.

Every output file embeds the resolved configuration and the package version.
JSON is written with Python's shortest round-trip float formatting; CSV files
start with a ``# `` line holding the same metadata as JSON.

Exit codes: 0 success, 1 usage or configuration error, 2 tolerance failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import itertools
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import analysis as an
from . import network as nw
from . import superop as so
from . import tensors as tz
from .pauli import all_paulis, five_qubit_code, knill_laflamme_matrix
from .tiling import EP, VP, TilingGraph, build_tiling, layer_counts

EXIT_OK, EXIT_USAGE, EXIT_TOLERANCE = 0, 1, 2


class UsageError(Exception):
    """Invalid command line or configuration."""


@dataclass
class RunConfig:
    """Resolved parameters of one CLI run.

    Attributes:
        p: Polygon size.
        q: Polygons per vertex.
        layers: Layers beyond the central tile.
        theta: Default imperfect angle.
        theta_by_tile: Tile id ``"L<layer>T<pos>"`` -> angle.
        phi0: Top-tensor unperturbed angle.
        phi: Top-tensor per-leg angles.
        top_paulis: Top-tensor per-leg letters.
        alpha: Bulk qubit polar angle.
        beta: Bulk qubit azimuthal angle.
        ep_logical: Logical state of EP tiles.
        bulk: Tile id -> ``[alpha, beta]`` overrides.
        seed: Random seed.
        options: Command-specific options.
    """

    p: int = 5
    q: int = 4
    layers: int = 2
    theta: float = 0.3
    theta_by_tile: dict = field(default_factory=dict)
    phi0: float = 0.0
    phi: tuple = (0.0, 0.0, 0.0, 0.0, 0.0)
    top_paulis: str = "ZZZZZ"
    alpha: float = math.pi / 3
    beta: float = 0.0
    ep_logical: str = "00"
    bulk: dict = field(default_factory=dict)
    seed: int = 0
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        self.phi = tuple(float(x) for x in self.phi)
        if len(self.phi) != 5:
            raise UsageError("phi needs five angles")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise UsageError("seed must be a 64-bit unsigned integer")
        if self.layers < 0:
            raise UsageError("layers must be non-negative")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["phi"] = list(self.phi)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def tensor_params(self) -> tz.TensorParams:
        try:
            return tz.TensorParams(theta=self.theta, phi0=self.phi0, phi=self.phi, top_paulis=self.top_paulis)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc

    def bulk_config(self, g: TilingGraph, open_tiles=()) -> nw.BulkConfig:
        overrides = {an.parse_tile(g, k): tuple(v) for k, v in self.bulk.items()}
        return nw.BulkConfig(self.alpha, self.beta, self.ep_logical, overrides, frozenset(open_tiles))


# -- output helpers -------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def _meta(command: str, cfg: RunConfig) -> dict:
    return {"artifact": "hmera", "version": __version__, "command": command, "config": cfg.to_dict()}


def write_json(path, command: str, cfg: RunConfig, result) -> str:
    text = json.dumps(_jsonable({**_meta(command, cfg), "result": result}), indent=2, sort_keys=True)
    _emit(path, text + "\n")
    return text


def write_csv(path, command: str, cfg: RunConfig, header, rows) -> str:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_jsonable(_meta(command, cfg)), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    _emit(path, buf.getvalue())
    return buf.getvalue()


def _emit(path, text: str):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


# -- shared loaders ---------------------------------------------------------------------

def _graph(cfg: RunConfig, path) -> TilingGraph:
    if path:
        with open(path, encoding="utf-8") as fh:
            g = TilingGraph.from_json(fh.read())
        cfg.p, cfg.q, cfg.layers = g.p, g.q, g.n_layers
        return g
    try:
        return build_tiling(cfg.p, cfg.q, cfg.layers)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _network(cfg: RunConfig, g: TilingGraph, regular: bool = False, open_tiles=()) -> nw.NetworkInstance:
    theta = {an.parse_tile(g, k): float(v) for k, v in cfg.theta_by_tile.items()}
    return nw.build_network(g, cfg.tensor_params(), cfg.bulk_config(g, open_tiles), theta, regular)


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from exc


# -- commands ----------------------------------------------------------------------------

def cmd_tile(cfg: RunConfig, args) -> int:
    g = _graph(cfg, None)
    data = g.to_dict()
    data["layer_counts"] = layer_counts(g)
    write_json(args.out, "tile", cfg, data)
    return EXIT_OK


def cmd_build(cfg: RunConfig, args) -> int:
    g = _graph(cfg, args.graph)
    n = _network(cfg, g, regular=args.regular)
    write_json(args.out, "build", cfg, n.describe())
    return EXIT_OK


def _worst_subset(t: tz.DenseTensor, ell: int) -> float:
    return max(tz.isometry_deviation(t, list(sub)) for sub in itertools.combinations(t.labels, ell))


def verify_isometry(tol: float) -> dict:
    del tol
    out = {"perfect 2-isometry": _worst_subset(tz.perfect_tensor().fix("L", np.array([1.0, 0.0])), 2),
           "double perfect 2-isometry": _worst_subset(tz.double_perfect_tensor("00"), 2)}
    for theta in (0.1, 0.3, 0.7, 1.2):
        t = tz.imperfect_tensor(tz.TensorParams(theta=theta))
        out[f"imperfect theta={theta} 1-isometry"] = _worst_subset(t, 1)
    out["top tensor 1-isometry"] = _worst_subset(tz.double_top_tensor(tz.TensorParams(), ("0", "0")), 1)
    return out


def verify_kl(tol: float) -> dict:
    code = five_qubit_code()
    errs = [p for p in all_paulis(5) if p.weight <= 1]
    return {"[[5,1,3]] weight<=1": knill_laflamme_matrix(code, errs, atol=tol).max_deviation}


def verify_superop(tol: float) -> dict:
    out = {}
    devs = []
    for beta in np.linspace(0, 2 * np.pi, 16, endpoint=False)[1:]:
        ev = np.abs(so.perfect_superop(math.pi / 3, beta).eigenvalues())
        devs.append(max(0.0, float(ev[1]) - (1 - 1e-4)))
    out["perfect superop single unit eigenvalue"] = max(devs)
    worst = 0.0
    for theta in np.linspace(0.02, math.pi / 2 - 0.02, 8):
        for legs in ((2, 3), (3, 4)):
            worst = max(worst, float(so.imperfect_superop(theta, legs).image_norms()[1:].max()) - (1 - 1e-6))
    out["imperfect superop contraction"] = max(worst, 0.0)
    return out


SUITES = {"isometry": verify_isometry, "kl": verify_kl, "superop": verify_superop}


def cmd_verify(cfg: RunConfig, args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    checks = {}
    for name in names:
        for label, dev in SUITES[name](args.tol).items():
            checks[f"{name}: {label}"] = {"deviation": float(dev), "ok": bool(dev <= args.tol)}
    ok = all(c["ok"] for c in checks.values())
    write_json(args.out, "verify", cfg, {"suite": args.suite, "tolerance": args.tol, "ok": ok, "checks": checks})
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_rdm(cfg: RunConfig, args) -> int:
    g = _graph(cfg, args.graph)
    n = _network(cfg, g)
    region = _ints(args.region)
    try:
        rho = nw.reduced_density_matrix(n, region)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    res = rho.to_dict()
    res.update(rank=rho.rank(), purity=rho.purity(), entropy=rho.entropy())
    write_json(args.out, "rdm", cfg, res)
    return EXIT_OK


def cmd_superop(cfg: RunConfig, args) -> int:
    if args.kind == "perfect":
        rows = []
        for beta in beta_grid(args.beta_sweep):
            for ev in so.perfect_superop(cfg.alpha, beta).eigenvalues():
                rows.append([float(beta), float(ev.real), float(ev.imag)])
        write_csv(args.out, "superop", cfg, ["beta", "re", "im"], rows)
    elif args.kind == "imperfect":
        legs = tuple(_ints(args.legs))
        s = so.imperfect_superop(cfg.theta, legs)
        rows = [[lab, float(v)] for lab, v in zip(s.in_labels(), s.image_norms())]
        write_csv(args.out, "superop", cfg, ["input", "image_norm"], rows)
    else:
        spectra = so.panel_spectra(cfg.theta, cfg.alpha, cfg.beta)
        lam = {k: so.panel_lambda(k, cfg.theta, cfg.alpha, cfg.beta) for k in so.PANELS}
        avg = so.average_lambda(so.unconditional_probabilities(), spectra)
        write_json(args.out, "superop", cfg, {
            "panels": {str(k): {"transition": list(so.PANELS[k][0]), "lambda": v} for k, v in lam.items()},
            "lambda_by_transition": {f"{a}->{b}": v for (a, b), v in spectra.items()},
            "lambda_bar": avg.value, "delta": avg.delta, "predicted_exponent": avg.predicted_exponent,
            "lambda_definition": "panel 1: largest non-unit eigenvalue modulus; weight-changing panels: "
                                 "largest traceless singular value; 3->3: maximum over panels 6 and 7",
        })
    return EXIT_OK


def beta_grid(count: int) -> np.ndarray:
    """``count`` azimuthal angles strictly inside ``(0, 2 pi)``."""
    return 2 * np.pi * (np.arange(count) + 0.5) / count


def probs_result(cfg: RunConfig, samples: int, jobs: int) -> dict:
    table = so.unconditional_probabilities()
    g = build_tiling(cfg.p, cfg.q, cfg.layers)
    res = {"closed_form": table.to_dict()}
    if samples > 0:
        mc = so.sample_transitions(g, samples, cfg.seed, jobs=jobs)
        z = mc.z_scores(table.unconditional)
        res["monte_carlo"] = mc.to_dict()
        res["z_scores"] = {f"{a}->{b}": v for (a, b), v in z.items()}
    counts = layer_counts(g)
    if cfg.layers >= 3:
        res["graph_conditionals"] = so.graph_conditional_probabilities(counts, cfg.layers)
    return res


def cmd_probs(cfg: RunConfig, args) -> int:
    try:
        result = probs_result(cfg, args.samples, args.jobs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    write_json(args.out, "probs", cfg, result)
    return EXIT_OK


def _pairs(g: TilingGraph, spec: str, max_sep):
    if spec == "all-pairs":
        return an.well_separated_pairs(g, min_layers=0, max_sep=max_sep)
    if spec == "well-separated":
        return an.well_separated_pairs(g, min_layers=2, max_sep=max_sep)
    out = []
    for item in spec.split(";"):
        i, j = _ints(item)
        out.append((i, j))
    return out


def cmd_correlate(cfg: RunConfig, args) -> int:
    g = _graph(cfg, args.graph)
    n = _network(cfg, g, regular=args.regular)
    results = an.correlator_scan(n, _pairs(g, args.sites, args.max_sep), jobs=args.jobs)
    write_csv(args.out, "correlate", cfg, an.CSV_COLUMNS, [r.row() for r in results])
    return EXIT_OK


def cmd_push(cfg: RunConfig, args) -> int:
    g = _graph(cfg, args.graph)
    try:
        tile = an.parse_tile(g, args.bulk)
        n = _network(cfg, g, open_tiles=(tile,))
        res = an.push_operator(n, tile, args.op)
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc)) from exc
    out = res.to_dict()
    out["source_id"] = f"L{g.layers[tile]}T{g.positions[tile]}"
    write_json(args.out, "push", cfg, out)
    return EXIT_OK


def cmd_repro(cfg: RunConfig, args) -> int:
    what = args.figure
    if what == "fig3":
        cfg.alpha = math.pi / 3
        rows = []
        for beta in beta_grid(args.beta_sweep):
            for ev in so.perfect_superop(cfg.alpha, beta).eigenvalues():
                rows.append([float(beta), float(ev.real), float(ev.imag)])
        write_csv(args.out, "repro fig3", cfg, ["beta", "re", "im"], rows)
    elif what == "fig6":
        rows = []
        for theta in np.linspace(0.02, math.pi / 2 - 0.02, 32):
            for legs in ((2, 3), (3, 4), (4, 5)):
                norms = so.imperfect_superop(theta, legs).image_norms()[1:]
                rows.append([float(theta), f"{legs[0]}{legs[1]}", float(norms.max()), float(norms.mean())])
        write_csv(args.out, "repro fig6", cfg, ["theta", "legs", "max_norm", "mean_norm"], rows)
    elif what == "probs":
        cfg.layers = 12
        write_json(args.out, "repro probs", cfg, probs_result(cfg, args.samples, args.jobs))
    elif what in ("fig7", "fig8"):
        role = EP if what == "fig7" else VP
        cfg.layers = max(cfg.layers, 2 if role == EP else 3)
        g = build_tiling(cfg.p, cfg.q, cfg.layers)
        tile, region = nw.flat_spectrum_region(g, role)
        spectra = {}
        for theta in (0.0, cfg.theta):
            cfg_t = dataclasses.replace(cfg, theta=theta)
            rho = nw.reduced_density_matrix(_network(cfg_t, g), region)
            ev = rho.eigenvalues()
            spectra[str(theta)] = {"eigenvalues": ev, "rank": rho.rank()}
        write_json(args.out, f"repro {what}", cfg, {"tile": f"L{g.layers[tile]}T{g.positions[tile]}",
                                                    "region": region, "spectra": spectra})
    elif what == "tiling":
        g = build_tiling(cfg.p, cfg.q, cfg.layers)
        counts = layer_counts(g)
        rows = [[k, f, v, (f / v) if v else "", (f + v) / sum(counts[k - 1]) if k > 1 else ""]
                for k, (f, v) in enumerate(counts) if k > 0]
        write_csv(args.out, "repro tiling", cfg, ["layer", "ep", "vp", "ratio", "growth"], rows)
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--p", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hmera", description="Hyper-invariant tensor networks on the {5,4} tiling.")
    parser.add_argument("--version", action="version", version=f"hmera {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("tile", help="build a layered tiling and export it")
    _common(p)

    p = sub.add_parser("build", help="describe the tensor network on a tiling")
    _common(p)
    p.add_argument("--graph")
    p.add_argument("--regular", action="store_true")

    p = sub.add_parser("verify", help="run tolerance checks")
    _common(p)
    p.add_argument("--suite", choices=["isometry", "kl", "superop", "all"], default="all")
    p.add_argument("--tol", type=float, default=1e-10)

    p = sub.add_parser("rdm", help="boundary reduced density matrix")
    _common(p)
    p.add_argument("--graph")
    p.add_argument("--region", required=True)

    p = sub.add_parser("superop", help="superoperator spectra and norms")
    _common(p)
    p.add_argument("--kind", choices=["perfect", "imperfect", "panels"], default="perfect")
    p.add_argument("--beta-sweep", type=int, default=64)
    p.add_argument("--legs", default="2,3")

    p = sub.add_parser("probs", help="transition probabilities and Monte Carlo check")
    _common(p)
    p.add_argument("--samples", type=int, default=100000)

    p = sub.add_parser("correlate", help="connected two-point functions")
    _common(p)
    p.add_argument("--graph")
    p.add_argument("--sites", default="well-separated",
                   help="'all-pairs', 'well-separated' or 'i,j;k,l'")
    p.add_argument("--max-sep", type=int)
    p.add_argument("--regular", action="store_true")

    p = sub.add_parser("push", help="push a bulk logical operator to the boundary")
    _common(p)
    p.add_argument("--graph")
    p.add_argument("--bulk", required=True, help="tile id such as L2T3")
    p.add_argument("--op", default="Zbar")

    p = sub.add_parser("repro", help="regenerate a figure's data")
    _common(p)
    p.add_argument("figure", choices=["fig3", "fig6", "fig7", "fig8", "probs", "tiling"])
    p.add_argument("--beta-sweep", type=int, default=64)
    p.add_argument("--samples", type=int, default=100000)
    return parser


COMMANDS = {"tile": cmd_tile, "build": cmd_build, "verify": cmd_verify, "rdm": cmd_rdm,
            "superop": cmd_superop, "probs": cmd_probs, "correlate": cmd_correlate,
            "push": cmd_push, "repro": cmd_repro}

_CONFIG_FLAGS = ("p", "q", "layers", "theta", "alpha", "beta", "seed")


def resolve_config(args, environ=None) -> RunConfig:
    """Config file, then command-line flags, then ``HMERA_SEED``."""
    environ = os.environ if environ is None else environ
    data = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
    for name in _CONFIG_FLAGS:
        val = getattr(args, name, None)
        if val is not None:
            data[name] = val
    if "HMERA_SEED" in environ:
        try:
            data["seed"] = int(environ["HMERA_SEED"])
        except ValueError as exc:
            raise UsageError("HMERA_SEED must be an integer") from exc
    if args.command in ("tile", "probs") and "layers" not in data:
        data["layers"] = 12 if args.command == "probs" else 4
    try:
        return RunConfig.from_dict(data)
    except TypeError as exc:
        raise UsageError(str(exc)) from exc


def main(argv=None) -> int:
    """Entry point; returns the exit code."""
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("--jobs must be at least 1")
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        sys.stderr.write(json.dumps({"error": "usage", "message": str(exc)}) + "\n")
        return EXIT_USAGE
    except BrokenPipeError:
        # downstream reader closed early, e.g. ``| head``
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Batch front-end: config resolution, command dispatch, report emission.

Runs are described by a flat INI config (sections [run], [mesh], [potential],
[paths]) plus command-line flags that override file values.  Every output
file embeds the resolved config, the library version and the seed, and is
written atomically (temp file + rename), so a rerun with the same inputs is
byte-identical and safe to diff in golden tests.

Exit codes: 0 success, 1 numeric failure inside the pipeline, 2 config
error.  Matrices and vectors go to CSV with 17 significant digits,
structured reports to sorted-key JSON.
"""

import argparse
import configparser
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .chain import generator, limit_generator, lumped_rates, transition_matrix
from .mesh import MeshError, build_adaptive, build_uniform, min_clearance, t_max, to_table
from .paths import committors, eigvec_residual, well_process_rates
from .potential import example_potential, from_breakpoints, from_polynomial
from .spectral import charpoly_check, classify, eigenvalues, eigvec_analysis
from .stable import make_params

__all__ = ["RunConfig", "ConfigError", "main", "resolve_config",
           "cmd_spectrum", "cmd_limit", "cmd_sweep", "cmd_paths", "cmd_mesh_dump"]

_COMMANDS = ("spectrum", "limit", "sweep", "paths", "mesh-dump")
_CHARPOLY_LAMBDAS = (-0.05, -0.3, -0.8)


class ConfigError(ValueError):
    """Invalid run configuration; maps to exit code 2."""


@dataclass(frozen=True)
class RunConfig:
    alpha: float
    epsilons: tuple  # positive, sorted descending
    seed: int
    out: str
    mesh: tuple       # ("uniform", R, N, h) or ("adaptive", gamma)
    potential: tuple  # ("builtin", halfwidth) or ("poly", coeffs) or ("pw", path)
    commands: tuple
    horizon: float    # rescaled-time budget for the well-process run
    laplace_u: tuple  # u values for empirical Laplace transforms

    def as_dict(self):
        return {
            "alpha": self.alpha,
            "epsilons": list(self.epsilons),
            "seed": self.seed,
            "out": self.out,
            "mesh": list(self.mesh),
            "potential": [self.potential[0]] + [
                list(v) if isinstance(v, tuple) else v for v in self.potential[1:]],
            "commands": list(self.commands),
            "horizon": self.horizon,
            "laplace_u": list(self.laplace_u),
        }


def _parse_mesh(text):
    kind, _, rest = text.partition(":")
    try:
        if kind == "uniform":
            parts = rest.split(",")
            if len(parts) == 2:
                R, N = float(parts[0]), int(parts[1])
                return ("uniform", R, N, 2.0 * R / N)
            R, N, h = float(parts[0]), int(parts[1]), float(parts[2])
            return ("uniform", R, N, h)
        if kind == "adaptive":
            return ("adaptive", float(rest))
    except (ValueError, IndexError) as ex:
        raise ConfigError(f"cannot parse mesh argument {text!r}: {ex}") from ex
    raise ConfigError(f"unknown mesh kind {kind!r} (want uniform:R,N[,h] or adaptive:gamma)")


def _parse_potential(text):
    kind, _, rest = text.partition(":")
    if kind == "builtin":
        return ("builtin", float(rest) if rest else 1e-4)
    if kind == "poly":
        try:
            return ("poly", tuple(float(c) for c in rest.split(",")))
        except ValueError as ex:
            raise ConfigError(f"cannot parse polynomial coefficients {rest!r}") from ex
    if kind == "pw":
        if not rest:
            raise ConfigError("pw potential needs a table path: pw:FILE")
        return ("pw", rest)
    raise ConfigError(f"unknown potential kind {kind!r} (want builtin, poly:... or pw:FILE)")


def _floats(text):
    return tuple(float(t) for t in text.replace(",", " ").split())


def resolve_config(args):
    """Merge config file and flags into a validated RunConfig."""
    file_vals = {}
    if args.config:
        parser = configparser.ConfigParser()
        read = parser.read(args.config)
        if not read:
            raise ConfigError(f"config file not found: {args.config}")
        run = parser["run"] if parser.has_section("run") else {}
        for key in ("alpha", "epsilon", "seed", "out", "commands"):
            if key in run:
                file_vals[key] = run[key]
        if parser.has_section("mesh"):
            sec = parser["mesh"]
            kind = sec.get("kind", "uniform")
            if kind == "uniform":
                if "R" not in sec or "N" not in sec:
                    raise ConfigError("[mesh] kind=uniform needs R and N")
                spec = f"uniform:{sec['R']},{sec['N']}"
                if "h" in sec:
                    spec += f",{sec['h']}"
            elif kind == "adaptive":
                if "gamma" not in sec:
                    raise ConfigError("[mesh] kind=adaptive needs gamma")
                spec = f"adaptive:{sec['gamma']}"
            else:
                raise ConfigError(f"unknown [mesh] kind {kind!r}")
            file_vals["mesh"] = spec
        if parser.has_section("potential"):
            sec = parser["potential"]
            kind = sec.get("kind", "builtin")
            if kind == "builtin":
                spec = "builtin" + (f":{sec['halfwidth']}" if "halfwidth" in sec else "")
            elif kind == "poly":
                if "coeffs" not in sec:
                    raise ConfigError("[potential] kind=poly needs coeffs")
                spec = "poly:" + ",".join(sec["coeffs"].replace(",", " ").split())
            elif kind == "pw":
                if "table" not in sec:
                    raise ConfigError("[potential] kind=pw needs table")
                spec = "pw:" + sec["table"]
            else:
                raise ConfigError(f"unknown [potential] kind {kind!r}")
            file_vals["potential"] = spec
        if parser.has_section("paths"):
            sec = parser["paths"]
            if "horizon" in sec:
                file_vals["horizon"] = sec["horizon"]
            if "laplace_u" in sec:
                file_vals["laplace_u"] = sec["laplace_u"]

    def pick(flag, key, default):
        if flag is not None:
            return flag
        return file_vals.get(key, default)

    try:
        alpha = float(pick(args.alpha, "alpha", 1.8))
        eps_flag = tuple(e for chunk in (args.epsilon or []) for e in _floats(chunk)) or None
        epsilons = eps_flag if eps_flag is not None else _floats(str(file_vals.get("epsilon", "1e-5")))
        seed = int(pick(args.seed, "seed", 1))
        horizon = float(pick(None, "horizon", 1e3))
        laplace_u = _floats(str(file_vals.get("laplace_u", "")))
    except ValueError as ex:
        raise ConfigError(f"bad numeric value in config: {ex}") from ex
    out = pick(args.out, "out", "runs")
    mesh_spec = _parse_mesh(pick(args.mesh, "mesh", "uniform:5,203"))
    pot_spec = _parse_potential(pick(args.potential, "potential", "builtin"))
    commands = tuple(args.commands) or tuple(str(file_vals.get("commands", "")).replace(",", " ").split())

    if not 0.0 < alpha < 2.0:
        raise ConfigError(f"alpha must lie in (0, 2), got {alpha}")
    if not epsilons or any(e <= 0 for e in epsilons):
        raise ConfigError(f"epsilon values must be positive, got {epsilons}")
    epsilons = tuple(sorted(set(epsilons), reverse=True))
    if not commands:
        raise ConfigError("no command given (flag or 'commands' key in [run])")
    for c in commands:
        if c not in _COMMANDS:
            raise ConfigError(f"unknown command {c!r} (choose from {', '.join(_COMMANDS)})")
    if horizon <= 0:
        raise ConfigError(f"horizon must be positive, got {horizon}")
    return RunConfig(alpha=alpha, epsilons=epsilons, seed=seed, out=out, mesh=mesh_spec,
                     potential=pot_spec, commands=commands, horizon=horizon,
                     laplace_u=laplace_u)


def _build_potential(cfg):
    kind = cfg.potential[0]
    if kind == "builtin":
        return example_potential(halfwidth=cfg.potential[1])
    if kind == "poly":
        return from_polynomial(cfg.potential[1])
    table = np.loadtxt(cfg.potential[1])
    return from_breakpoints(table)


def _build_mesh(cfg, p):
    if cfg.mesh[0] == "uniform":
        _, R, N, h = cfg.mesh
        return build_uniform(p, R, N, h)
    return build_adaptive(p, cfg.mesh[1])


def _atomic_write(path, text):
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _emit_json(cfg, path, payload):
    body = {"version": __version__, "seed": cfg.seed, "config": cfg.as_dict()}
    body.update(payload)
    _atomic_write(path, json.dumps(body, indent=2, sort_keys=True) + "\n")


def _emit_csv(cfg, path, columns, rows, footer=()):
    lines = [f"# version={__version__} seed={cfg.seed}",
             "# config=" + json.dumps(cfg.as_dict(), sort_keys=True),
             ",".join(columns)]
    for row in rows:
        lines.append(",".join("%.17g" % v if isinstance(v, float) else str(v) for v in row))
    lines.extend(footer)
    _atomic_write(path, "\n".join(lines) + "\n")


def _eps_dir(cfg, eps):
    d = os.path.join(cfg.out, f"eps_{eps:g}")
    os.makedirs(d, exist_ok=True)
    return d


def cmd_limit(cfg):
    p = _build_potential(cfg)
    QL = limit_generator(p, cfg.alpha)
    spec = eigenvalues(QL.matrix)
    order = np.argsort(np.abs(spec))
    from .spectral import eigenvector
    vecs = [eigenvector(QL.matrix, spec[k]) for k in order]
    _emit_json(cfg, os.path.join(cfg.out, "limit.json"), {
        "Q": QL.matrix.tolist(),
        "minima": list(QL.minima),
        "maxima": list(QL.maxima),
        "eigenvalues": [{"re": spec[k].real, "im": spec[k].imag} for k in order],
        "eigenvectors": [[{"re": z.real, "im": z.imag} for z in v] for v in vecs],
    })
    return 0


def _pipeline(cfg, m, params, eps):
    P = transition_matrix(m, cfg.alpha, eps, params)
    G = generator(P)
    QL = limit_generator(m.potential, cfg.alpha)
    rep = classify(eigenvalues(G.matrix), QL)
    return P, G, rep


def cmd_spectrum(cfg):
    p = _build_potential(cfg)
    m = _build_mesh(cfg, p)
    params = make_params(cfg.alpha)
    for eps in cfg.epsilons:
        d = _eps_dir(cfg, eps)
        P, G, rep = _pipeline(cfg, m, params, eps)
        lam = sorted(rep.all_eigenvalues, key=lambda z: (abs(z), z.real, z.imag))
        _emit_csv(cfg, os.path.join(d, "spectrum.csv"), ("re", "im"),
                  [(z.real, z.imag) for z in lam])
        _emit_json(cfg, os.path.join(d, "report.json"),
                   {"epsilon": eps, "report": rep.as_dict()})
        rows = []
        for ev in eigvec_analysis(G, rep, m):
            for x in range(m.n_states):
                rows.append((ev.order, x, int(m.wells[x]),
                             ev.vector[x].real, ev.vector[x].imag))
        _emit_csv(cfg, os.path.join(d, "eigvecs.csv"),
                  ("order", "state", "well", "re", "im"), rows)
    return 0


def cmd_sweep(cfg):
    p = _build_potential(cfg)
    m = _build_mesh(cfg, p)
    params = make_params(cfg.alpha)
    QL = limit_generator(p, cfg.alpha)
    rows = []
    for eps in cfg.epsilons:
        P, G, rep = _pipeline(cfg, m, params, eps)
        cluster_dist = max(d for _, _, d in rep.matched_pairs)
        lump_err = float(np.abs(lumped_rates(P) - QL.matrix).max())
        cp = charpoly_check(m, cfg.alpha, eps, _CHARPOLY_LAMBDAS, params)
        bulk_min = min((abs(z) for z in rep.bulk_sigma2), default=float("inf"))
        rows.append((float(eps), cluster_dist, lump_err) + tuple(r[3] for r in cp)
                    + (rep.gap_ratio, bulk_min))
    cols = ("epsilon", "cluster_dist", "lumped_err") + tuple(
        f"charpoly_err_{lam:g}" for lam in _CHARPOLY_LAMBDAS) + ("gap_ratio", "bulk_min")
    footer = []
    if len(cfg.epsilons) >= 2:
        loge = np.log([r[0] for r in rows])
        for j, name in enumerate(cols[1:], start=1):
            ys = np.array([r[j] for r in rows])
            if np.all(np.isfinite(ys)) and np.all(ys > 0):
                slope = np.polyfit(loge, np.log(ys), 1)[0]
                footer.append(f"# slope {name} = %.17g" % slope)
            else:
                footer.append(f"# slope {name} = NA")
    else:
        footer = [f"# slope {name} = NA" for name in cols[1:]]
    _emit_csv(cfg, os.path.join(cfg.out, "rates.csv"), cols, rows, footer)
    return 0


def cmd_paths(cfg):
    p = _build_potential(cfg)
    m = _build_mesh(cfg, p)
    params = make_params(cfg.alpha)
    QL = limit_generator(p, cfg.alpha)
    residuals = []
    for eps in cfg.epsilons:
        d = _eps_dir(cfg, eps)
        P, G, rep = _pipeline(cfg, m, params, eps)
        K = committors(P)
        unity = float(np.abs(K.sum(axis=1) - 1).max())
        print(f"eps={eps:g}: committor partition of unity "
              f"{'pass' if unity <= 1e-10 else 'FAIL'} (defect {unity:.3e})")
        rows = [(x, float(m.states[x]), int(m.wells[x])) + tuple(float(v) for v in K[x])
                for x in range(m.n_states)]
        _emit_csv(cfg, os.path.join(d, "committors.csv"),
                  ("state", "x", "well") + tuple(f"K_{j+1}" for j in range(m.n_wells)), rows)
        residuals.append({"epsilon": float(eps), "residuals": [
            eigvec_residual(P, ev) for ev in eigvec_analysis(G, rep, m)]})
    payload = {"residuals": residuals}
    if len(residuals) >= 2:
        loge = np.log([r["epsilon"] for r in residuals])
        n = len(residuals[0]["residuals"])
        payload["slopes"] = []
        for i in range(n):
            ys = np.array([r["residuals"][i] for r in residuals])
            payload["slopes"].append(
                float(np.polyfit(loge, np.log(ys), 1)[0]) if np.all(ys > 0) else None)
    _emit_json(cfg, os.path.join(cfg.out, "eigvec_residuals.json"), payload)

    eps0 = cfg.epsilons[0]  # largest: step count scales like eps^-alpha
    P = transition_matrix(m, cfg.alpha, eps0, params)
    wr = well_process_rates(P, int(m.minima_idx[0]), cfg.horizon, cfg.seed)
    off = ~np.eye(m.n_wells, dtype=bool)
    dev = np.zeros_like(wr.rates)
    dev[off] = np.abs(wr.rates - QL.matrix)[off] / wr.ci_halfwidth[off]
    verdict = bool((dev[off] <= 3.0).all())
    print(f"eps={eps0:g}: well rates vs limit generator "
          f"{'pass' if verdict else 'FAIL'} (max {dev[off].max():.2f} CI half-widths"
          f"{', wide CI' if wr.wide_ci else ''})")
    _emit_json(cfg, os.path.join(cfg.out, "well_rates.json"), {
        "epsilon": float(eps0), "well_rates": wr.as_dict(),
        "limit_Q": QL.matrix.tolist(),
        "deviation_in_ci_halfwidths": dev.tolist(),
        "within_3ci": verdict,
    })
    return 0


def cmd_mesh_dump(cfg):
    p = _build_potential(cfg)
    m = _build_mesh(cfg, p)
    header = (f"# version={__version__} seed={cfg.seed}\n"
              "# config=" + json.dumps(cfg.as_dict(), sort_keys=True) + "\n")
    _atomic_write(os.path.join(cfg.out, "mesh.tsv"), header + to_table(m))
    print(f"mesh: {m.n_states} states, {m.n_wells} wells, h={m.h:g}, delta={m.delta:g}, "
          f"t_max={t_max(m)}, clearance={min_clearance(m):.3g}")
    return 0


_DISPATCH = {"spectrum": cmd_spectrum, "limit": cmd_limit, "sweep": cmd_sweep,
             "paths": cmd_paths, "mesh-dump": cmd_mesh_dump}


def main(argv=None):
    ap = argparse.ArgumentParser(
        prog="metaspec",
        description="Metastable spectra of alpha-stable jump chains on multi-well potentials.")
    ap.add_argument("commands", nargs="*", metavar="command",
                    help=f"one or more of: {', '.join(_COMMANDS)}")
    ap.add_argument("--config", help="INI config file; flags override its values")
    ap.add_argument("--alpha", type=float, help="stability index in (0, 2)")
    ap.add_argument("--epsilon", action="append",
                    help="noise level; repeat or comma-separate for a sweep")
    ap.add_argument("--seed", type=int, help="RNG seed echoed in all outputs")
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--mesh", help="uniform:R,N[,h] or adaptive:gamma")
    ap.add_argument("--potential", help="builtin[:halfwidth], poly:c0,c1,... or pw:FILE")
    args = ap.parse_args(argv)
    try:
        cfg = resolve_config(args)
        os.makedirs(cfg.out, exist_ok=True)
    except ConfigError as ex:
        print(f"config error: {ex}", file=sys.stderr)
        return 2
    except OSError as ex:
        print(f"config error: cannot create output directory: {ex}", file=sys.stderr)
        return 2
    try:
        for command in cfg.commands:
            code = _DISPATCH[command](cfg)
            if code:
                return code
    except (ArithmeticError, MeshError, ValueError, np.linalg.LinAlgError) as ex:
        print(f"numeric failure in {command}: {ex}", file=sys.stderr)
        return 1
    except OSError as ex:
        print(f"cannot write outputs for {command}: {ex}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

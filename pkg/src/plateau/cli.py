"""Command-line front end.

    plateau identities     check the closed-form pairing values against
                           direct diagram contraction and Monte Carlo
    plateau variance       empirical vs analytic gradient variances
    plateau haar-epsilon   Haar averages of epsilon over target unitaries
    plateau circuit        layered-circuit zero-mean and Var/epsilon checks

Flags override an optional key=value config file (--config); the default
seed can also come from the PLATEAU_SEED environment variable.  CSV output
is RFC-4180 with 17 significant digits, so identical configs yield byte
identical files.  Exit codes: 0 ok, 1 check failed, 2 bad configuration.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys
import time
from typing import Callable, Optional

import numpy as np

from . import __version__
from .analytic import (
    CASE_CONSTANTS,
    CConstants,
    VarianceCase,
    VarianceQuery,
    c_constants_mc,
    variance_formula,
)
from .circuit import LayeredCircuit, brick_supports, circuit_variance_mc
from .costs import (
    CostKind,
    epsilon,
    haar_avg_epsilon_mc,
    haar_avg_epsilon_xeb_closed,
    observable_xeb,
    observable_xent,
    trace_oe_sq_mc,
)
from .linalg import HermitianObservable, gue_hermitian, haar_state, pauli_string
from .mc import EnsembleSpec, grad_variance_mps
from .twirl import (
    DesignConstants,
    PermLabel,
    diagram_exact,
    diagram_mc,
    mc_twirl,
    o_tree,
    perm_ops,
    second_moment,
    tree_chain,
)


class ConfigError(Exception):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    return format(float(x), ".17g")


def _as_int(x, name: str) -> int:
    try:
        return int(str(x), 10)
    except ValueError as exc:
        raise ConfigError(f"{name} must be an integer, got {x!r}") from exc


def _parse_range(x, name: str) -> list[int]:
    s = str(x)
    parts = s.split(":")
    try:
        if len(parts) == 1:
            return [int(parts[0])]
        if len(parts) == 2:
            lo, hi = int(parts[0]), int(parts[1])
            if hi < lo:
                raise ValueError
            return list(range(lo, hi + 1))
    except ValueError:
        pass
    raise ConfigError(f"{name} must be N or LO:HI, got {s!r}")


def _parse_generator(spec: str, dim: int) -> np.ndarray:
    kind, _, arg = str(spec).partition(":")
    if kind == "zero":
        return np.zeros((dim, dim))
    if kind == "gue":
        seed = _as_int(arg or "0", "generator seed")
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        return gue_hermitian(dim, rng).matrix
    if kind == "pauli":
        m = pauli_string(arg)
        if m.shape != (dim, dim):
            raise ConfigError(f"pauli generator {arg!r} has dim {m.shape[0]}, need {dim}")
        return m
    raise ConfigError(f"unknown generator spec {spec!r} (use gue:SEED, pauli:XY.., zero)")


def _parse_observable(spec: str, d: int) -> np.ndarray:
    s = str(spec)
    named = {"Z": [1.0, -1.0], "p0": [1.0, 0.0], "I": None}
    if s in ("Z", "p0") and d == 2:
        return np.diag(named[s])
    if s == "I":
        return np.eye(d)
    if s == "X" and d == 2:
        return pauli_string("X")
    kind, _, arg = s.partition(":")
    if kind == "diag":
        vals = [float(v) for v in arg.split(",")]
        if len(vals) != d:
            raise ConfigError(f"diag observable needs {d} entries")
        return np.diag(vals)
    if kind == "gue":
        rng = np.random.default_rng(np.random.SeedSequence(_as_int(arg or "0", "observable seed")))
        return gue_hermitian(d, rng).matrix
    raise ConfigError(f"unknown observable spec {spec!r}")


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    out = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for ln, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{ln}: expected key=value")
                key, _, val = line.partition("=")
                out[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return out


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    cfg = dict(defaults)
    cfg.update(_load_config(getattr(args, "config", None)))
    for key, val in vars(args).items():
        if key in ("config",) or val is None:
            continue
        cfg[key] = val
    if "seed" not in cfg or cfg["seed"] is None:
        cfg["seed"] = os.environ.get("PLATEAU_SEED", "0")
    return cfg


def _csv_text(header: list[str], rows: list[list]) -> str:
    import csv

    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    for row in rows:
        w.writerow([c if isinstance(c, str) else _fmt(c) for c in row])
    return buf.getvalue()


def _write_output(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run_record(cfg: dict, points: list, started: float) -> dict:
    echo = {k: (v if isinstance(v, (int, float, bool)) or v is None else str(v)) for k, v in sorted(cfg.items())}
    return {
        "config": echo,
        "points": points,
        "seed": _as_int(cfg["seed"], "seed"),
        "version": __version__,
        "wall_time_s": round(time.perf_counter() - started, 3),
    }


def _tagged(value, provenance: str, stderr=None, samples=None) -> dict:
    out = {"value": value, "provenance": provenance}
    if stderr is not None:
        out["stderr"] = stderr
    if samples is not None:
        out["samples"] = samples
    return out


# ---------------------------------------------------------------------------
# identities


def _identity_checks(which: str, D: int, d: int, samples: int, seed: int) -> list[tuple]:
    dc = DesignConstants.from_dims(D, d)
    rows = []
    labels = [(l, r) for l in (PermLabel.S, PermLabel.A) for r in (PermLabel.S, PermLabel.A)]

    if which in ("tree", "all"):
        for i, (l, r) in enumerate(labels):
            closed = tree_chain(l, r, 0, dc)
            exact = diagram_exact(l, r, dc)
            rows.append((f"tree {l.value}{r.value} exact", exact, closed, 1e-10, abs(exact - closed) <= 1e-10))
            mean, se = diagram_mc(l, r, dc, samples, seed + i)
            tol = max(3.0 * se, 1e-9)
            rows.append((f"tree {l.value}{r.value} mc", mean, closed, tol, abs(mean - closed) <= tol))

    if which in ("otree", "all"):
        o = pauli_string("Z") if d == 2 else gue_hermitian(d, np.random.default_rng(7)).matrix
        for i, (l, r) in enumerate(labels):
            closed = o_tree(l, r, o, dc)
            exact = diagram_exact(l, r, dc, o)
            rows.append((f"otree {l.value}{r.value} exact", exact, closed, 1e-10, abs(exact - closed) <= 1e-10))
            mean, se = diagram_mc(l, r, dc, samples, seed + 10 + i, o)
            tol = max(3.0 * se, 1e-9)
            rows.append((f"otree {l.value}{r.value} mc", mean, closed, tol, abs(mean - closed) <= tol))

    if which in ("twirl", "all"):
        n = D * d
        ident, swap = perm_ops(n)
        for name, x, want in (
            ("twirl unital", ident.matrix, ident.matrix),
            ("twirl swap", swap.matrix, swap.matrix),
        ):
            err = float(np.max(np.abs(second_moment(x, n) - want)))
            rows.append((f"{name}", err, 0.0, 1e-12, err <= 1e-12))
        e00 = np.zeros((4, 4), dtype=complex)
        e00[0, 0] = 1.0
        want = (perm_ops(2)[0].matrix + perm_ops(2)[1].matrix) / 6.0
        err = float(np.max(np.abs(second_moment(e00, 2) - want)))
        rows.append(("twirl |00> projector", err, 0.0, 1e-12, err <= 1e-12))
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        x = rng.standard_normal((n * n, n * n)) + 1j * rng.standard_normal((n * n, n * n))
        x /= np.max(np.abs(x))
        err = float(np.max(np.abs(mc_twirl(x, n, samples, seed) - second_moment(x, n))))
        # 5e-3 is the 1e5-sample budget; scale as 1/sqrt(samples) below that
        tol = 5e-3 * max(1.0, (1e5 / samples) ** 0.5)
        rows.append(("twirl mc max-entry", err, 0.0, tol, err <= tol))
    return rows


def run_identities(cfg: dict) -> int:
    which = str(cfg["which"])
    if which not in ("twirl", "tree", "otree", "all"):
        raise ConfigError(f"--which must be twirl|tree|otree|all, got {which!r}")
    D, d = _as_int(cfg["D"], "D"), _as_int(cfg["d"], "d")
    if D < 2:
        raise ConfigError("diagram checks need D >= 2")
    samples = _as_int(cfg["samples"], "samples")
    seed = _as_int(cfg["seed"], "seed")
    started = time.perf_counter()
    rows = _identity_checks(which, D, d, samples, seed)
    ok = all(r[4] for r in rows)

    if str(cfg["format"]) == "json":
        points = [
            {"check": name, "value": val, "reference": ref, "tolerance": tol, "pass": good}
            for name, val, ref, tol, good in rows
        ]
        text = json.dumps(_run_record(cfg, points, started), indent=2, sort_keys=True) + "\n"
    else:
        lines = [f"{'check':28s} {'value':>24s} {'reference':>24s} {'tol':>12s} result"]
        for name, val, ref, tol, good in rows:
            lines.append(
                f"{name:28s} {_fmt(val):>24s} {_fmt(ref):>24s} {tol:>12.2e} "
                + ("pass" if good else "FAIL")
            )
        lines.append(f"{'all checks passed' if ok else 'FAILURES PRESENT'} (D={D}, d={d}, samples={samples})")
        text = "\n".join(lines) + "\n"
    _write_output(text, cfg.get("out"))
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# variance


def _variance_rows(cfg: dict) -> tuple[list[list], list[dict]]:
    case = VarianceCase(str(cfg["case"]))
    cost = str(cfg["cost"])
    if cost not in ("fixed", "xeb", "xent"):
        raise ConfigError(f"--cost must be fixed|xeb|xent, got {cost!r}")
    D, d = _as_int(cfg["D"], "D"), _as_int(cfg["d"], "d")
    if cost != "fixed" and d != 2:
        raise ConfigError("target-derived costs need d = 2")
    ns = _parse_range(cfg["n"], "--n")
    samples = _as_int(cfg["samples"], "samples")
    const_samples = _as_int(cfg["const_samples"], "const-samples")
    seed = _as_int(cfg["seed"], "seed")
    workers = _as_int(cfg["workers"], "workers")
    delta = None if case.onsite else _as_int(cfg["delta"], "delta")
    g = HermitianObservable(_parse_generator(str(cfg["generator"]), D * d))
    partner = str(cfg["partner_ensemble"])
    if partner not in ("haar", "pauli"):
        raise ConfigError("--partner-ensemble must be haar or pauli")
    ens = {
        "partner": EnsembleSpec.haar(D * d) if partner == "haar" else EnsembleSpec.pauli_group(D * d)
    }

    rows, points = [], []
    for n in ns:
        if not case.onsite and not 1 <= (delta or 0) <= n - 1:
            raise ConfigError(f"off-site case needs 1 <= delta <= n-1 (n={n})")
        if cost == "fixed":
            o = HermitianObservable(_parse_observable(str(cfg["o"]), d))
            vq = VarianceQuery(case, n, D, d, g, o, delta)
            needs_mc = any(c != "c4" for c in CASE_CONSTANTS[case])
            cc = c_constants_mc(
                case, g.matrix, o.matrix, D, d, ens["partner"] if needs_mc else None,
                const_samples, seed, workers,
            )
            analytic_val = variance_formula(vq, cc)
            eps_val, eps_prov, eps_se = epsilon(o.matrix, d), "analytic", None
            o_builder = o.matrix
        else:
            builder_kind = CostKind(cost if cost != "fixed" else "generic")

            def o_builder(rng, _n=n, _k=builder_kind):
                vec = haar_state(2**_n, rng)
                if _k is CostKind.LINEAR_XEB:
                    return observable_xeb(vec, _n).matrix.matrix
                import warnings as _w

                from .costs import ClampWarning as _CW

                with _w.catch_warnings():
                    _w.simplefilter("ignore", _CW)
                    obs = observable_xent(vec, _n)
                return np.full((2, 2), np.nan) if obs.clamped else obs.matrix.matrix

            cc, analytic_val = None, None
            eps_est = haar_avg_epsilon_mc(cost, n, samples, seed, workers)
            eps_val, eps_prov, eps_se = eps_est.mean, "empirical", eps_est.stderr_mean
        r = grad_variance_mps(case, n, D, d, delta, o_builder, g, ens, samples, seed, workers)
        rows.append([n, r.variance, r.stderr_variance, analytic_val, eps_val, samples, seed])
        point = {
            "n": n,
            "mean": _tagged(r.mean, "empirical", r.stderr_mean, r.samples),
            "var_emp": _tagged(r.variance, "empirical", r.stderr_variance, r.samples),
            "epsilon": _tagged(eps_val, eps_prov, eps_se),
            "excluded": r.excluded,
        }
        if analytic_val is not None:
            point["var_analytic"] = _tagged(analytic_val, "analytic")
            point["constants"] = {
                name: _tagged(est.value, est.provenance, est.stderr or None, est.samples or None)
                for name in ("c1", "c2", "c3", "c4", "c5", "c6")
                if (est := getattr(cc, name)) is not None
            }
        points.append(point)

    if cost == "xeb" and len(rows) >= 2:
        xs = np.array([row[0] for row in rows], dtype=float)
        ys = np.log([max(row[1], 1e-300) for row in rows])
        slope = float(np.polyfit(xs, ys, 1)[0])
        points.append({"slope_ln_var_vs_n": _tagged(slope, "empirical")})
        print(f"# fitted slope of ln(var) vs n: {slope:.6f}", file=sys.stderr)
    return rows, points


def run_variance(cfg: dict) -> int:
    started = time.perf_counter()
    header = ["n", "var_emp", "stderr", "var_analytic", "epsilon_mean", "samples", "seed"]
    rows, points = _variance_rows(cfg)
    csv_text = _csv_text(header, rows)
    if cfg.get("verify"):
        rows2, _ = _variance_rows(cfg)
        if _csv_text(header, rows2) != csv_text:
            print("verification failed: re-run differs", file=sys.stderr)
            return 1
        print("verification ok: re-run byte-identical", file=sys.stderr)
    if str(cfg["format"]) == "json":
        text = json.dumps(_run_record(cfg, points, started), indent=2, sort_keys=True) + "\n"
    else:
        text = csv_text
    _write_output(text, cfg.get("out"))
    return 0


# ---------------------------------------------------------------------------
# haar-epsilon


def _haar_epsilon_rows(cfg: dict) -> tuple[list[list], list[dict]]:
    cost = str(cfg["cost"])
    if cost not in ("xeb", "xent"):
        raise ConfigError(f"--cost must be xeb|xent, got {cost!r}")
    ns = _parse_range(cfg["n"], "--n")
    samples = _as_int(cfg["samples"], "samples")
    seed = _as_int(cfg["seed"], "seed")
    workers = _as_int(cfg["workers"], "workers")
    rows, points = [], []
    for n in ns:
        r = haar_avg_epsilon_mc(cost, n, samples, seed, workers)
        closed = haar_avg_epsilon_xeb_closed(n) if cost == "xeb" else None
        tr = trace_oe_sq_mc(n, samples, seed, workers) if cost == "xent" else None
        rows.append([n, r.mean, r.stderr_mean, closed, tr.mean if tr else None, r.excluded])
        point = {
            "n": n,
            "epsilon_mc": _tagged(r.mean, "empirical", r.stderr_mean, samples),
            "clamp_count": r.excluded,
        }
        if closed is not None:
            point["epsilon_closed"] = _tagged(closed, "closed_form")
        if tr is not None:
            point["trace_oe_sq_mc"] = _tagged(tr.mean, "empirical", tr.stderr_mean, samples)
        points.append(point)
    return rows, points


def run_haar_epsilon(cfg: dict) -> int:
    started = time.perf_counter()
    header = ["n", "epsilon_mc", "stderr", "epsilon_closed", "trace_oe_sq_mc", "clamp_count"]
    rows, points = _haar_epsilon_rows(cfg)
    csv_text = _csv_text(header, rows)
    if cfg.get("verify"):
        rows2, _ = _haar_epsilon_rows(cfg)
        if _csv_text(header, rows2) != csv_text:
            print("verification failed: re-run differs", file=sys.stderr)
            return 1
        print("verification ok: re-run byte-identical", file=sys.stderr)
    if str(cfg["format"]) == "json":
        text = json.dumps(_run_record(cfg, points, started), indent=2, sort_keys=True) + "\n"
    else:
        text = csv_text
    _write_output(text, cfg.get("out"))
    return 0


# ---------------------------------------------------------------------------
# circuit


def _load_layout(path: str) -> tuple[int, list[tuple]]:
    supports, n_qubits = [], None
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for ln, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if line.startswith("qubits"):
                    n_qubits = _as_int(line.split("=", 1)[1].strip() if "=" in line else line.split()[1], "qubits")
                    continue
                try:
                    qs = tuple(int(t) for t in line.replace(",", " ").split())
                except ValueError as exc:
                    raise ConfigError(f"{path}:{ln}: malformed gate support {line!r}") from exc
                if not qs:
                    raise ConfigError(f"{path}:{ln}: empty gate support")
                supports.append(qs)
    except OSError as exc:
        raise ConfigError(f"cannot read layout file {path}: {exc}") from exc
    if n_qubits is None or not supports:
        raise ConfigError(f"layout file {path} needs a 'qubits N' line and gate lines")
    return n_qubits, supports


def run_circuit(cfg: dict) -> int:
    started = time.perf_counter()
    layout = str(cfg["layout"])
    samples = _as_int(cfg["samples"], "samples")
    seed = _as_int(cfg["seed"], "seed")
    workers = _as_int(cfg["workers"], "workers")
    if layout == "brick":
        n_qubits = _as_int(cfg["qubits"], "qubits")
        supports = list(brick_supports(n_qubits, _as_int(cfg["layers"], "layers")))
    elif layout == "fullsingle":
        n_qubits = _as_int(cfg["qubits"], "qubits")
        supports = [tuple(range(n_qubits))]
    elif layout == "file":
        if not cfg.get("layout_file"):
            raise ConfigError("--layout file needs --layout-file PATH")
        n_qubits, supports = _load_layout(str(cfg["layout_file"]))
    else:
        raise ConfigError(f"--layout must be brick|fullsingle|file, got {layout!r}")

    obs_layer = _as_int(cfg.get("obs_layer", len(supports) - 1), "obs-layer")
    deriv_layer = _as_int(cfg["deriv_layer"], "deriv-layer")
    if not 0 <= obs_layer < len(supports) or not 0 <= deriv_layer < len(supports):
        raise ConfigError("layer indices out of range")
    a = (
        tuple(int(t) for t in str(cfg["obs_qubits"]).replace(",", " ").split())
        if cfg.get("obs_qubits") is not None
        else (supports[obs_layer][0],)
    )
    d_a = 2 ** len(a)
    dim_k = 2 ** len(supports[deriv_layer])
    try:
        ident_gates = tuple(
            (np.eye(2 ** len(s), dtype=complex), s) for s in supports
        )
        template = LayeredCircuit(n_qubits, ident_gates, obs_layer)
        if not set(a) <= set(supports[obs_layer]):
            raise ConfigError("observable qubits must sit inside the observable layer")
    except (ValueError, IndexError) as exc:
        raise ConfigError(str(exc)) from exc
    v_k = HermitianObservable(_parse_generator(str(cfg["generator"]), dim_k))

    obs_rng = np.random.default_rng(np.random.SeedSequence(_as_int(cfg["obs_seed"], "obs-seed")))
    observables = [
        ("Z-string", np.diag([(-1.0) ** bin(x).count("1") for x in range(d_a)])),
        ("projector-0", np.diag([1.0] + [0.0] * (d_a - 1))),
        ("X-string", pauli_string("X" * len(a))),
        ("ramp-diag", np.diag(np.arange(d_a, dtype=float) * 2.0 - 1.0)),
        ("random-hermitian", gue_hermitian(d_a, obs_rng).matrix),
    ]

    lines = [
        f"layout {layout}: {len(supports)} gates on {n_qubits} qubits, "
        f"derivative layer {deriv_layer}, observable qubits {a}",
        f"{'observable':18s} {'mean':>13s} {'3*se(mean)':>13s} {'variance':>13s} {'se(var)':>12s} {'var/eps':>12s}",
    ]
    ratios, zero_ok = [], True
    for name, o in observables:
        r = circuit_variance_mc(template, deriv_layer, v_k, o, a, "haar", samples, seed, workers)
        eps_val = epsilon(o, d_a)
        ok = abs(r.mean) <= 3.0 * r.stderr_mean
        zero_ok = zero_ok and ok
        if eps_val > 0:
            ratios.append((r.variance / eps_val, r.stderr_variance / eps_val))
        lines.append(
            f"{name:18s} {r.mean:+13.6f} {3 * r.stderr_mean:13.6f} {r.variance:13.6f} "
            f"{r.stderr_variance:12.6f} "
            + (f"{r.variance / eps_val:12.6f}" if eps_val > 0 else f"{'n/a':>12s}")
            + ("" if ok else "  MEAN-NOT-ZERO")
        )
    flat_ok = True
    for i in range(len(ratios)):
        for j in range(i + 1, len(ratios)):
            gap = abs(ratios[i][0] - ratios[j][0])
            tol = 3.0 * math.hypot(ratios[i][1], ratios[j][1])
            if gap > tol:
                flat_ok = False
                lines.append(f"ratio spread {gap:.6f} exceeds 3-sigma {tol:.6f} (pair {i},{j})")
    ok = zero_ok and flat_ok
    lines.append(
        ("zero-mean and Var/epsilon constancy checks passed" if ok else "CHECKS FAILED")
        + f" ({samples} samples, seed {seed}, wall {time.perf_counter() - started:.1f}s)"
    )
    _write_output("\n".join(lines) + "\n", cfg.get("out"))
    return 0 if ok else 1


# ---------------------------------------------------------------------------


_DEFAULTS = {
    "identities": {"which": "all", "D": "2", "d": "2", "samples": "20000", "format": "text"},
    "variance": {
        "case": "onsite-both",
        "cost": "fixed",
        "o": "Z",
        "n": "2:6",
        "D": "2",
        "d": "2",
        "delta": "1",
        "generator": "gue:0",
        "partner_ensemble": "haar",
        "samples": "10000",
        "const_samples": "10000",
        "workers": "1",
        "format": "csv",
    },
    "haar-epsilon": {"cost": "xeb", "n": "1:6", "samples": "5000", "workers": "1", "format": "csv"},
    "circuit": {
        "layout": "brick",
        "qubits": "4",
        "layers": "2",
        "deriv_layer": "0",
        "generator": "gue:0",
        "obs_seed": "11",
        "samples": "10000",
        "workers": "1",
    },
}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="plateau", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"plateau {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key=value config file; flags override it")
        sp.add_argument("--seed", help="master seed (default: PLATEAU_SEED or 0)")
        sp.add_argument("--samples", help="Monte-Carlo sample count")
        sp.add_argument("--out", help="write output to this path instead of stdout")

    sp = sub.add_parser("identities", help="pairing-value identity checks")
    common(sp)
    sp.add_argument("--which", choices=["twirl", "tree", "otree", "all"])
    sp.add_argument("--D", help="bond dimension")
    sp.add_argument("--d", help="physical dimension")
    sp.add_argument("--format", choices=["text", "json"])

    sp = sub.add_parser("variance", help="empirical vs analytic gradient variance")
    common(sp)
    sp.add_argument("--case", choices=[c.value for c in VarianceCase])
    sp.add_argument("--cost", choices=["fixed", "xeb", "xent"])
    sp.add_argument("--O", dest="o", help="observable: Z, p0, X, I, diag:a,b.., gue:SEED")
    sp.add_argument("--n", help="site count N or range LO:HI")
    sp.add_argument("--D", help="bond dimension")
    sp.add_argument("--d", help="physical dimension")
    sp.add_argument("--delta", help="derivative-to-observable distance (off-site cases)")
    sp.add_argument("--generator", help="gue:SEED, pauli:XY.., zero")
    sp.add_argument("--partner-ensemble", dest="partner_ensemble", choices=["haar", "pauli"])
    sp.add_argument("--const-samples", dest="const_samples", help="samples for constant estimates")
    sp.add_argument("--workers", help="worker threads")
    sp.add_argument("--format", choices=["csv", "json"])
    sp.add_argument("--verify", action="store_true", help="re-run and require byte-identical numbers")

    sp = sub.add_parser("haar-epsilon", help="Haar-averaged epsilon of target-derived costs")
    common(sp)
    sp.add_argument("--cost", choices=["xeb", "xent"])
    sp.add_argument("--n", help="qubit count N or range LO:HI")
    sp.add_argument("--workers", help="worker threads")
    sp.add_argument("--format", choices=["csv", "json"])
    sp.add_argument("--verify", action="store_true", help="re-run and require byte-identical numbers")

    sp = sub.add_parser("circuit", help="layered-circuit gradient checks")
    common(sp)
    sp.add_argument("--layout", choices=["brick", "fullsingle", "file"])
    sp.add_argument("--layout-file", dest="layout_file")
    sp.add_argument("--qubits", help="qubit count (brick/fullsingle)")
    sp.add_argument("--layers", help="brick layer count")
    sp.add_argument("--deriv-layer", dest="deriv_layer", help="gate index carrying the derivative")
    sp.add_argument("--obs-layer", dest="obs_layer", help="gate index covering the observable")
    sp.add_argument("--obs-qubits", dest="obs_qubits", help="observable qubits, e.g. 0 or 0,1")
    sp.add_argument("--obs-seed", dest="obs_seed", help="seed for the random test observable")
    sp.add_argument("--generator", help="derivative generator: gue:SEED, pauli:XY.., zero")
    sp.add_argument("--workers", help="worker threads")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers: dict[str, Callable[[dict], int]] = {
        "identities": run_identities,
        "variance": run_variance,
        "haar-epsilon": run_haar_epsilon,
        "circuit": run_circuit,
    }
    cfg = _resolve(args, _DEFAULTS[args.command])
    try:
        return handlers[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

"""Desk-scale experiments with JSON reports.

Each ``cmd_*`` takes an :class:`ExperimentConfig` and returns a report dict
holding the config, code version, calibrated constants, seeds, result tables
and a ``claims`` list. A claim is ``hard`` when it is a deterministic
invariant; probabilistic trend checks are soft and never fail a run.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .ergodic_stats import (
    centered_indicator,
    dbl_lower_bound,
    empirical_measure,
    gaussian_stat_bound,
    qe_bound,
    qe_deviation,
    qe_failure_bound,
    qe_monte_carlo,
    w1_to_gaussian,
)
from .graph_core import (
    Graph,
    GraphError,
    ProductRule,
    bouquet,
    cayley_graph,
    complete_graph,
    cycle_graph,
    cyclic_group,
    hypercube_group,
    path_graph,
    product_graph,
    random_lift,
    read_edge_list,
    read_group_csv,
    star_graph,
)
from .green_resolvent import (
    ConeTypeSystem,
    green_regularity_region,
    local_km_check,
    projector_estimate_check,
)
from .local_weak import (
    ball_distribution,
    bst_profile,
    lift_depth,
    lift_limit_distribution,
    tv_distance,
)
from .sampling import (
    lq_exceedance_mc,
    random_eigenbasis,
    sample_window_vectors,
    stirling_constants,
    wilson_interval,
)
from .spectral import (
    EigenDecomposition,
    IndexSet,
    Interval,
    constancy_defect,
    decompose,
    deloc_measure,
    parse_window,
    projector_diagonal,
)


@dataclass
class ExperimentConfig:
    command: str
    graph: str | None = None
    graph2: str | None = None
    rule: str = "cartesian"
    base: str | None = None
    n: list[int] = field(default_factory=list)
    window: str | None = None
    q: float = 4.0
    lam: float = 2.0
    trials: int = 1000
    seed: int = 0
    out: str | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls(**json.loads(text))


# ---------------------------------------------------------- graph specs


def build_graph(spec: str) -> Graph:
    """'cycle:N', 'path:N', 'complete:N', 'star:K', 'bouquet:K', 'hypercube:K',
    'cyclic:N:g1,g2', 'edges:FILE', 'group:FILE'."""
    kind, _, arg = spec.partition(":")
    makers = {
        "cycle": cycle_graph,
        "path": path_graph,
        "complete": complete_graph,
        "star": star_graph,
        "bouquet": bouquet,
    }
    if kind in makers:
        return makers[kind](int(arg))
    if kind == "hypercube":
        return cayley_graph(hypercube_group(int(arg)))
    if kind == "cyclic":
        order, _, gens = arg.partition(":")
        gens_list = [int(x) for x in gens.split(",")] if gens else None
        return cayley_graph(cyclic_group(int(order), gens_list))
    if kind == "edges":
        return read_edge_list(Path(arg))
    if kind == "group":
        return cayley_graph(read_group_csv(Path(arg)))
    raise GraphError(f"unknown graph spec {spec!r}")


def _rule(text: str) -> ProductRule:
    return ProductRule.from_code(int(text)) if text.isdigit() else ProductRule.named(text)


# ---------------------------------------------------------------- report


def claim(name: str, lhs: float, rhs: float, passed: bool, hard: bool) -> dict:
    return {"name": name, "lhs": float(lhs), "rhs": float(rhs), "pass": bool(passed), "hard": bool(hard)}


def _report(cfg: ExperimentConfig, claims: list[dict], tables: dict, seeds: dict, warns: list[str] | None = None, **extra) -> dict:
    rep = {
        "command": cfg.command,
        "version": __version__,
        "config": json.loads(cfg.to_json()),
        "constants": stirling_constants(),
        "seeds": seeds,
        "claims": claims,
        "tables": tables,
        "warnings": warns or [],
    }
    rep.update(extra)
    return rep


def hard_failures(report: dict) -> list[dict]:
    return [c for c in report["claims"] if c["hard"] and not c["pass"]]


def _stream(seed: int, k: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed).spawn(k + 1)[k]


def table_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        wr = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        wr.writeheader()
        wr.writerows(rows)
    return buf.getvalue()


def write_report(report: dict, out: str | None) -> str:
    text = json.dumps(report, sort_keys=True, indent=1, default=float)
    if out:
        path = Path(out)
        path.write_text(text + "\n")
        for name, rows in report["tables"].items():
            path.with_name(f"{path.stem}.{name}.csv").write_text(table_csv(rows))
    return text


# ------------------------------------------------------- eigenbasis runs


def _basis_run(d: EigenDecomposition, q: float, trials: int, seed) -> list[dict]:
    rows = []
    rng = np.random.default_rng(seed)
    for t in range(trials):
        basis = random_eigenbasis(d, rng).vectors
        a = np.abs(basis)
        rows.append({"trial": t, "max_linf": float(a.max()), "max_lq": float(((a**q).sum(axis=0) ** (1 / q)).max())})
    return rows


def _transitive_claims(n_scale: int, n: int, q: float, lam: float, rows: list[dict], c: float):
    trials = len(rows)
    thr_inf = c * lam * math.sqrt(math.log(n_scale) / n_scale)
    thr_q = c * lam * math.sqrt(q) * n_scale ** (1 / q - 0.5)
    k_inf = sum(r["max_linf"] >= thr_inf for r in rows)
    k_q = sum(r["max_lq"] >= thr_q for r in rows)
    if n_scale == n:
        b_inf = n ** (2 - math.log(lam))
    else:
        b_inf = n * n_scale ** (1 - math.log(lam))
    b_q = n * lam ** (-q)
    return [
        claim("linf_basis_exceedance", wilson_interval(k_inf, trials)[0], b_inf, wilson_interval(k_inf, trials)[0] <= b_inf, False),
        claim("lq_basis_exceedance", wilson_interval(k_q, trials)[0], b_q, wilson_interval(k_q, trials)[0] <= b_q, False),
    ], {"linf_threshold": thr_inf, "lq_threshold": thr_q, "linf_freq": k_inf / trials, "lq_freq": k_q / trials, "linf_bound": b_inf, "lq_bound": b_q}


def cmd_transitive(cfg: ExperimentConfig) -> dict:
    g = build_graph(cfg.graph or "cycle:100")
    d = decompose(g)
    n = g.n
    warns = []
    defect = max(constancy_defect(projector_diagonal(d, IndexSet(grp))) for grp in d.groups)
    transitive = defect < 1e-9
    if not transitive:
        warns.append(f"projector diagonal is not constant (defect {defect:.3g}); the graph is not vertex-transitive")
    m_n = d.max_multiplicity
    sup = float(np.abs(d.vectors).max())
    c = stirling_constants()["kappa"]
    seed = _stream(cfg.seed, 0)
    rows = _basis_run(d, cfg.q, cfg.trials, seed)
    prob, summary = _transitive_claims(n, n, cfg.q, cfg.lam, rows, c)
    claims = [
        claim("projector_constancy", defect, 1e-9, transitive, False),
        claim("deterministic_sup_bound", sup, math.sqrt(m_n / n), (not transitive) or sup <= math.sqrt(m_n / n) + 1e-12, transitive),
        *prob,
    ]
    summary.update({"n": n, "max_multiplicity": m_n, "C": c, "probability_exponent": 2 - math.log(cfg.lam)})
    return _report(cfg, claims, {"trials": rows}, {"root": cfg.seed, "spawn_key": list(seed.spawn_key)}, warns, summary=summary)


def cmd_product(cfg: ExperimentConfig) -> dict:
    gt = build_graph(cfg.graph or "cycle:100")
    gh = build_graph(cfg.graph2 or "path:3")
    g = product_graph(gt, gh, _rule(cfg.rule))
    d = decompose(g)
    ell, m = gt.n, gh.n
    # the projector diagonal must be constant along every transitive-factor fibre
    fibre_defect = 0.0
    for grp in d.groups:
        p = projector_diagonal(d, IndexSet(grp)).proj_diag.reshape(ell, m)
        fibre_defect = max(fibre_defect, float(np.max(p.max(axis=0) - p.min(axis=0))))
    c = stirling_constants()["kappa"]
    seed = _stream(cfg.seed, 0)
    rows = _basis_run(d, cfg.q, cfg.trials, seed)
    prob, summary = _transitive_claims(ell, g.n, cfg.q, cfg.lam, rows, c)
    claims = [claim("fibre_constancy", fibre_defect, 1e-9, fibre_defect < 1e-9, True), *prob]
    summary.update({"n": g.n, "ell": ell, "m": m, "rule": _rule(cfg.rule).code, "C": c})
    return _report(cfg, claims, {"trials": rows}, {"root": cfg.seed, "spawn_key": list(seed.spawn_key)}, summary=summary)


def complete_eigenspace(m: int) -> tuple[EigenDecomposition, int]:
    """K_{m+1} and the index of its (-1)-eigenspace, of multiplicity m."""
    d = decompose(complete_graph(m + 1))
    k = int(np.argmax(d.multiplicities))
    return d, k


def gaussian_trend(ms, samples: int, seed, grid=None) -> list[dict]:
    rows = []
    for j, m in enumerate(ms):
        d, k = complete_eigenspace(m)
        sw = projector_diagonal(d, IndexSet(d.groups[k]))
        us = sample_window_vectors(sw, samples, _stream(int(seed), j))
        for t, u in enumerate(us):
            mu = empirical_measure(u)
            rows.append({"m": m, "trial": t, "w1": w1_to_gaussian(mu), "dbl_lower": dbl_lower_bound(mu, grid), "second_moment": mu.second_moment()})
    return rows


def cmd_gaussian(cfg: ExperimentConfig) -> dict:
    ms = [int(x) for x in cfg.extra.get("m", [9, 49, 199])]
    grid_n = int(cfg.extra.get("grid", 41))
    grid = np.linspace(-4, 4, grid_n)
    rows = gaussian_trend(ms, cfg.trials, cfg.seed, grid)
    means = [float(np.mean([r["w1"] for r in rows if r["m"] == m])) for m in ms]
    claims = [
        claim("bracket_order", max(r["dbl_lower"] - r["w1"] for r in rows), 0.0, all(r["dbl_lower"] <= r["w1"] + 1e-12 for r in rows), True),
        claim("second_moment_one", max(abs(r["second_moment"] - 1) for r in rows), 1e-9, all(abs(r["second_moment"] - 1) < 1e-9 for r in rows), True),
        claim("w1_decreases_in_m", float(np.max(np.diff(means))) if len(means) > 1 else 0.0, 0.0, all(np.diff(means) < 0), False),
        claim("w1_small_at_largest_m", means[-1], 0.1, means[-1] < 0.1, False),
    ]
    summary = {"m": ms, "mean_w1": means, "mean_dbl_lower": [float(np.mean([r["dbl_lower"] for r in rows if r["m"] == m])) for m in ms], "bound_eps1": [gaussian_stat_bound(m, 1.0) for m in ms]}
    return _report(cfg, claims, {"samples": rows}, {"root": cfg.seed}, summary=summary)


def cmd_qe(cfg: ExperimentConfig) -> dict:
    g = build_graph(cfg.graph or "complete:100")
    d = decompose(g)
    k = int(np.argmax(d.multiplicities))
    parts = int(cfg.extra.get("parts", 2))
    t = float(cfg.extra.get("t", 4.0))
    blocks = np.array_split(np.arange(g.n), parts)
    fs = np.array([centered_indicator(g.n, b) for b in blocks])
    seed = _stream(cfg.seed, 0)
    res = qe_monte_carlo(d, k, fs, t, cfg.trials, seed)
    mk = int(d.multiplicities[k])
    u0 = d.vectors[:, d.groups[k][0]]
    const_dev = float(qe_deviation(u0, np.full(g.n, 3.7)))
    claims = [
        claim("constant_f_zero", const_dev, 1e-12, const_dev < 1e-12, True),
        claim("vector_failure_rate", res.vector_frequency, res.bound, wilson_interval(res.vector_failures, res.draws * res.vectors_per_draw)[0] <= res.bound, False),
    ]
    summary = {
        "multiplicity": mk,
        "t": t,
        "threshold": res.threshold,
        "max_deviation": res.max_deviation,
        "vector_failures": res.vector_failures,
        "draw_failures": res.draw_failures,
        "draws": res.draws,
        "per_vector_bound": qe_failure_bound(mk, t),
        "success_lower_bound": qe_bound(t, parts, d.multiplicities.tolist()),
    }
    return _report(cfg, claims, {}, {"root": cfg.seed, "spawn_key": list(seed.spawn_key)}, summary=summary)


def goe_matrix(n: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    return (a + a.T) / math.sqrt(2 * n)


def central_window(d: EigenDecomposition, count: int) -> IndexSet:
    start = (d.n - count) // 2
    return IndexSet(range(start, start + count))


def cmd_deloc(cfg: ExperimentConfig) -> dict:
    counts = [int(x) for x in cfg.extra.get("counts", [10, 50, 200])]
    n = int(cfg.extra.get("size", 200))
    if cfg.graph:
        d = decompose(build_graph(cfg.graph))
    else:
        d = decompose(goe_matrix(n, _stream(cfg.seed, 0)))
    rows, claims = [], []
    windows = [(f"N={c}", central_window(d, min(c, d.n))) for c in counts]
    if cfg.window:
        windows.append((cfg.window, parse_window(cfg.window)))
    for j, (label, w) in enumerate(windows):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sw = projector_diagonal(d, w)
        for q in sorted({2.0, float(cfg.q)}):
            res = lq_exceedance_mc(sw, q, cfg.lam, cfg.trials, _stream(cfg.seed, 1 + j))
            lo = res.wilson[0]
            rows.append({"window": label, "count": sw.count, "q": q, "lam": cfg.lam, "threshold": res.threshold, "exceed": res.exceed, "trials": res.trials, "freq": res.frequency, "bound": res.bound})
            claims.append(claim(f"exceedance[{label},q={q:g}]", lo, res.bound, lo <= res.bound, False))
        dm = deloc_measure(sw, cfg.q)
        claims.append(claim(f"interpolation[{label}]", dm, sw.count, dm <= sw.count * (1 + 1e-12), True))
    return _report(cfg, claims, {"exceedance": rows}, {"root": cfg.seed}, summary={"C": stirling_constants()["deviation_C"]})


def _check_lift_base(base: Graph) -> None:
    deg = base.degrees
    if deg.min() < 2:
        raise GraphError("base graph needs minimum degree >= 2")
    if np.all(deg == 2):
        raise GraphError("base graph is a cycle (all degrees 2); its cover has no continuous spectrum")


def bulk_windows(center: float, length: float, count: int, spread: float) -> list[Interval]:
    mids = np.linspace(center - spread, center + spread, count)
    return [Interval(m - length / 2, m + length / 2) for m in mids]


def cmd_lift(cfg: ExperimentConfig) -> dict:
    base = build_graph(cfg.base or "complete:4")
    _check_lift_base(base)
    ns = cfg.n or [100, 400]
    cs = ConeTypeSystem(base)
    dmax = int(base.max_degree)
    region = green_regularity_region(cs, 0.01, 100.0, np.linspace(-0.75, 0.75, 31), eta=1e-6)
    c_win = float(cfg.extra.get("window_const", 1.0))
    rows, claims, t59 = [], [], []
    for j, n in enumerate(ns):
        lift_seed = _stream(cfg.seed, 2 * j)
        g, spec = random_lift(base, n, lift_seed)
        h = lift_depth(n, dmax)
        tv = tv_distance(ball_distribution(g, h), lift_limit_distribution(base, h))
        d = decompose(g)
        nv = g.n
        kms = [local_km_check(g, cs, w, max(h, 1), values=d.values, strict=False) for w in bulk_windows(0.0, 0.3, 5, 0.6)]
        km_med = float(np.median([r.lhs for r in kms]))
        window = parse_window(cfg.window) if cfg.window else Interval(-0.15, 0.15)
        pe = projector_estimate_check(g, window, cfg.q, max(h, 1), d=d)
        rows.append({
            "n": n, "vertices": nv, "h": h, "bst_fraction": bst_profile(g, h + 1), "tv": tv, "tv_bound": 2 / math.sqrt(n),
            "km_median": km_med, "km_floor_met": all(r.floor_met for r in kms), "proj_lhs": pe.lhs, "proj_chain": pe.chain, "c_prime": pe.c_prime,
        })
        claims.append(claim(f"projector_chain[n={n}]", pe.lhs, pe.chain, pe.chain_holds, True))
        claims.append(claim(f"tv_bound[n={n}]", tv, 2 / math.sqrt(n), tv <= 2 / math.sqrt(n), False))
        # small-scale window: length C loglog n / log n, centred in the certified bulk
        ln = math.log(nv)
        length = c_win * math.log(ln) / ln
        sw = projector_diagonal(d, Interval(-length / 2, length / 2))
        us = sample_window_vectors(sw, cfg.trials, _stream(cfg.seed, 2 * j + 1))
        sup = np.abs(us).max(axis=1)
        scale = pe.c_prime * ln**2 / math.sqrt(nv)
        for lam in (1.0, 2.0, 4.0):
            freq = float(np.mean(sup >= lam * scale))
            bound = lam ** (-ln / (2 * math.log(ln)))
            t59.append({"n": n, "window_length": length, "lam": lam, "threshold": lam * scale, "freq": freq, "bound": bound})
            claims.append(claim(f"small_scale_sup[n={n},lam={lam:g}]", freq, bound, freq <= bound, False))
    summary = {"region_certified": region.certified, "region_excluded": region.excluded, "h_rule": "floor(log n / (8 log(d-1)))"}
    return _report(cfg, claims, {"lifts": rows, "small_scale": t59}, {"root": cfg.seed}, summary=summary)


COMMANDS = {
    "transitive": cmd_transitive,
    "product": cmd_product,
    "gaussian": cmd_gaussian,
    "qe": cmd_qe,
    "deloc": cmd_deloc,
    "lift": cmd_lift,
}


def run(cfg: ExperimentConfig) -> dict:
    return COMMANDS[cfg.command](cfg)

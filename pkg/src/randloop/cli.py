"""Experiment orchestration: config validation, task dispatch, reports.

Usage: randloop <task> --config FILE [--seed N] [--out DIR]

Tasks compare sampler output against the exact-diagonalization side with a
3-sigma rule and write a JSON summary plus CSV detail (and, for the report
tasks, PNG figures).  Identical config and seed produce byte-identical JSON
and CSV output.  Exit codes: 0 all comparisons pass, 1 statistical failure,
2 usage or validation error.

Environment overrides: RANDLOOP_SEED, RANDLOOP_WORKERS.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import estimators, figures, oracle
from .events import EventList, sample_events
from .lattice import Graph, GraphError, build_graph
from .loops import build_loops
from .measure import MeasureError, WeightSpec
from .oracle import OracleError, P_FAMILY, Q_FAMILY


class ConfigError(ValueError):
    pass


TASKS = ("sample", "verify-z", "correlate", "gibbs-check", "configs-check",
         "ed", "macro-loop")


def _get(cfg: dict, key: str, typ, default=None, required=False):
    if key not in cfg:
        if required:
            raise ConfigError(f"{key}: missing required field")
        return default
    val = cfg[key]
    try:
        return typ(val)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: cannot interpret {val!r}")


class RunConfig:
    """Validated run configuration (see README for the JSON schema)."""

    def __init__(self, raw: dict, task: str, seed_override=None):
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        self.raw = raw
        if "task" in raw and raw["task"] != task:
            raise ConfigError(f"task: config says {raw['task']!r} but the "
                              f"command is {task!r}")
        self.task = task
        try:
            self.graph: Graph = build_graph(raw.get("graph"))
        except GraphError as exc:
            raise ConfigError(f"graph: {exc}")
        self.two_s = _get(raw, "two_s", int, required=True)
        if self.two_s < 0:
            raise ConfigError("two_s: must be >= 0")
        self.u = _get(raw, "u", float, required=True)
        if not 0.0 <= self.u <= 1.0:
            raise ConfigError("u: must lie in [0, 1]")
        self.beta = _get(raw, "beta", float, required=True)
        if self.beta <= 0:
            raise ConfigError("beta: must be positive")
        h = raw.get("h")
        if h is None:
            self.h = None
        else:
            if len(h) != self.graph.n_vertices:
                raise ConfigError(f"h: {len(h)} entries for "
                                  f"{self.graph.n_vertices} sites")
            self.h = tuple(float(v) for v in h)
        self.family = _get(raw, "family", str, default="field")
        if self.family not in ("uniform", "field", "field_directed"):
            raise ConfigError(f"family: unknown family {self.family!r}")
        self.theta = _get(raw, "theta", float, default=float(self.two_s + 1))
        if self.family == "field_directed" and self.two_s % 2 != 0:
            raise ConfigError("family: field_directed needs integer S")

        sampler = raw.get("sampler", {})
        if not isinstance(sampler, dict):
            raise ConfigError("sampler: must be an object")
        kind = sampler.get("kind", "direct")
        if kind not in ("direct", "metropolis"):
            raise ConfigError(f"sampler.kind: unknown sampler {kind!r}")
        self.sampler = estimators.SamplerConfig(
            kind=kind,
            n_samples=int(sampler.get("n_samples", 100_000)),
            n_sweeps=int(sampler.get("n_sweeps", 20_000)),
            burn_in=int(sampler.get("burn_in", 1_000)),
            n_batches=int(sampler.get("n_batches", 50)),
            seed=0,
        )
        seed = _get(raw, "seed", int, default=0)
        if seed_override is not None:
            seed = int(seed_override)
        self.seed = seed
        self.sampler = estimators.SamplerConfig(
            **{**self.sampler.__dict__, "seed": seed})

        self.pairs = raw.get("pairs")
        if self.pairs is not None:
            self.pairs = [(int(x), int(y)) for x, y in self.pairs]
            for x, y in self.pairs:
                if not (0 <= x < self.graph.n_vertices
                        and 0 <= y < self.graph.n_vertices) or x == y:
                    raise ConfigError(f"pairs: bad pair ({x}, {y})")
        self.betas = [float(b) for b in raw.get("betas", [self.beta])]
        self.n_realizations = _get(raw, "n_realizations", int, default=200)
        self.modes = raw.get("modes", ["plain", "tilde"])
        for m in self.modes:
            if m not in ("plain", "tilde"):
                raise ConfigError(f"modes: unknown mode {m!r}")
        if self.task == "correlate" and self.h is not None \
                and any(self.h):
            raise ConfigError("h: correlations require h == 0")

    # -- derived pieces ----------------------------------------------------

    def weight_spec(self) -> WeightSpec:
        if self.family == "uniform":
            return WeightSpec.uniform(self.theta)
        if self.family == "field":
            return WeightSpec.field(self.two_s, self.h)
        return WeightSpec.field_directed(self.two_s, self.h)

    def oracle_family(self) -> str:
        if self.family == "field_directed":
            return P_FAMILY
        if self.family == "uniform":
            theta_int = round(self.theta)
            if abs(self.theta - theta_int) > 1e-12 or theta_int < 1:
                raise ConfigError("theta: oracle comparison needs integer "
                                  "theta = 2S+1")
            return Q_FAMILY
        return Q_FAMILY

    def config_hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _n_workers() -> int:
    return max(1, int(os.environ.get("RANDLOOP_WORKERS", "1")))


def _write_summary(out: Path, cfg: RunConfig, payload: dict):
    payload = {"task": cfg.task, "seed": cfg.seed,
               "config_hash": cfg.config_hash(), **payload}
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "summary.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return payload


def _write_csv(out: Path, header, rows):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "detail.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _sigma_check(sampled, stderr, exact, n_sigma=3.0):
    gap = abs(sampled - exact)
    return bool(gap <= n_sigma * stderr + 1e-12), \
        gap / stderr if stderr > 0 else (0.0 if gap <= 1e-12 else math.inf)


# -- task implementations --------------------------------------------------


def task_sample(cfg: RunConfig, out: Path) -> int:
    rng = np.random.default_rng(cfg.seed)
    records = []
    for _ in range(cfg.n_realizations):
        ev = sample_events(cfg.graph, cfg.beta, cfg.u, rng)
        records.append(json.loads(ev.to_json()))
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "events.json", "w") as fh:
        json.dump(records, fh)
        fh.write("\n")
    counts = [len(r["items"]) for r in records]
    _write_csv(out, ["realization", "n_events"], list(enumerate(counts)))
    _write_summary(out, cfg, {
        "n_realizations": cfg.n_realizations,
        "mean_events": sum(counts) / len(counts),
        "expected_mean": cfg.graph.n_edges * cfg.beta,
    })
    return 0


def task_verify_z(cfg: RunConfig, out: Path, render: bool) -> int:
    spec = cfg.weight_spec()
    H = oracle.hamiltonian(cfg.graph, cfg.two_s, cfg.u, cfg.h,
                           cfg.oracle_family())
    z_exact = oracle.partition_function(H, cfg.beta)
    _, y_est = estimators.run_sampler(cfg.graph, cfg.beta, cfg.u, spec, {},
                                      cfg.sampler)
    passed, sigma = _sigma_check(y_est.mean, y_est.stderr, z_exact)
    rows = [("Y", y_est.mean, y_est.stderr, z_exact, sigma, passed)]
    _write_csv(out, ["observable", "sampled", "stderr", "exact",
                     "sigma_gap", "pass"], rows)
    if render:
        figures.plot_partition_check(
            [(f"u={cfg.u} beta={cfg.beta}", y_est.mean, y_est.stderr,
              z_exact)], out / "figure.png")
    _write_summary(out, cfg, {
        "comparisons": [{"name": "partition_function", "sampled": y_est.mean,
                         "stderr": y_est.stderr, "exact": z_exact,
                         "sigma_gap": sigma, "pass": passed}],
        "all_pass": passed,
    })
    return 0 if passed else 1


def _all_pairs(n: int):
    return [(x, y) for x in range(n) for y in range(x + 1, n)]


def task_correlate(cfg: RunConfig, out: Path, render: bool) -> int:
    pairs = cfg.pairs or _all_pairs(cfg.graph.n_vertices)
    tilde = cfg.family == "field_directed"
    # the tilde loop measure uses the same unsigned (2S+1)^|L| weights at
    # h == 0; only the coefficient table differs
    spec = WeightSpec.field(cfg.two_s)
    probs, _ = estimators.pair_event_probs_multi(
        cfg.graph, cfg.beta, cfg.u, spec, pairs, cfg.sampler)
    fam = P_FAMILY if tilde else Q_FAMILY
    H = oracle.hamiltonian(cfg.graph, cfg.two_s, cfg.u, None, fam)
    s1, s2, s3 = oracle.spin_matrices(cfg.two_s)
    n, d = cfg.graph.n_vertices, cfg.two_s + 1

    rows = []
    comparisons = []
    all_pass = True
    for x, y in pairs:
        p = probs[(x, y)]
        entries = []
        if tilde:
            entries.append(
                ("S3S3", estimators.correlation_tilde_with_error(
                    s3, s3, p, cfg.two_s),
                 oracle.thermal_two_point(
                     H, oracle.embed_one_site(s3, n, x, d),
                     oracle.embed_one_site(s3, n, y, d), cfg.beta)))
            s3sq = s3 @ s3
            nem_exact = (oracle.thermal_two_point(
                H, oracle.embed_one_site(s3sq, n, x, d),
                oracle.embed_one_site(s3sq, n, y, d), cfg.beta)
                - oracle.thermal_two_point(
                    H, oracle.embed_one_site(s3sq, n, x, d),
                    np.eye(d ** n), cfg.beta)
                * oracle.thermal_two_point(
                    H, oracle.embed_one_site(s3sq, n, y, d),
                    np.eye(d ** n), cfg.beta))
            s = cfg.two_s / 2.0
            nem_coeff = s * (s + 1) * (2 * s - 1) * (2 * s + 3) / 45.0
            entries.append(("nematic",
                            (estimators.nematic_tilde(p, cfg.two_s),
                             abs(nem_coeff) * p.p_same.stderr),
                            nem_exact))
        else:
            for name, m in (("S1S1", s1), ("S2S2", s2), ("S3S3", s3)):
                entries.append(
                    (name, estimators.correlation_plain_with_error(
                        m, m, p, cfg.two_s),
                     oracle.thermal_two_point(
                         H, oracle.embed_one_site(m, n, x, d),
                         oracle.embed_one_site(m, n, y, d), cfg.beta)))
        for name, (value, stderr), exact in entries:
            passed, sigma = _sigma_check(value, stderr, exact)
            all_pass = all_pass and passed
            rows.append((x, y, name, value, stderr, exact, sigma, passed))
            comparisons.append({"pair": [x, y], "observable": name,
                                "sampled": value, "stderr": stderr,
                                "exact": exact, "sigma_gap": sigma,
                                "pass": passed})
    _write_csv(out, ["x", "y", "observable", "sampled", "stderr", "exact",
                     "sigma_gap", "pass"], rows)
    if render:
        figures.plot_correlations(
            [(f"({r[0]},{r[1]})", r[2], r[3], r[4], r[5]) for r in rows],
            out / "figure.png")
    _write_summary(out, cfg, {"comparisons": comparisons,
                              "all_pass": all_pass})
    return 0 if all_pass else 1


def task_gibbs_check(cfg: RunConfig, out: Path) -> int:
    if cfg.sampler.kind != "direct":
        raise ConfigError("sampler.kind: gibbs-check samples the unweighted "
                          "measure; use the direct sampler")
    fam = cfg.oracle_family()
    H = oracle.hamiltonian(cfg.graph, cfg.two_s, cfg.u, cfg.h, fam)
    target = oracle.gibbs_operator(H, cfg.beta)
    n_samples = cfg.sampler.n_samples
    n_batches = cfg.sampler.n_batches
    if n_samples % n_batches:
        raise ConfigError("sampler.n_samples: must divide into n_batches")
    per = n_samples // n_batches
    dim = target.shape[0]
    batch_means = np.zeros((n_batches, dim, dim))
    seeds = np.random.SeedSequence(cfg.seed).spawn(n_batches)
    for b in range(n_batches):
        rng = np.random.default_rng(seeds[b])
        acc = np.zeros((dim, dim))
        for _ in range(per):
            ev = sample_events(cfg.graph, cfg.beta, cfg.u, rng)
            acc += oracle.gibbs_from_events(ev, cfg.graph, cfg.two_s, cfg.h,
                                            fam)
        batch_means[b] = acc / per
    mean = batch_means.mean(axis=0)
    stderr = batch_means.std(axis=0, ddof=1) / math.sqrt(n_batches)
    gap = np.abs(mean - target)
    bad = gap > 3.0 * stderr + 1e-12
    passed = not bad.any()
    worst = float((gap / np.where(stderr > 0, stderr, np.inf)).max())
    rows = [(i, j, mean[i, j], stderr[i, j], target[i, j], bool(bad[i, j]))
            for i in range(dim) for j in range(dim)]
    _write_csv(out, ["row", "col", "sampled", "stderr", "exact", "fail"], rows)
    _write_summary(out, cfg, {
        "n_samples": n_samples, "n_entries": dim * dim,
        "n_failing_entries": int(bad.sum()), "max_sigma_gap": worst,
        "all_pass": passed,
    })
    return 0 if passed else 1


def task_configs_check(cfg: RunConfig, out: Path) -> int:
    rng = np.random.default_rng(cfg.seed)
    rows = []
    all_pass = True
    for i in range(cfg.n_realizations):
        ev = sample_events(cfg.graph, cfg.beta, cfg.u, rng)
        dec = build_loops(cfg.graph, ev)
        expected = (cfg.two_s + 1) ** dec.n_loops
        for mode in cfg.modes:
            got = oracle.count_compatible_configs(ev, cfg.graph, cfg.two_s,
                                                  mode)
            ok = got == expected
            all_pass = all_pass and ok
            rows.append((i, mode, int(dec.n_loops), got, expected, ok))
    _write_csv(out, ["realization", "mode", "n_loops", "count", "expected",
                     "pass"], rows)
    _write_summary(out, cfg, {"n_realizations": cfg.n_realizations,
                              "modes": list(cfg.modes),
                              "all_pass": all_pass})
    return 0 if all_pass else 1


def task_ed(cfg: RunConfig, out: Path) -> int:
    fam = cfg.oracle_family()
    H = oracle.hamiltonian(cfg.graph, cfg.two_s, cfg.u, cfg.h, fam)
    lam = np.linalg.eigvalsh(H)
    z = float(np.exp(-cfg.beta * lam).sum())
    rows = [(i, float(v)) for i, v in enumerate(lam)]
    _write_csv(out, ["index", "eigenvalue"], rows)
    _write_summary(out, cfg, {
        "family": fam, "Z": z, "ground_energy": float(lam[0]),
        "dim": int(H.shape[0]), "all_pass": True,
    })
    return 0


def _macro_point(graph_spec, beta, u, theta, sampler_dict):
    graph = build_graph(graph_spec)
    cfg = estimators.SamplerConfig(**sampler_dict)
    est = estimators.macroscopic_fraction(graph, beta, u, theta, cfg)
    return est.mean, est.stderr


def task_macro_loop(cfg: RunConfig, out: Path, render: bool) -> int:
    jobs = []
    for i, beta in enumerate(cfg.betas):
        sampler = {**cfg.sampler.__dict__,
                   "seed": int(np.random.SeedSequence(
                       (cfg.seed, i)).generate_state(1)[0])}
        jobs.append((cfg.raw.get("graph"), beta, cfg.u, cfg.theta, sampler))
    workers = _n_workers()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_macro_point, *zip(*jobs)))
    else:
        results = [_macro_point(*j) for j in jobs]
    rows = [(beta, m, e) for (_, beta, _, _, _), (m, e) in zip(jobs, results)]
    _write_csv(out, ["beta", "mean_fraction", "stderr"], rows)
    if render:
        figures.plot_macro_loop([r[0] for r in rows], [r[1] for r in rows],
                                [r[2] for r in rows], out / "figure.png")
    _write_summary(out, cfg, {
        "theta": cfg.theta,
        "points": [{"beta": b, "mean": m, "stderr": e} for b, m, e in rows],
        "all_pass": True,
    })
    return 0


# -- entry point -----------------------------------------------------------


@click.command()
@click.argument("task", type=click.Choice(TASKS))
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, default=None,
              help="Override the config seed (env: RANDLOOP_SEED).")
@click.option("--out", "out_dir", type=click.Path(file_okay=False),
              default=None, help="Output directory (default from config).")
@click.option("--figures/--no-figures", "render", default=True,
              help="Render PNG figures for report tasks.")
def main(task, config_path, seed, out_dir, render):
    """Run one verification or measurement task from a JSON config."""
    try:
        with open(config_path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise click.exceptions.Exit(_usage_error(f"config: invalid JSON ({exc})"))
    if seed is None and "RANDLOOP_SEED" in os.environ:
        seed = int(os.environ["RANDLOOP_SEED"])
    try:
        cfg = RunConfig(raw, task, seed_override=seed)
        out = Path(out_dir or raw.get("output", "out"))
        if task == "sample":
            code = task_sample(cfg, out)
        elif task == "verify-z":
            code = task_verify_z(cfg, out, render)
        elif task == "correlate":
            code = task_correlate(cfg, out, render)
        elif task == "gibbs-check":
            code = task_gibbs_check(cfg, out)
        elif task == "configs-check":
            code = task_configs_check(cfg, out)
        elif task == "ed":
            code = task_ed(cfg, out)
        else:
            code = task_macro_loop(cfg, out, render)
    except (ConfigError, MeasureError, OracleError, GraphError) as exc:
        raise click.exceptions.Exit(_usage_error(str(exc)))
    raise click.exceptions.Exit(code)


def _usage_error(msg: str) -> int:
    click.echo(f"error: {msg}", err=True)
    return 2


if __name__ == "__main__":
    main()

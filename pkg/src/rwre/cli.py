"""Command-line runner: config in, deterministic artifacts out.

    rwre <command> --config <path> [--out <dir>] [--seed <u64>] [--threads <n>]

Commands: validate, kernel-checks, nash, decay, corrector, clt,
full-report, seed-manifest.  Exit codes: 0 all checks passed, 2 a check
failed, 3 configuration error, 4 numerical non-convergence.

Every run writes manifest.json (config hash, stage values, pass/fail),
report.txt (human-readable), per-stage CSVs, and timings.json.  With the
timings file excluded, artifact bytes are a pure function of the config.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import __version__, analysis, backend
from . import config as configmod
from . import corrector as corr
from . import cycles, environment as envmod, montecarlo, reports, rng
from .errors import (
    ConfigurationError,
    ContractError,
    DataError,
    NumericalError,
    RwreError,
)

DEFAULT_LAMBDAS = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)
STAGE_TOL = 1e-10
EXACT_TOL = 1e-12


class _Runner:
    """Executes stages against one environment, collecting the manifest."""

    def __init__(self, cfg: configmod.ExperimentConfig, out_dir: str):
        self.cfg = cfg
        self.out_dir = out_dir
        self.env = envmod.build_environment(cfg.model, cfg.side, cfg.seed)
        self.manifest = reports.RunManifest(
            command="",
            config_hash=cfg.config_hash(),
            version=__version__,
            seed=cfg.seed,
            side=cfg.side,
            model_name=cfg.model.name,
            backend=backend.active(),
        )
        self.timings: dict = {}
        self._corrector_cache = None

    # -- plumbing ----------------------------------------------------------

    def run(self, command: str, stage_names: list[str]) -> None:
        self.manifest.command = command
        os.makedirs(self.out_dir, exist_ok=True)
        fns = {
            "validate": self.stage_validate,
            "kernel-checks": self.stage_kernel_checks,
            "nash": self.stage_nash,
            "decay": self.stage_decay,
            "corrector": self.stage_corrector,
            "clt": self.stage_clt,
        }
        for name in stage_names:
            t0 = time.perf_counter()
            try:
                record = fns[name]()
            except ContractError as err:
                record = reports.StageRecord(name=name, passed=False, error=str(err))
            finally:
                self.timings[name] = time.perf_counter() - t0
            self.manifest.add(record)

    def write_csv(self, name: str, header, rows) -> None:
        reports.write_csv(os.path.join(self.out_dir, name), header, rows)
        self.manifest.artifacts.append(name)

    def _coords(self) -> np.ndarray:
        side, d = self.cfg.side, self.env.dimension
        return np.indices((side,) * d).reshape(d, -1).T

    # -- stages ------------------------------------------------------------

    def stage_validate(self) -> reports.StageRecord:
        env, cfg = self.env, self.cfg
        probe_n = cfg.param("probe_n", cycles.DEFAULT_PROBE_N.get(cfg.model.name, 2))
        probe_eps = cfg.param("probe_eps", 1e-9)
        rep = envmod.validate_assumptions(env, probe_n=probe_n, probe_eps=probe_eps)
        coords = self._coords()
        self.write_csv(
            "mass.csv",
            [f"x{a}" for a in range(env.dimension)] + ["mass"],
            (list(c) + [m] for c, m in zip(coords.tolist(), env.mass.tolist())),
        )
        return reports.StageRecord(
            name="validate",
            passed=rep.certified,
            values={
                "checks": rep.passed,
                "eps0": rep.eps0,
                "probe_n": rep.probe_n,
                "witness": rep.witness,
                "mass_min": rep.mass_min,
                "mass_max": rep.mass_max,
                "declared_mass_bounds": list(rep.declared_mass_bounds),
                "range_b": rep.range_b,
                "n_steps": rep.n_steps,
            },
        )

    def stage_kernel_checks(self) -> reports.StageRecord:
        env, cfg = self.env, self.cfg
        k = analysis.assemble_kernel(env)
        k_star = analysis.adjoint_kernel(k)
        k_rev = analysis.assemble_kernel(env.reversed_)
        chain = corr.build_env_chain(env)
        values = {
            "row_sum_residual": k.row_sum_residual(),
            "invariance_residual": k.invariance_residual(),
            "reversal_identity_residual": envmod.reversal_identity_residual(env),
            "adjoint_vs_reversed": float(np.abs(k_star.probs - k_rev.probs).max()),
            "double_adjoint_residual": float(
                np.abs(analysis.adjoint_kernel(k_star).probs - k.probs).max()
            ),
            "adjoint_identity_residual": corr.adjoint_identity_check(
                chain, trials=cfg.param("trials", 100), seed=cfg.seed
            ),
            "q_invariance_r": k.invariance_residual(),
            "q_invariance_r_star": k_star.invariance_residual(),
        }
        exact = ["reversal_identity_residual", "adjoint_vs_reversed", "double_adjoint_residual"]
        if cfg.model.name == "square_triangle":
            values["mass_closed_form_residual"] = envmod.square_triangle_mass_residual(env)
            exact.append("mass_closed_form_residual")
        passed = all(values[key] < EXACT_TOL for key in exact) and all(
            values[key] < STAGE_TOL
            for key in values
            if key not in exact
        )
        return reports.StageRecord(name="kernel-checks", passed=passed, values=values)

    def stage_nash(self) -> reports.StageRecord:
        env, cfg = self.env, self.cfg
        k = analysis.assemble_kernel(env)
        d = env.dimension
        probe_n = cfg.param("probe_n", cycles.DEFAULT_PROBE_N.get(cfg.model.name, 2))
        rep = envmod.validate_assumptions(env, probe_n=probe_n, probe_eps=cfg.param("probe_eps", 1e-9))
        cons = analysis.constructive_dilation_params(d, env.range_b, probe_n, rep.eps0)
        scan_cap = min(cons["m"], cfg.param("m_max_scan", 8))
        cert = analysis.dilation_scan(k, m_max=scan_cap)
        m = cfg.param("m", cert.m if cert is not None else 1)
        nash = analysis.nash_estimate(k, m=m, trials=cfg.param("trials", 256), seed=cfg.seed)
        g = analysis.symmetrized_power(k, m)
        sets = analysis.default_set_family(cfg.side, d, cfg.seed)
        iso = analysis.isoperimetric_check(g, sets)
        rec = analysis.nash_recursion_check(
            cfg.param("recursion_u1", 1.0),
            cfg.param("recursion_kappa", 0.1),
            d,
            cfg.param("recursion_n_max", 10**4),
        )
        self.write_csv(
            "iso_sets.csv",
            ["label", "ratio"],
            ((label, r) for (label, _), r in zip(sets, iso.ratios.tolist())),
        )
        passed = (
            rep.certified
            and cert is not None
            and cert.m <= cons["m"]
            and nash.certified
            and nash.kappa > 0
            and rec.ok
        )
        return reports.StageRecord(
            name="nash",
            passed=passed,
            values={
                "constructive": cons,
                "certified_m": None if cert is None else cert.m,
                "certified_k_radius": None if cert is None else cert.k_radius,
                "certified_delta": None if cert is None else cert.delta,
                "m": m,
                "kappa": nash.kappa,
                "worst_ratio": nash.worst_ratio,
                "worst_family": nash.worst_family,
                "trials": nash.trials,
                "iso_kappa": iso.kappa,
                "iso_worst_set": iso.worst_label,
                "recursion_ok": rec.ok,
                "recursion_c0": rec.c0,
            },
        )

    def stage_decay(self) -> reports.StageRecord:
        env, cfg = self.env, self.cfg
        k = analysis.assemble_kernel(env)
        d = env.dimension
        default_n = max(16, (cfg.side // (2 * env.range_b)) ** 2)
        n_max = cfg.param("n_max", default_n)
        tables = analysis.decay_tables(k, n_max)
        dec = analysis.ondiag_decay(k, n_max, tables=tables)
        fit = analysis.gaussian_bound_fit(k, n_max, tables=tables)
        self.write_csv(
            "decay.csv",
            ["n", "u", "scaled"],
            zip(dec.n.tolist(), dec.u.tolist(), (dec.u * dec.n ** (d / 2.0)).tolist()),
        )
        monotone = bool(np.all(np.diff(dec.u) <= 1e-15))
        band = cfg.param("slope_band", 0.15)
        slope_ok = np.isfinite(dec.slope) and abs(dec.slope + d / 2.0) <= band
        passed = monotone and slope_ok and fit.max_violation <= 0
        return reports.StageRecord(
            name="decay",
            passed=passed,
            values={
                "n_max": n_max,
                "u_monotone": monotone,
                "slope": dec.slope,
                "slope_target": -d / 2.0,
                "slope_band": band,
                "intercept": dec.intercept,
                "c1": dec.c1,
                "c3": fit.c3,
                "envelope_violation": fit.max_violation,
                "window": list(dec.window),
                "saturated_at": dec.saturated_at,
                "flat_value": dec.flat_value,
            },
        )

    def _solve_corrector(self):
        if self._corrector_cache is None:
            chain = corr.build_env_chain(self.env)
            drift = corr.local_drift(chain)
            sol = corr.poisson_solve(
                chain,
                drift,
                tol=self.cfg.param("tol", 1e-12),
                method=self.cfg.param("method", "iterative"),
                max_sweeps=self.cfg.param("max_sweeps", 10**6),
            )
            self._corrector_cache = (chain, drift, sol)
        return self._corrector_cache

    def stage_corrector(self) -> reports.StageRecord:
        env, cfg = self.env, self.cfg
        chain, drift, sol = self._solve_corrector()
        mart = montecarlo.martingale_residual(env, sol)
        trials = cfg.param("trials", 1000)
        sector = corr.sector_condition_check(chain, trials=trials, seed=cfg.seed)
        hchecks = []
        for axis in range(env.dimension):
            direction = np.zeros(env.dimension)
            direction[axis] = 1.0
            hchecks.append(
                corr.h_minus_one_check(chain, drift, direction, trials=trials, seed=cfg.seed)
            )
        lambdas = list(cfg.param("lambdas", list(DEFAULT_LAMBDAS)))
        sweep = corr.lambda_sweep(chain, drift, lambdas)
        eigs = np.linalg.eigvalsh(sol.A)

        coords = self._coords()
        self.write_csv(
            "corrector.csv",
            [f"x{a}" for a in range(env.dimension)]
            + [f"chi{a}" for a in range(env.dimension)],
            (list(c) + list(row) for c, row in zip(coords.tolist(), sol.chi.tolist())),
        )
        self.write_csv(
            "lambda_sweep.csv",
            ["lam", "resolvent_norm"],
            zip(sweep.lambdas.tolist(), sweep.resolvent_norms.tolist()),
        )
        # zero drift solves exactly to chi = 0 and every diagnostic sequence
        # vanishes identically; strict decrease only makes sense otherwise
        degenerate = drift.sup_norm <= 1e-14
        norms_down = bool(np.all(np.diff(sweep.resolvent_norms) < 0)) or (
            degenerate and float(np.max(sweep.resolvent_norms)) <= 1e-14
        )
        incs_down = bool(np.all(np.diff(sweep.increment_norms, axis=0) < 0)) or (
            degenerate and float(np.max(sweep.increment_norms)) <= 1e-14
        )
        residuals_ok = all(v < STAGE_TOL for v in sol.residuals.values()) and mart < STAGE_TOL
        passed = (
            residuals_ok
            and sector.ok
            and all(h.ok for h in hchecks)
            and bool(eigs.min() > 0)
            and norms_down
            and incs_down
        )
        return reports.StageRecord(
            name="corrector",
            passed=passed,
            values={
                "residuals": sol.residuals,
                "martingale_residual": mart,
                "sweeps": sol.sweeps,
                "sector_max_ratio": sector.max_ratio,
                "sector_bound": sector.bound,
                "h_minus_one_max_ratios": [h.max_ratio for h in hchecks],
                "h_minus_one_bound": hchecks[0].bound,
                "trials": trials,
                "covariance": sol.A,
                "covariance_eigs": eigs,
                "resolvent_norms_decreasing": norms_down,
                "increment_norms_decreasing": incs_down,
            },
        )

    def stage_clt(self) -> reports.StageRecord:
        env, cfg = self.env, self.cfg
        _, _, sol = self._solve_corrector()
        n_steps = cfg.param("n_steps", 4096)
        walkers = cfg.param("walkers", 100000)
        res = montecarlo.quenched_clt_experiment(
            env,
            sol,
            n_steps=n_steps,
            walkers=walkers,
            seed=cfg.seed,
            checkpoints=cfg.param("checkpoints", None),
            keep_positions=bool(cfg.param("keep_walkers", False)),
        )
        d = env.dimension
        cov_header = [f"cov{i}{j}" for i in range(d) for j in range(d)]
        self.write_csv(
            "clt_checkpoints.csv",
            ["n"]
            + [f"mean{i}" for i in range(d)]
            + [f"mmean{i}" for i in range(d)]
            + cov_header
            + [f"se{i}{j}" for i in range(d) for j in range(d)]
            + [f"z{i}{j}" for i in range(d) for j in range(d)]
            + ["corrector_share"],
            (
                [s.n]
                + list(s.mean)
                + list(s.martingale_mean)
                + list(s.cov.ravel())
                + list(s.se.ravel())
                + list(s.z_scores.ravel())
                + [s.corrector_share]
                for s in res.checkpoints
            ),
        )
        if res.final_positions is not None:
            self.write_csv(
                "walkers.csv",
                [f"x{a}" for a in range(d)],
                (list(row) for row in res.final_positions.tolist()),
            )
        final = res.final
        band = np.maximum(4.0 * final.se, 0.05 * np.abs(res.target))
        cov_ok = bool(np.all(np.abs(final.cov - res.target) <= band))
        # X_n carries the bounded transient -E[chi(X_n)], so center the mean
        # test on the martingale part, which has mean exactly zero at every n
        # (and equals X_n itself whenever chi vanishes).
        mean_se = np.sqrt(np.diagonal(final.martingale_cov) / walkers)
        mean_ok = bool(np.all(np.abs(final.martingale_mean) <= 4.0 * mean_se))
        shares = [s.corrector_share for s in res.checkpoints]
        shares_down = all(a > b for a, b in zip(shares, shares[1:])) or all(
            s <= 1e-12 for s in shares
        )
        passed = cov_ok and mean_ok and shares_down
        return reports.StageRecord(
            name="clt",
            passed=passed,
            values={
                "n_steps": n_steps,
                "walkers": walkers,
                "target": res.target,
                "empirical_cov": final.cov,
                "max_abs_z": float(np.abs(final.z_scores).max()),
                "cov_within_band": cov_ok,
                "mean": final.mean,
                "martingale_mean": final.martingale_mean,
                "mean_within_4se": mean_ok,
                "corrector_shares": shares,
                "shares_decreasing": shares_down,
                "martingale_cov": final.martingale_cov,
            },
        )


def _seed_manifest_run(cfg: configmod.ExperimentConfig, out_dir: str) -> reports.RunManifest:
    manifest = reports.RunManifest(
        command="seed-manifest",
        config_hash=cfg.config_hash(),
        version=__version__,
        seed=cfg.seed,
        side=cfg.side,
        model_name=cfg.model.name,
        backend=backend.active(),
    )
    os.makedirs(out_dir, exist_ok=True)
    walkers = cfg.param("walkers", 100000)
    trials = cfg.param("trials", 1000)
    cap = cfg.param("manifest_rows", 64)
    # stream roots: the fold state after the identity words; equal roots
    # would mean bit-identical draw sequences, so scan all of them
    rows = [("environment", "identity(seed)", cfg.seed)]
    for w in range(walkers):
        rows.append((f"walker_{w}", f"hash(seed, TAG_WALKER, {w})", rng.walker_stream(cfg.seed, w)))
    for t in range(2 * trials):
        rows.append(
            (
                f"testfunc_{t}",
                f"hash(seed, substream(TAG_TESTFUNC, {t}))",
                rng.hash_words(cfg.seed, rng.substream(rng.TAG_TESTFUNC, t)),
            )
        )
    for t in range(trials):
        rows.append(
            (
                f"subset_{t}",
                f"hash(seed, substream(TAG_SUBSET, {t}))",
                rng.hash_words(cfg.seed, rng.substream(rng.TAG_SUBSET, t)),
            )
        )
    values = [r[2] for r in rows]
    distinct = len(set(values)) == len(values)
    per_family = {}
    written = []
    for row in rows:
        family = row[0].rsplit("_", 1)[0]
        per_family[family] = per_family.get(family, 0) + 1
        if per_family[family] <= cap:
            written.append(row)
    reports.write_csv(os.path.join(out_dir, "seeds.csv"), ["stream", "derivation", "value"], written)
    manifest.artifacts.append("seeds.csv")
    manifest.add(
        reports.StageRecord(
            name="seed-manifest",
            passed=distinct,
            values={
                "n_streams": len(rows),
                "all_distinct": distinct,
                "rows_written": len(written),
            },
        )
    )
    return manifest


ALL_COMMANDS = configmod.COMMANDS + ("seed-manifest",)
FULL_REPORT_STAGES = ["validate", "kernel-checks", "nash", "decay", "corrector", "clt"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits with code 2
        raise ConfigurationError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rwre", description="cycle-weight random walk diagnostics")
    p.add_argument("command", choices=ALL_COMMANDS)
    p.add_argument("--config", required=True, help="JSON experiment config")
    p.add_argument("--out", help="output directory (default: rwre-out/<command>-<hash>)")
    p.add_argument("--seed", type=int, help="override the config master seed")
    p.add_argument("--threads", type=int, help="compiled-backend thread count")
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigurationError as err:
        print(f"rwre: configuration error: {err}", file=sys.stderr)
        return 3

    try:
        cfg = configmod.load_config(args.config)
        if args.seed is not None:
            if not (0 <= args.seed < 2**64):
                raise ConfigurationError("--seed must be in [0, 2^64)")
            raw = dict(cfg.raw)
            raw["seed"] = args.seed
            cfg = configmod.parse_config(raw)
        if args.threads is not None:
            if args.threads < 1:
                raise ConfigurationError("--threads must be positive")
            if backend.HAVE_NUMBA:
                import numba

                numba.set_num_threads(args.threads)
    except ConfigurationError as err:
        print(f"rwre: configuration error: {err}", file=sys.stderr)
        return 3

    out_dir = args.out or cfg.out_dir or os.path.join(
        "rwre-out", f"{args.command}-{cfg.config_hash()[:8]}"
    )

    t_start = time.perf_counter()
    try:
        if args.command == "seed-manifest":
            manifest = _seed_manifest_run(cfg, out_dir)
            timings = {"seed-manifest": time.perf_counter() - t_start}
        else:
            runner = _Runner(cfg, out_dir)
            stages = FULL_REPORT_STAGES if args.command == "full-report" else [args.command]
            runner.run(args.command, stages)
            manifest, timings = runner.manifest, runner.timings
        timings["total"] = time.perf_counter() - t_start
        report = reports.write_artifacts(out_dir, manifest, timings)
    except ConfigurationError as err:
        print(f"rwre: configuration error: {err}", file=sys.stderr)
        return 3
    except NumericalError as err:
        print(f"rwre: numerical non-convergence: {err}", file=sys.stderr)
        return 4
    except (ContractError, DataError) as err:
        print(f"rwre: check failure: {err}", file=sys.stderr)
        return 2
    except RwreError as err:
        print(f"rwre: error: {err}", file=sys.stderr)
        return 2

    sys.stdout.write(report)
    sys.stdout.write(f"wrote {out_dir}\n")
    return 0 if manifest.all_passed else 2


if __name__ == "__main__":
    sys.exit(main())

"""Monte-Carlo comparison of spectral estimators on simulated GNAR data.

Estimators
----------
EM1  parametric GNAR spectrum (least squares, known or BIC-selected order)
EM2  parametric VAR spectrum
EM3  EM2 refined by covariance selection under the GNAR-induced mask
EM4  EM2 refined by covariance selection under the first-stage adjacency
EM5  smoothed periodogram refined under the GNAR-induced mask
EM6  smoothed periodogram refined under the first-stage adjacency
EM7  smoothed periodogram
"""

from __future__ import annotations

import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .gnar import EstimationError, GnarParams, fit_ols, select_order_bic, simulate
from .graph import Network, NetworkContext
from .hierarchy import r_dependent_spectrum, select_thresholds, threshold_precision
from .periodogram import (
    SmoothingSpec,
    fit_var_ols,
    penalize_field,
    penalty_mask,
    select_var_order_bic,
    smoothed_periodogram,
)
from .spectra import SpectralField, all_targets, fourier_grid, gnar_spectrum, precision, var_spectrum

METHODS = ("EM1", "EM2", "EM3", "EM4", "EM5", "EM6", "EM7")
TARGETS = ("spectrum", "coherence", "partial_coherence")
MODES = ("known_order", "bic_misspec")


def builtin_models() -> dict[str, GnarParams]:
    """Simulation models M1-M5 with unit innovation variance."""
    return {
        "M1": GnarParams([0.2, 0.2], [[0.2], [0.1]]),
        "M2": GnarParams([0.1, 0.1], [[0.075], [0.05, 0.15]]),
        "M3": GnarParams([0.2, 0.1], [[0.075, 0.05], [0.05, 0.05, 0.1]]),
        "M4": GnarParams([0.1, 0.075, 0.05], [[0.1], [0.075, 0.075], [0.05, 0.05, 0.05]]),
        "M5": GnarParams([0.15, 0.1, 0.05], [[0.05] * 3, [0.05] * 3, [0.05] * 3]),
    }


def fixed_network(name) -> Network:
    """Shipped benchmark network: ``net5``/5 or ``net10``/10."""
    from .io import builtin_network

    return builtin_network(str(name))


def rmse(estimates, truth: SpectralField) -> float:
    """sqrt(mean over replicates and frequencies of the squared Frobenius error)."""
    estimates = list(estimates)
    if not estimates:
        raise ValueError("no estimates")
    total = 0.0
    for est in estimates:
        if est.values.shape != truth.values.shape or not np.allclose(est.freqs, truth.freqs):
            raise ValueError("estimate and truth are on different grids")
        total += float(np.sum(np.abs(est.values - truth.values) ** 2))
    return float(np.sqrt(total / (len(estimates) * len(truth))))


def squared_error(est: SpectralField, truth: SpectralField) -> float:
    if est.values.shape != truth.values.shape:
        raise ValueError("estimate and truth are on different grids")
    return float(np.sum(np.abs(est.values - truth.values) ** 2))


@dataclass
class ExperimentSpec:
    """Settings for :func:`run_experiment`.

    ``models`` holds builtin ids or ``(name, GnarParams)`` pairs; ``networks``
    holds builtin names or ``(name, Network)`` pairs.
    """

    models: list = field(default_factory=lambda: ["M1"])
    networks: list = field(default_factory=lambda: ["net10"])
    T: list = field(default_factory=lambda: [100, 200, 500, 1000])
    R: int = 100
    methods: list = field(default_factory=lambda: list(METHODS))
    mode: str = "known_order"
    seed: int = 20240601
    p_max: int = 3
    s_max: int = 3
    var_p_max: int = 3
    bandwidth: int | None = None
    workers: int = 1

    def __post_init__(self):
        if self.R < 1:
            raise ValueError("R must be >= 1")
        if not self.methods:
            raise ValueError("at least one method is required")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")

    def resolved_models(self):
        table = builtin_models()
        out = []
        for m in self.models:
            if isinstance(m, str):
                if m not in table:
                    raise ValueError(f"unknown model {m!r}")
                out.append((m, table[m]))
            else:
                out.append(tuple(m))
        return out

    def resolved_networks(self):
        return [(n, fixed_network(n)) if isinstance(n, (str, int)) else tuple(n) for n in self.networks]

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentSpec":
        known = set(cls.__dataclass_fields__)
        extra = set(obj) - known
        if extra:
            raise ValueError(f"unknown experiment keys {sorted(extra)}")
        return cls(**obj)


@dataclass
class RmseReport:
    """Long-format results; one record per (model, network, method, T, target)."""

    records: list
    runtime: float = 0.0

    def value(self, model, network, method, T, target="spectrum") -> float:
        for r in self.records:
            if (r["model"], r["network"], r["method"], r["T"], r["target"]) == (model, network, method, T, target):
                return r["rmse"]
        raise KeyError((model, network, method, T, target))

    def to_rows(self):
        cols = list(self.records[0]) if self.records else []
        return cols, [[r[c] for c in cols] for r in self.records]


def _estimate(method, X, ctx, order, mode, spec, cache):
    """Spectral estimate of one method on one panel (shared work cached per panel)."""
    T = X.shape[0]
    grid = fourier_grid(T)
    order = cache.get("order", order)
    r_star = max(1, max(order.s, default=1))
    if method == "EM1":
        params, _ = fit_ols(X, order, ctx)
        return gnar_spectrum(params, ctx, grid)
    if method in ("EM2", "EM3", "EM4"):
        if "var" not in cache:
            p = order.p if mode == "known_order" else select_var_order_bic(X, spec.var_p_max)
            Phi, V, _ = fit_var_ols(X, p)
            cache["var"] = var_spectrum(Phi, V, grid)
        field = cache["var"]
        if method == "EM2":
            return field
        pen = "induced" if method == "EM3" else "a1"
        return penalize_field(field, penalty_mask(ctx, pen, r_star))
    if "np" not in cache:
        sm = SmoothingSpec.daniell(spec.bandwidth) if spec.bandwidth is not None else None
        cache["np"] = smoothed_periodogram(X, sm)
    field = cache["np"]
    if method == "EM7":
        return field
    pen = "induced" if method == "EM5" else "a1"
    return penalize_field(field, penalty_mask(ctx, pen, r_star))


def _replicate(args):
    """Squared errors of every method and target for one simulated panel."""
    spec, params, net, T, seed_seq = args
    ctx = NetworkContext.from_network(net)
    truth = all_targets(gnar_spectrum(params, ctx, fourier_grid(T)))
    X = simulate(params, ctx, T, seed=np.random.default_rng(seed_seq))
    out, cache = {}, {}
    if spec.mode == "bic_misspec":
        cache["order"] = select_order_bic(X, ctx, spec.p_max, min(spec.s_max, ctx.r_max))
        out["_order"] = str(cache["order"])
    for method in spec.methods:
        try:
            est = all_targets(_estimate(method, X, ctx, params.order, spec.mode, spec, cache))
            out[method] = {t: squared_error(est[t], truth[t]) for t in TARGETS}
        except (EstimationError, np.linalg.LinAlgError) as exc:
            out[method] = exc.__class__.__name__
    return out


def _seed(spec_seed, *keys):
    return np.random.SeedSequence([spec_seed, *keys])


def _map(fn, jobs, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, jobs, chunksize=4))
    return [fn(j) for j in jobs]


def run_experiment(spec: ExperimentSpec) -> RmseReport:
    """Monte-Carlo RMSE of each method and target, per model, network and T.

    Replicates failing for a method are excluded from that method's average
    and counted in ``n_excluded``.
    """
    t0 = time.perf_counter()
    records = []
    for mi, (mname, params) in enumerate(spec.resolved_models()):
        for ni, (nname, net) in enumerate(spec.resolved_networks()):
            for T in spec.T:
                jobs = [(spec, params, net, T, _seed(spec.seed, mi, ni, T, rep)) for rep in range(spec.R)]
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    results = _map(_replicate, jobs, spec.workers)
                n_T = len(fourier_grid(T))
                for method in spec.methods:
                    ok = [r[method] for r in results if isinstance(r[method], dict)]
                    for target in TARGETS:
                        val = np.sqrt(sum(o[target] for o in ok) / (len(ok) * n_T)) if ok else float("nan")
                        records.append(
                            {
                                "model": mname,
                                "network": nname,
                                "method": method,
                                "T": T,
                                "target": target,
                                "rmse": float(val),
                                "n_included": len(ok),
                                "n_excluded": spec.R - len(ok),
                            }
                        )
                orders = [r["_order"] for r in results if "_order" in r]
                if orders:
                    records.append(
                        {
                            "model": mname,
                            "network": nname,
                            "method": "EM1",
                            "T": T,
                            "target": "order_recovery",
                            "rmse": float(np.mean([o == str(params.order) for o in orders])),
                            "n_included": len(orders),
                            "n_excluded": spec.R - len(orders),
                        }
                    )
    return RmseReport(records, time.perf_counter() - t0)


def _hierarchy_replicate(args):
    spec, params, net, T, r_star, xi_override, seed_seq = args
    ctx = NetworkContext.from_network(net)
    grid = fourier_grid(T)
    f_true = gnar_spectrum(params, ctx, grid)
    S_true = precision(f_true)
    true_ladder = select_thresholds(S_true, ctx.stages, r_star)
    X = simulate(params, ctx, T, seed=np.random.default_rng(seed_seq))
    fitted, _ = fit_ols(X, params.order, ctx)
    f_hat = gnar_spectrum(fitted, ctx, grid)
    S_hat = precision(f_hat)
    ladder = select_thresholds(S_hat, ctx.stages, r_star)
    out = {"EM1": squared_error(f_hat, f_true)}
    for r in range(1, r_star + 1):
        xi = ladder[r] if xi_override is None else xi_override
        try:
            f_r = r_dependent_spectrum(threshold_precision(S_hat, xi))
            out[("full", r)] = squared_error(f_r, f_true)
        except EstimationError:
            out[("full", r)] = None
        try:
            xi_t = true_ladder[r] if xi_override is None else xi_override
            f_true_r = r_dependent_spectrum(threshold_precision(S_true, xi_t))
            out[("thresholded", r)] = squared_error(f_r, f_true_r) if out[("full", r)] is not None else None
        except EstimationError:
            out[("thresholded", r)] = None
    return out


def run_hierarchy_experiment(spec: ExperimentSpec, r_star: int | None = None, xi_override: float | None = None) -> RmseReport:
    """RMSE of the r-dependent spectra built from EM1, for r = 1..r*.

    Each record carries the RMSE against the full true spectrum
    (``target="spectrum"``) and against the true spectrum thresholded with
    its own ladder (``target="thresholded_spectrum"``).  Method labels are
    ``r=1``, ``r=2``, ...; ``EM1`` is the unthresholded reference.
    ``xi_override`` replaces every threshold (0 reproduces EM1).
    """
    t0 = time.perf_counter()
    records = []
    for mi, (mname, params) in enumerate(spec.resolved_models()):
        rs = r_star if r_star is not None else max(1, max(params.order.s, default=1))
        for ni, (nname, net) in enumerate(spec.resolved_networks()):
            for T in spec.T:
                jobs = [
                    (spec, params, net, T, rs, xi_override, _seed(spec.seed, mi, ni, T, rep, 7))
                    for rep in range(spec.R)
                ]
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", RuntimeWarning)
                    results = _map(_hierarchy_replicate, jobs, spec.workers)
                n_T = len(fourier_grid(T))
                keys = [("EM1", "spectrum", "EM1")] + [
                    (f"r={r}", tgt, (kind, r))
                    for r in range(1, rs + 1)
                    for tgt, kind in (("spectrum", "full"), ("thresholded_spectrum", "thresholded"))
                ]
                for label, target, key in keys:
                    ok = [res[key] for res in results if res[key] is not None]
                    val = np.sqrt(sum(ok) / (len(ok) * n_T)) if ok else float("nan")
                    records.append(
                        {
                            "model": mname,
                            "network": nname,
                            "method": label,
                            "T": T,
                            "target": target,
                            "rmse": float(val),
                            "n_included": len(ok),
                            "n_excluded": spec.R - len(ok),
                        }
                    )
    return RmseReport(records, time.perf_counter() - t0)

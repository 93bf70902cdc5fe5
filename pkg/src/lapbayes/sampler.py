"""Adaptive random-walk Metropolis over the unconstrained space.

Proposals are multivariate normal steps with a full covariance learned
during warmup: Robbins-Monro scale adaptation toward a joint acceptance
rate of 0.234 plus a shrinkage-regularized empirical covariance, both
frozen when warmup ends so recorded draws satisfy detailed balance.

Each chain draws from its own counter-based Philox stream keyed by
(seed, chain index); runs are bitwise reproducible and identical whether
chains execute sequentially or on a thread pool.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import rankdata

from lapbayes.errors import (
    AdaptationError,
    ConfigurationError,
    InitializationError,
)

_COV_REFRESH = 100
_COV_RIDGE = 1e-6
_RM_DECAY = 0.6


@dataclass(frozen=True)
class SamplerConfig:
    n_chains: int = 4
    warmup: int = 2_000
    samples: int = 5_000
    seed: int = 0
    target_acceptance: float = 0.234
    init_jitter: float = 1.0
    thin: int = 1
    n_workers: int = 1
    adapt: bool = True

    def __post_init__(self):
        if self.n_chains < 1:
            raise ConfigurationError("n_chains must be >= 1")
        if self.adapt and self.warmup < 100:
            raise ConfigurationError("warmup must be >= 100 when adaptation is on")
        if not 0.0 < self.target_acceptance < 1.0:
            raise ConfigurationError("target_acceptance must be in (0, 1)")
        if self.init_jitter <= 0:
            raise ConfigurationError("init_jitter must be positive")
        if self.samples < 1 or self.thin < 1:
            raise ConfigurationError("samples and thin must be >= 1")


class SampleBatch:
    """Multi-chain draws on the constrained scale plus derived traces."""

    def __init__(self, column_names, params, observable_names, observables,
                 acceptance_rates, config, warnings_=()):
        self.column_names = list(column_names)
        self.params = params  # (chains, samples, P)
        self.observable_names = list(observable_names)
        self.observables = observables  # (chains, samples, O)
        self.acceptance_rates = list(acceptance_rates)
        self.config = config
        self.warnings = list(warnings_)

    @property
    def n_chains(self):
        return self.params.shape[0]

    @property
    def n_samples(self):
        return self.params.shape[1]

    def _index(self, name):
        if name in self.column_names:
            return ("p", self.column_names.index(name))
        if name in self.observable_names:
            return ("o", self.observable_names.index(name))
        raise KeyError(f"unknown trace {name!r}; have "
                       f"{self.column_names + self.observable_names}")

    def trace(self, name) -> np.ndarray:
        """(chains, samples) trace for a parameter column or observable."""
        kind, j = self._index(name)
        return self.params[:, :, j] if kind == "p" else self.observables[:, :, j]

    def flat(self, name) -> np.ndarray:
        """Pooled 1-D draws for a column or observable."""
        return self.trace(name).reshape(-1)

    def all_names(self):
        return self.column_names + self.observable_names

    def diagnostics(self) -> dict:
        return diagnostics(self)

    def to_csv(self, path):
        """Draw CSV: header chain,iter,<params...>,<observables...>."""
        names = self.all_names()
        with open(path, "w", newline="") as fh:
            fh.write("chain,iter," + ",".join(names) + "\n")
            for c in range(self.n_chains):
                for i in range(self.n_samples):
                    row = np.concatenate((self.params[c, i], self.observables[c, i]))
                    vals = ",".join(f"{v:.17g}" for v in row)
                    fh.write(f"{c + 1},{i + 1},{vals}\n")

    def write_diagnostics_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.diagnostics(), fh, indent=2, sort_keys=True)


def _run_single_chain(target, config, chain_index, progress=None):
    space = target.space
    d = space.dim
    rng = np.random.Generator(
        np.random.Philox(key=np.array([config.seed & (2**64 - 1), chain_index],
                                      dtype=np.uint64))
    )

    u = None
    for _ in range(100):
        cand = config.init_jitter * rng.standard_normal(d)
        if np.isfinite(target.log_density(cand)):
            u = cand
            break
    if u is None:
        raise InitializationError(
            f"chain {chain_index}: no finite log density among 100 jittered "
            "initialization points; check priors/beliefs for empty support"
        )
    lp = target.log_density(u)

    log_scale = math.log(2.38 / math.sqrt(d))
    L = np.eye(d)
    mean = np.zeros(d)
    m2 = np.zeros((d, d))
    count = 0
    accept_warm = 0
    cov_resets = {config.warmup // 4, config.warmup // 2}

    n_keep = config.samples
    total_iter = config.warmup + n_keep * config.thin
    kept_u = np.empty((n_keep, d))
    accept_sample = 0
    kept = 0
    report_every = max(total_iter // 20, 1)

    for t in range(total_iter):
        in_warmup = t < config.warmup
        step = math.exp(log_scale) * (L @ rng.standard_normal(d))
        prop = u + step
        lp_prop = target.log_density(prop)
        if lp_prop == -math.inf:
            alpha = 0.0
        else:
            alpha = math.exp(min(0.0, lp_prop - lp))
        if rng.uniform() < alpha:
            u, lp = prop, lp_prop
            if in_warmup:
                accept_warm += 1
            else:
                accept_sample += 1

        if in_warmup and config.adapt:
            log_scale += (t + 1.0) ** (-_RM_DECAY) * (alpha - config.target_acceptance)
            if t + 1 in cov_resets:
                # drop the early transient so it cannot poison the proposal
                mean = np.zeros(d)
                m2 = np.zeros((d, d))
                count = 0
            count += 1
            delta = u - mean
            mean += delta / count
            m2 += np.outer(delta, u - mean)
            if count >= max(2 * d, 100) and (t + 1) % _COV_REFRESH == 0:
                cov = m2 / (count - 1) + _COV_RIDGE * np.eye(d)
                L = np.linalg.cholesky(cov)
            if t + 1 == config.warmup and accept_warm == 0:
                raise AdaptationError(
                    f"chain {chain_index}: every warmup proposal was rejected; "
                    "adaptation failed"
                )

        if not in_warmup:
            s = t - config.warmup
            if (s + 1) % config.thin == 0:
                kept_u[kept] = u
                kept += 1
        if progress is not None and (t + 1) % report_every == 0:
            progress(chain_index, (t + 1) / total_iter)

    accept_rate = accept_sample / (n_keep * config.thin)

    # constrained rows + derived traces; observables shadowing a parameter
    # column (identity functionals) are not recorded twice
    col_names = space.column_names()
    p_cols = len(col_names)
    obs_names = [n for n in sorted(target.observables) if n not in col_names]
    params_out = np.empty((n_keep, p_cols))
    obs_out = np.empty((n_keep, len(obs_names)))
    for i in range(n_keep):
        params, _ = space.constrain(kept_u[i])
        params_out[i] = space.flatten_constrained(params)
        for j, name in enumerate(obs_names):
            obs_out[i, j] = target.observables[name](params)
    return params_out, obs_out, accept_rate


def run_chains(target, config: SamplerConfig, progress=None) -> SampleBatch:
    """Run adaptive Metropolis chains against a TargetDensity.

    ``progress``, if given, is called as progress(fraction_done) with the
    overall completed fraction across chains.
    """
    chain_progress = None
    if progress is not None:
        fractions = [0.0] * config.n_chains

        def chain_progress(idx, frac):
            fractions[idx] = frac
            progress(sum(fractions) / config.n_chains)

    if config.n_workers > 1 and config.n_chains > 1:
        with ThreadPoolExecutor(max_workers=config.n_workers) as pool:
            results = list(
                pool.map(
                    lambda c: _run_single_chain(target, config, c, chain_progress),
                    range(config.n_chains),
                )
            )
    else:
        results = [
            _run_single_chain(target, config, c, chain_progress)
            for c in range(config.n_chains)
        ]

    params = np.stack([r[0] for r in results])
    observables = np.stack([r[1] for r in results])
    rates = [r[2] for r in results]
    notes = []
    for c, rate in enumerate(rates):
        if not 0.1 <= rate <= 0.5:
            notes.append(
                f"chain {c}: post-warmup acceptance rate {rate:.3f} outside [0.1, 0.5]"
            )
    col_names = target.space.column_names()
    return SampleBatch(
        column_names=col_names,
        params=params,
        observable_names=[n for n in sorted(target.observables) if n not in col_names],
        observables=observables,
        acceptance_rates=rates,
        config=config,
        warnings_=notes,
    )


# ---------------------------------------------------------------------------
# Convergence diagnostics
# ---------------------------------------------------------------------------

def _split_chains(x: np.ndarray) -> np.ndarray:
    """(m, n) -> (2m, n//2), dropping one draw from odd-length chains."""
    m, n = x.shape
    half = n // 2
    return np.concatenate((x[:, :half], x[:, n - half:]), axis=0)


def split_rhat(x: np.ndarray) -> float:
    """Split R-hat of a (chains, draws) array; nan when degenerate."""
    z = _split_chains(np.asarray(x, dtype=float))
    m, n = z.shape
    if n < 2:
        return float("nan")
    means = z.mean(axis=1)
    w = float(np.mean(np.var(z, axis=1, ddof=1)))
    b = n * float(np.var(means, ddof=1))
    if w == 0.0:
        return float("nan")
    var_plus = (n - 1) / n * w + b / n
    return math.sqrt(var_plus / w)


def _rank_normalize(x: np.ndarray) -> np.ndarray:
    shape = x.shape
    ranks = rankdata(x.reshape(-1), method="average")
    s = x.size
    return ndtri((ranks - 0.375) / (s + 0.25)).reshape(shape)


def _autocovariance_fft(z: np.ndarray) -> np.ndarray:
    """Biased autocovariances for each row of a (m, n) array."""
    m, n = z.shape
    centered = z - z.mean(axis=1, keepdims=True)
    size = 2 ** int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(centered, size, axis=1)
    acov = np.fft.irfft(f * np.conjugate(f), size, axis=1)[:, :n].real
    return acov / n


def ess_rank_normalized(x: np.ndarray) -> float:
    """Rank-normalized effective sample size of a (chains, draws) array."""
    z = _split_chains(np.asarray(x, dtype=float))
    m, n = z.shape
    if n < 4:
        return float("nan")
    if np.all(z == z.reshape(-1)[0]):
        return float("nan")
    z = _rank_normalize(z)
    acov = _autocovariance_fft(z)
    chain_var = acov[:, 0] * n / (n - 1.0)
    w = float(np.mean(chain_var))
    var_plus = float(np.mean(acov[:, 0]))
    if m > 1:
        var_plus += float(np.var(z.mean(axis=1), ddof=1))
    if var_plus == 0:
        return float("nan")
    rho = 1.0 - (w - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # Geyer initial monotone positive sequence on paired sums
    max_pairs = (n - 1) // 2
    tau = 1.0
    prev_pair = math.inf
    acc = 0.0
    for t in range(max_pairs):
        pair = rho[2 * t] + rho[2 * t + 1]
        if pair <= 0:
            break
        pair = min(pair, prev_pair)
        prev_pair = pair
        acc += pair
    tau = max(2.0 * acc - 1.0, 1.0 / math.inf) if acc > 0 else 1.0
    tau = max(tau, 1e-12)
    ess = m * n / tau
    return float(min(ess, m * n * math.log10(m * n + 1.0)))


def diagnostics(batch: SampleBatch) -> dict:
    """Split R-hat, rank-normalized ESS and acceptance flags per column."""
    out: dict = {
        "n_chains": batch.n_chains,
        "n_samples": batch.n_samples,
        "acceptance_rates": [float(r) for r in batch.acceptance_rates],
        "parameters": {},
        "flags": list(batch.warnings),
    }
    single = batch.n_chains < 2
    short = batch.n_samples < 100
    if single:
        out["flags"].append("single chain: split R-hat unavailable")
    if short:
        out["flags"].append("fewer than 100 post-warmup draws: diagnostics unreliable")
    for name in batch.all_names():
        x = batch.trace(name)
        entry: dict = {}
        if single:
            entry["rhat"] = None
        else:
            r = split_rhat(x)
            if math.isnan(r):
                entry["rhat"] = None
                entry["degenerate"] = True
                out["flags"].append(f"{name}: degenerate (constant) trace; R-hat undefined")
            else:
                entry["rhat"] = float(r)
                if r > 1.01:
                    out["flags"].append(f"{name}: split R-hat {r:.4f} > 1.01")
        e = ess_rank_normalized(x)
        entry["ess"] = None if math.isnan(e) else float(e)
        out["parameters"][name] = entry
    return out


# ---------------------------------------------------------------------------
# Distribution-matching test utility
# ---------------------------------------------------------------------------

def quantile_match_report(draws, ref_spec, probs) -> dict:
    """Per-probability deviations of empirical quantiles from a reference.

    Relative deviation by default; absolute (and flagged) where the
    reference quantile is exactly zero.
    """
    draws = np.asarray(draws, dtype=float).reshape(-1)
    if draws.size < 1_000:
        raise ConfigurationError(
            f"quantile_match needs >= 1000 draws, got {draws.size}"
        )
    rows = []
    for p in probs:
        emp = float(np.quantile(draws, p))
        ref = float(ref_spec.quantile(p))
        if ref == 0.0:
            rows.append({"prob": p, "empirical": emp, "reference": ref,
                         "deviation": abs(emp), "absolute": True})
        else:
            rows.append({"prob": p, "empirical": emp, "reference": ref,
                         "deviation": abs(emp - ref) / abs(ref), "absolute": False})
    return {"rows": rows, "max_deviation": max(r["deviation"] for r in rows)}


def quantile_match(draws, ref_spec, probs) -> float:
    """Max relative deviation of empirical vs reference quantiles."""
    return quantile_match_report(draws, ref_spec, probs)["max_deviation"]

"""Repeated-measures regression with expert opinion on change from baseline.

Fixed effects: intercept, group main effects, orthogonal linear and
quadratic time contrasts, and group-by-time interactions.  Per-subject
random intercept/slope/quadratic effects (independent scales) are
marginalized analytically, so the sampled space is the fixed effects plus
four scale parameters; the posterior over those is identical to sampling
the random effects explicitly, and the change-from-baseline observable
depends on the fixed effects alone.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from lapbayes.errors import ConfigurationError, IngestionError
from lapbayes.loss import ExpertBelief, LossTerm, ObservableFunctional, TargetDensity
from lapbayes.space import Block, ParameterSpace


def orthogonal_poly(times, degree: int = 2) -> np.ndarray:
    """Orthogonal polynomial contrasts: mean-zero, unit-norm columns.

    Gram-Schmidt on centered powers of the time vector; shifting all times
    by a constant leaves the result unchanged.
    """
    t = np.asarray(times, dtype=float)
    if np.unique(t).size < degree + 1:
        raise ConfigurationError(
            f"need at least {degree + 1} distinct time values for degree {degree}"
        )
    centered = t - t.mean()
    cols = []
    for d in range(1, degree + 1):
        col = centered**d
        col = col - col.mean()
        for prev in cols:
            col = col - (col @ prev) * prev
        norm = math.sqrt(float(col @ col))
        if norm < 1e-12:
            raise ConfigurationError("time values are rank deficient for the degree")
        cols.append(col / norm)
    return np.column_stack(cols)


@dataclass(frozen=True)
class RepeatedMeasuresData:
    ids: np.ndarray
    groups: np.ndarray
    times: np.ndarray
    responses: np.ndarray

    @staticmethod
    def from_columns(ids, groups, times, responses):
        ids = np.asarray(ids)
        groups = np.asarray(groups)
        times = np.asarray(times, dtype=float)
        responses = np.asarray(responses, dtype=float)
        n = ids.shape[0]
        if not (groups.shape[0] == times.shape[0] == responses.shape[0] == n):
            raise ConfigurationError("data columns must have equal length")
        return RepeatedMeasuresData(ids, groups, times, responses)

    @property
    def group_names(self):
        return sorted(set(str(g) for g in self.groups))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "group", "time", "response"])
            for i in range(self.ids.shape[0]):
                w.writerow([
                    self.ids[i], self.groups[i],
                    f"{self.times[i]:.17g}", f"{self.responses[i]:.17g}",
                ])


def load_repeated_measures_csv(path) -> RepeatedMeasuresData:
    """Read id,group,time,response rows; malformed rows raise with numbers."""
    ids, groups, times, responses = [], [], [], []
    bad = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:4]] != [
            "id", "group", "time", "response",
        ]:
            raise IngestionError(
                f"{path}: expected header id,group,time,response, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 4:
                bad.append(lineno)
                continue
            try:
                t = float(row[2])
                y = float(row[3])
            except ValueError:
                bad.append(lineno)
                continue
            if not row[0].strip() or not row[1].strip():
                bad.append(lineno)
                continue
            ids.append(row[0].strip())
            groups.append(row[1].strip())
            times.append(t)
            responses.append(y)
    if bad:
        raise IngestionError(f"{path}: malformed data rows {bad}", rows=bad)
    if not ids:
        raise IngestionError(f"{path}: no data rows")
    return RepeatedMeasuresData.from_columns(ids, groups, times, responses)


class RepeatedMeasuresModel:
    """Quadratic population time trends with per-subject random curves."""

    def __init__(self, data: RepeatedMeasuresData | None = None,
                 target_group: str = "WI",
                 design_times=(1, 2, 3, 4, 5, 6, 7),
                 groups=("CONT", "RI", "WI"),
                 fe_scale: float = 10.0,
                 fe_loc: float | None = None,
                 re_scale: float = 5.0,
                 sigma_scale: float = 5.0):
        self.data = data
        self.target_group = target_group
        if data is not None:
            self.groups = data.group_names
            self.design_times = np.unique(data.times)
        else:
            self.groups = sorted(str(g) for g in groups)
            self.design_times = np.unique(np.asarray(design_times, dtype=float))
        if self.design_times.size < 2:
            raise ConfigurationError("need at least 2 distinct timepoints")
        if self.target_group not in self.groups:
            raise ConfigurationError(
                f"target group {target_group!r} not among groups {self.groups}"
            )
        if data is not None:
            mask = data.groups.astype(str) == self.target_group
            if not np.any(mask):
                raise ConfigurationError(f"no rows for target group {target_group!r}")
        self.fe_scale = float(fe_scale)
        self.fe_loc = fe_loc  # None: zero-centered fixed-effect priors
        self.re_scale = float(re_scale)
        self.sigma_scale = float(sigma_scale)
        self._build_design()

    # -- design ------------------------------------------------------------------

    def _poly_lookup(self):
        """Map time -> (lin, quad) contrast values on the design times."""
        contr = orthogonal_poly(self.design_times, 2)
        return {t: (contr[i, 0], contr[i, 1]) for i, t in enumerate(self.design_times)}

    def _row(self, group: str, time: float, lookup) -> np.ndarray:
        g_idx = {g: i for i, g in enumerate(self.groups)}
        lin, quad = lookup[time]
        row = np.zeros(self.n_fixed)
        row[0] = 1.0
        for gi, g in enumerate(self.groups[1:]):
            row[1 + gi] = 1.0 if group == g else 0.0
        base = 1 + (len(self.groups) - 1)
        row[base] = lin
        row[base + 1] = quad
        for gi, g in enumerate(self.groups[1:]):
            if group == g:
                row[base + 2 + 2 * gi] = lin
                row[base + 2 + 2 * gi + 1] = quad
        return row

    def _build_design(self):
        g = len(self.groups)
        self.n_fixed = 1 + (g - 1) + 2 + 2 * (g - 1)
        lookup = self._poly_lookup()
        self._lookup = lookup
        t_first, t_last = self.design_times[0], self.design_times[-1]
        self.xi_vector = (
            self._row(self.target_group, t_last, lookup)
            - self._row(self.target_group, t_first, lookup)
        )
        self.fixed_effect_names = self._fixed_names()

        if self.data is None:
            return
        d = self.data
        n = d.ids.shape[0]
        X = np.empty((n, self.n_fixed))
        Z = np.empty((n, 3))
        for i in range(n):
            t = float(d.times[i])
            if t not in lookup:
                # unique() built the lookup from the same column; float repr safe
                raise ConfigurationError(f"time {t} missing from design times")
            X[i] = self._row(str(d.groups[i]), t, lookup)
            lin, quad = lookup[t]
            Z[i] = (1.0, lin, quad)
        self.X, self.Z, self.y = X, Z, d.responses.astype(float)
        # group rows by subject, then subjects by identical time pattern
        subj_rows: dict = {}
        for i, sid in enumerate(d.ids):
            subj_rows.setdefault(str(sid), []).append(i)
        self._patterns: dict = {}
        for sid, rows in subj_rows.items():
            rows = sorted(rows, key=lambda i: d.times[i])
            key = tuple(float(d.times[i]) for i in rows)
            self._patterns.setdefault(key, []).append(rows)

    def _fixed_names(self):
        names = ["intercept"]
        names += [f"group_{g}" for g in self.groups[1:]]
        names += ["time_lin", "time_quad"]
        for g in self.groups[1:]:
            names += [f"{g}_x_lin", f"{g}_x_quad"]
        return names

    # -- construction ----------------------------------------------------------

    @staticmethod
    def from_json(doc: dict, data: RepeatedMeasuresData | None = None):
        return RepeatedMeasuresModel(
            data=data,
            target_group=doc.get("target_group", "WI"),
            design_times=doc.get("design_times", (1, 2, 3, 4, 5, 6, 7)),
            groups=doc.get("groups", ("CONT", "RI", "WI")),
            fe_scale=doc.get("fe_scale", 10.0),
            fe_loc=doc.get("fe_loc"),
            re_scale=doc.get("re_scale", 5.0),
            sigma_scale=doc.get("sigma_scale", 5.0),
        )

    def to_json(self):
        return {
            "family": "repeated_measures",
            "target_group": self.target_group,
            "design_times": [float(t) for t in self.design_times],
            "groups": list(self.groups),
            "fe_scale": self.fe_scale,
            "fe_loc": self.fe_loc,
            "re_scale": self.re_scale,
            "sigma_scale": self.sigma_scale,
        }

    # -- target ------------------------------------------------------------------

    def build_target(self, beliefs=()) -> TargetDensity:
        if isinstance(beliefs, ExpertBelief):
            beliefs = [beliefs]
        beliefs = list(beliefs)
        if self.data is not None:
            # center the sampling coordinates at the OLS fit so chains start
            # in the posterior's neighborhood (affine reparameterization only)
            beta_hat, *_ = np.linalg.lstsq(self.X, self.y, rcond=None)
            resid = self.y - self.X @ beta_hat
            sig_hat = max(float(np.sqrt(resid @ resid / max(resid.size - self.n_fixed, 1))), 1e-3)
            xtx_inv = np.linalg.inv(self.X.T @ self.X)
            se = np.sqrt(np.diag(xtx_inv)) * sig_hat
            beta_block = Block(
                "beta", "real", self.n_fixed,
                center=tuple(float(b) for b in beta_hat),
                spread=tuple(float(max(3.0 * s, 1e-3)) for s in se),
            )
            log_sig = math.log(sig_hat)
            scale_block = Block("re_sd", "positive", 3, center=(log_sig,) * 3)
            sigma_block = Block("sigma", "positive", 1, center=(log_sig,))
        else:
            beta_block = Block("beta", "real", self.n_fixed)
            scale_block = Block("re_sd", "positive", 3)
            sigma_block = Block("sigma", "positive", 1)
        space = ParameterSpace([beta_block, scale_block, sigma_block])
        fe_var = self.fe_scale**2
        fe_loc = 0.0 if self.fe_loc is None else float(self.fe_loc)
        re_var = self.re_scale**2
        sg_var = self.sigma_scale**2

        def log_prior(p):
            beta, re_sd, sigma = p["beta"], p["re_sd"], p["sigma"]
            center = beta - fe_loc if fe_loc else beta
            lp = -0.5 * float(center @ center) / fe_var
            lp += -0.5 * float(re_sd @ re_sd) / re_var  # half-normal, positive block
            lp += -0.5 * sigma * sigma / sg_var
            return lp

        xi_fn = ObservableFunctional(
            "xi", lambda p, _c=self.xi_vector: float(_c @ p["beta"])
        )
        terms = []
        for belief in beliefs:
            if belief.observable_name != "xi":
                raise ConfigurationError(
                    f"belief targets unknown observable {belief.observable_name!r}; "
                    "this model exposes 'xi' (change from baseline)"
                )
            terms.append(LossTerm(xi_fn, belief))

        log_likelihood = self._marginal_likelihood() if self.data is not None else None

        return TargetDensity(
            space=space,
            log_prior=log_prior,
            loss_terms=terms,
            log_likelihood=log_likelihood,
            observables={"xi": xi_fn},
        )

    def _marginal_likelihood(self):
        X, y = self.X, self.y
        lookup = self._lookup
        patterns = []
        for key, subj_lists in self._patterns.items():
            z = np.array([(1.0, *lookup[t]) for t in key])  # (n_t, 3)
            idx = np.array(subj_lists)  # (n_subj, n_t) row indices
            patterns.append((z, idx))

        def log_likelihood(p):
            beta, re_sd, sigma = p["beta"], p["re_sd"], p["sigma"]
            resid = y - X @ beta
            total = 0.0
            for z, idx in patterns:
                n_t = z.shape[0]
                v = (z * (re_sd**2)) @ z.T + sigma**2 * np.eye(n_t)
                try:
                    cf = cho_factor(v, lower=True)
                except np.linalg.LinAlgError:
                    return -math.inf
                logdet = 2.0 * float(np.sum(np.log(np.diag(cf[0]))))
                r = resid[idx]  # (n_subj, n_t)
                solved = cho_solve(cf, r.T)
                quad = float(np.sum(r.T * solved))
                total += -0.5 * (idx.shape[0] * (n_t * math.log(2.0 * math.pi) + logdet) + quad)
            return total

        return log_likelihood

    def xi_posterior_sd_gls(self, re_sd, sigma) -> float:
        """Reference SD of the change from baseline at fixed variance params.

        Generalized least squares with the priors ignored; used to tune the
        synthetic generator and sanity-check the ESS heuristic inputs.
        """
        if self.data is None:
            raise ConfigurationError("needs data")
        lookup = self._lookup
        info = np.zeros((self.n_fixed, self.n_fixed))
        for key, subj_lists in self._patterns.items():
            z = np.array([(1.0, *lookup[t]) for t in key])
            n_t = z.shape[0]
            v = (z * (np.asarray(re_sd)**2)) @ z.T + sigma**2 * np.eye(n_t)
            vinv = np.linalg.inv(v)
            for rows in subj_lists:
                xs = self.X[np.array(rows)]
                info += xs.T @ vinv @ xs
        cov = np.linalg.inv(info)
        return float(np.sqrt(self.xi_vector @ cov @ self.xi_vector))


# ---------------------------------------------------------------------------
# Synthetic dataset (stand-in for the strength-training exercise study)
# ---------------------------------------------------------------------------

#: Generator defaults tuned so the data-only posterior SD of the target
#: group's change from baseline is ~0.67 response units with 13 subjects.
GENERATOR_DEFAULTS = {
    "baseline": {"CONT": 80.0, "RI": 80.5, "WI": 80.2},
    "slope": {"CONT": 0.0, "RI": 0.35, "WI": 0.76},
    "quad": {"CONT": 0.0, "RI": -0.01, "WI": -0.04},
    "re_sd": (3.0, 1.7, 0.25),
    "sigma": 1.3,
}


def generate_exercise_data(seed: int = 20260801, n_per_group: int = 13,
                           times=(1, 2, 3, 4, 5, 6, 7),
                           groups=("CONT", "RI", "WI"),
                           params: dict | None = None) -> RepeatedMeasuresData:
    """Three training programs, seven sessions, subject-level random curves.

    ``slope`` and ``quad`` act on (t - t0) and (t - t0)^2 in raw time units;
    random effects act on the orthogonal contrast basis.
    """
    cfg = dict(GENERATOR_DEFAULTS)
    if params:
        cfg.update(params)
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    times = np.asarray(times, dtype=float)
    contr = orthogonal_poly(times, 2)
    s0, s1, s2 = cfg["re_sd"]
    ids, gs, ts, ys = [], [], [], []
    subj = 0
    for g in groups:
        for _ in range(n_per_group):
            subj += 1
            b0 = s0 * rng.standard_normal()
            b1 = s1 * rng.standard_normal()
            b2 = s2 * rng.standard_normal()
            for i, t in enumerate(times):
                mean = (
                    cfg["baseline"][g]
                    + cfg["slope"][g] * (t - times[0])
                    + cfg["quad"][g] * (t - times[0]) ** 2
                )
                yv = mean + b0 + b1 * contr[i, 0] + b2 * contr[i, 1] + cfg["sigma"] * rng.standard_normal()
                ids.append(f"s{subj:03d}")
                gs.append(g)
                ts.append(float(t))
                ys.append(float(yv))
    return RepeatedMeasuresData.from_columns(ids, gs, ts, ys)


def true_xi(params: dict | None = None, times=(1, 2, 3, 4, 5, 6, 7),
            group: str = "WI") -> float:
    """Change from baseline implied by the generator's fixed curve."""
    cfg = dict(GENERATOR_DEFAULTS)
    if params:
        cfg.update(params)
    t = np.asarray(times, dtype=float)
    span = t[-1] - t[0]
    return cfg["slope"][group] * span + cfg["quad"][group] * span**2

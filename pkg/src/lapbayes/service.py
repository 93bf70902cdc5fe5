"""HTTP session service for interactive elicitation.

Sessions persist as one JSON file per id under the data directory (atomic
temp-file + rename writes).  Sampling jobs run on a background thread pool
and never block request handling; all numeric payloads (hyperparameters,
coherency intervals, density grids, posterior summaries) are computed
server-side so every client renders identical numbers.

Configuration comes from LAP_DATA_DIR, LAP_PORT and LAP_WORKERS, or the
equivalent constructor arguments.
"""

from __future__ import annotations

import json
import os
import re
import sys
import tempfile
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import numpy as np

from lapbayes import __version__
from lapbayes.corrmats import (
    concordance_to_correlation,
    correlation_to_concordance,
    fisher_se,
)
from lapbayes.dists import DistributionSpec
from lapbayes.errors import LapError
from lapbayes.loss import ExpertBelief
from lapbayes.models.exponential import ExponentialSurvivalModel
from lapbayes.models.mvn import ConcordanceBelief, MvnElicitationModel
from lapbayes.models.regression import RepeatedMeasuresModel, generate_exercise_data
from lapbayes.sampler import SamplerConfig, run_chains
from lapbayes.solvers import fit_student_t_hyperparams, lognormal_from_ig_median_survival
from lapbayes.summaries import gaussian_kde_grid, summarize_batch

MODEL_FAMILIES = ("mvn", "exponential", "regression")
JOB_STATUSES = ("queued", "running", "done", "failed")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, details=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.details = details or {}

    def body(self):
        return {"code": self.code, "message": self.message, "details": self.details}


def atomic_write_json(path: str, obj) -> None:
    """Write via temp file + rename so readers never see partial content."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


# ---------------------------------------------------------------------------
# Session store
# ---------------------------------------------------------------------------

class SessionStore:
    """Flat-file session persistence with per-session write serialization."""

    def __init__(self, data_dir: str):
        self.data_dir = data_dir
        os.makedirs(data_dir, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def _path(self, session_id: str) -> str:
        if not re.fullmatch(r"[a-zA-Z0-9_-]+", session_id):
            raise ApiError(404, "not_found", f"unknown session {session_id!r}")
        return os.path.join(self.data_dir, f"session_{session_id}.json")

    def persist(self, session: dict) -> None:
        session["updated_at"] = time.time()
        atomic_write_json(self._path(session["id"]), session)

    def load(self, session_id: str) -> dict:
        path = self._path(session_id)
        if not os.path.exists(path):
            raise ApiError(404, "not_found", f"unknown session {session_id!r}")
        try:
            with open(path) as fh:
                return json.load(fh)
        except (json.JSONDecodeError, OSError) as exc:
            raise ApiError(
                500, "corrupt_session",
                f"session file {os.path.basename(path)} is unreadable: {exc}",
            ) from None

    def list_ids(self):
        out = []
        for name in sorted(os.listdir(self.data_dir)):
            m = re.fullmatch(r"session_([a-zA-Z0-9_-]+)\.json", name)
            if m:
                out.append(m.group(1))
        return out


# ---------------------------------------------------------------------------
# Service core (transport-independent)
# ---------------------------------------------------------------------------

class ElicitationService:
    def __init__(self, data_dir: str | None = None, n_workers: int | None = None):
        data_dir = data_dir or os.environ.get("LAP_DATA_DIR", "./lap-data")
        n_workers = int(n_workers or os.environ.get("LAP_WORKERS", "2"))
        self.store = SessionStore(data_dir)
        self.pool = ThreadPoolExecutor(max_workers=max(n_workers, 1))
        self.jobs: dict[str, dict] = {}
        self.results: dict[str, dict] = {}
        self.batches: dict[str, object] = {}
        self._jobs_guard = threading.Lock()
        # in-memory input revisions so job polling never touches the disk
        self._input_revisions: dict[str, int] = {}
        # busy sampling threads hold the GIL in tight Python loops; switch
        # more often so status polls stay well under the 100 ms budget
        sys.setswitchinterval(0.001)

    # -- sessions -------------------------------------------------------------

    def _persist(self, session: dict) -> None:
        self.store.persist(session)
        self._input_revisions[session["id"]] = session.get(
            "input_revision", session["revision"]
        )

    def create_session(self, body: dict) -> dict:
        family = body.get("model_family", "mvn")
        if family not in MODEL_FAMILIES:
            raise ApiError(422, "invalid_input", f"unknown model_family {family!r}",
                           {"model_family": f"expected one of {MODEL_FAMILIES}"})
        session = {
            "id": uuid.uuid4().hex[:12],
            "created_at": time.time(),
            "updated_at": time.time(),
            "engine_version": __version__,
            "model_family": family,
            "revision": 0,
            "input_revision": 0,
            "revisions": [],
            "n_e": body.get("n_e"),
            "k": body.get("k"),
            "marginals": None,
            "hypers": None,
            "concordances": None,
            "coherency": None,
            "jobs": [],
        }
        if family == "mvn":
            k = session["k"]
            if not isinstance(k, int) or k < 2:
                raise ApiError(422, "invalid_input", "mvn sessions need integer k >= 2",
                               {"k": "integer >= 2"})
        self._append_revision(session, "create", body)
        self._persist(session)
        return session

    def get_session(self, session_id: str) -> dict:
        return self.store.load(session_id)

    def _append_revision(self, session: dict, kind: str, payload) -> None:
        session["revision"] += 1
        if kind in ("create", "marginals", "concordances"):
            # job launches are not input changes; they never stale results
            session["input_revision"] = session["revision"]
        session["revisions"].append(
            {"revision": session["revision"], "kind": kind,
             "at": time.time(), "payload": payload}
        )

    def put_marginals(self, session_id: str, body: dict) -> dict:
        with self.store.lock(session_id):
            session = self.store.load(session_id)
            family = session["model_family"]
            if family == "mvn":
                answers = body.get("quantiles")
                n_e = body.get("n_e", session.get("n_e"))
                if n_e is None or not answers:
                    raise ApiError(422, "invalid_input",
                                   "mvn marginals need n_e and quantiles",
                                   {"quantiles": "[[q50, q75], ...]", "n_e": "number"})
                if len(answers) != session["k"]:
                    raise ApiError(422, "invalid_input",
                                   f"expected {session['k']} quantile pairs",
                                   {"quantiles": f"got {len(answers)}"})
                try:
                    hypers = [fit_student_t_hyperparams(q50, q75, n_e)
                              for q50, q75 in answers]
                except LapError as exc:
                    raise ApiError(422, "invalid_input", str(exc))
                session["n_e"] = n_e
                session["marginals"] = answers
                session["hypers"] = [h.to_json() for h in hypers]
            elif family == "exponential":
                if "alpha" in body and "ytilde" in body:
                    try:
                        mu, sigma = lognormal_from_ig_median_survival(
                            float(body["alpha"]), float(body["ytilde"])
                        )
                    except LapError as exc:
                        raise ApiError(422, "invalid_input", str(exc))
                    session["marginals"] = {"alpha": body["alpha"], "ytilde": body["ytilde"]}
                    session["hypers"] = {"mu": mu, "sigma": sigma}
                elif "mu" in body and "sigma" in body:
                    session["marginals"] = dict(body)
                    session["hypers"] = {"mu": float(body["mu"]), "sigma": float(body["sigma"])}
                else:
                    raise ApiError(422, "invalid_input",
                                   "exponential marginals need (alpha, ytilde) or (mu, sigma)",
                                   {"alpha": "prior ESS", "ytilde": "mean survival"})
            else:
                if "mu_expert" not in body or "sigma_expert" not in body:
                    raise ApiError(422, "invalid_input",
                                   "regression marginals need mu_expert and sigma_expert",
                                   {"mu_expert": "number", "sigma_expert": "positive number"})
                if float(body["sigma_expert"]) <= 0:
                    raise ApiError(422, "invalid_input", "sigma_expert must be positive",
                                   {"sigma_expert": "positive number"})
                session["marginals"] = dict(body)
                session["hypers"] = {"mu_expert": float(body["mu_expert"]),
                                     "sigma_expert": float(body["sigma_expert"])}
            self._append_revision(session, "marginals", body)
            self._persist(session)
            return session

    def put_concordances(self, session_id: str, body: dict) -> dict:
        with self.store.lock(session_id):
            session = self.store.load(session_id)
            if session["model_family"] != "mvn":
                raise ApiError(422, "invalid_input",
                               "concordances apply to mvn sessions only")
            answers = body.get("concordances")
            if not answers:
                raise ApiError(422, "invalid_input", "missing concordances",
                               {"concordances": '[{"pair": [i, j], "p": number}, ...]'})
            seen = {}
            for entry in answers:
                try:
                    i, j = (int(entry["pair"][0]), int(entry["pair"][1]))
                    p = float(entry["p"])
                except (KeyError, TypeError, ValueError, IndexError):
                    raise ApiError(422, "invalid_input",
                                   "each concordance needs pair [i, j] and p",
                                   {"entry": entry})
                if not 0 < p < 1:
                    raise ApiError(422, "invalid_input",
                                   f"concordance probability must be in (0,1), got {p}",
                                   {"pair": [i, j]})
                if not 1 <= i < j <= session["k"]:
                    raise ApiError(422, "invalid_input", f"invalid pair ({i},{j})",
                                   {"k": session["k"]})
                seen[(i, j)] = p
            session["concordances"] = [
                {"pair": list(pair), "p": p} for pair, p in sorted(seen.items())
            ]
            session["coherency"] = self._coherency(session)
            self._append_revision(session, "concordances", body)
            self._persist(session)
            return session

    def _coherency(self, session: dict):
        """Per-pair coherency; jointly infeasible pairs degrade to a report
        with a null interval instead of failing the whole request."""
        from lapbayes.errors import GlobalIncoherenceError
        from lapbayes.solvers import coherency_intervals

        model = self._mvn_model(session)
        R = model.elicited_matrix()
        out = []
        for c in model.concordances:
            try:
                report = coherency_intervals(R, [c.pair])[0]
                out.append(report.to_json())
            except GlobalIncoherenceError as exc:
                out.append({
                    "pair": list(c.pair),
                    "elicited_r": c.r_tilde,
                    "interval": None,
                    "in_interval": False,
                    "concordance_interval": None,
                    "elicited_concordance": correlation_to_concordance(c.r_tilde),
                    "infeasible": True,
                    "reason": str(exc),
                })
        return out

    def get_coherency(self, session_id: str):
        session = self.store.load(session_id)
        if session["model_family"] != "mvn":
            raise ApiError(422, "invalid_input", "coherency applies to mvn sessions")
        if not session.get("concordances"):
            raise ApiError(422, "invalid_input", "no concordances recorded yet")
        return {"coherency": session.get("coherency") or self._coherency(session)}

    def preview_density(self, session_id: str, component: int):
        """Prior-predictive density grid for one marginal component."""
        session = self.store.load(session_id)
        if session["model_family"] == "mvn":
            if not session.get("hypers"):
                raise ApiError(422, "invalid_input", "no solved hyperparameters yet")
            if not 1 <= component <= session["k"]:
                raise ApiError(422, "invalid_input", f"component out of range 1..{session['k']}")
            h = session["hypers"][component - 1]
            spec = DistributionSpec.student_t(
                h["mu0"],
                h["beta"] * (h["gamma"] + 1.0) / (h["alpha"] * h["gamma"]),
                2.0 * h["alpha"],
            )
        elif session["model_family"] == "exponential":
            if not session.get("hypers"):
                raise ApiError(422, "invalid_input", "no belief recorded yet")
            spec = DistributionSpec.lognormal(session["hypers"]["mu"], session["hypers"]["sigma"])
        else:
            if not session.get("hypers"):
                raise ApiError(422, "invalid_input", "no belief recorded yet")
            spec = DistributionSpec.normal(session["hypers"]["mu_expert"],
                                           session["hypers"]["sigma_expert"])
        lo, hi = spec.quantile(0.001), spec.quantile(0.999)
        grid = np.linspace(lo, hi, 512)
        pdf = np.exp([spec.log_pdf(x) for x in grid])
        return {
            "component": component,
            "dist": spec.to_json(),
            "x": [float(v) for v in grid],
            "pdf": [float(v) for v in pdf],
        }

    # -- models from sessions ----------------------------------------------------

    def _mvn_model(self, session: dict, flattening: str = "marginal_beta"):
        if not session.get("hypers"):
            raise ApiError(422, "invalid_input", "solve marginals before this step")
        hypers = [
            fit_student_t_hyperparams(q50, q75, session["n_e"])
            for q50, q75 in session["marginals"]
        ]
        concs = []
        n_e = session["n_e"]
        for entry in session.get("concordances") or []:
            i, j = entry["pair"]
            concs.append(ConcordanceBelief(
                (i, j), concordance_to_correlation(entry["p"]), fisher_se(n_e)
            ))
        return MvnElicitationModel(
            k=session["k"], hypers=hypers, eta=1.0,
            concordances=concs, flattening=flattening,
        )

    def _session_target(self, session: dict, job_body: dict):
        family = session["model_family"]
        if family == "mvn":
            flattening = job_body.get("flattening", "marginal_beta")
            model = self._mvn_model(session, flattening)
            return model.build_target(), {
                "observable_beliefs": {
                    f"conc_{e['pair'][0]}_{e['pair'][1]}": e["p"]
                    for e in session.get("concordances") or []
                },
            }
        if family == "exponential":
            if not session.get("hypers"):
                raise ApiError(422, "invalid_input", "record a belief before sampling")
            mu, sigma = session["hypers"]["mu"], session["hypers"]["sigma"]
            parameterization = job_body.get("parameterization", "median_direct")
            model = ExponentialSurvivalModel(parameterization=parameterization)
            belief = ExpertBelief("t_med", DistributionSpec.lognormal(mu, sigma))
            return model.build_target([belief]), {
                "belief": {"observable": "t_med", "family": "lognormal",
                           "params": {"mu": mu, "sigma": sigma}},
            }
        if not session.get("hypers"):
            raise ApiError(422, "invalid_input", "record a belief before sampling")
        mu_e = session["hypers"]["mu_expert"]
        sd_e = session["hypers"]["sigma_expert"]
        belief = ExpertBelief("xi", DistributionSpec.normal(mu_e, sd_e))
        if job_body.get("with_data", False):
            data = generate_exercise_data(seed=int(job_body.get("data_seed", 20260801)))
            model = RepeatedMeasuresModel(data=data)
        else:
            model = RepeatedMeasuresModel(fe_scale=float(job_body.get("fe_scale", 30.0)))
        return model.build_target([belief]), {
            "belief": {"observable": "xi", "family": "normal",
                       "params": {"mu": mu_e, "sigma": sd_e}},
        }

    # -- jobs -----------------------------------------------------------------

    def start_job(self, session_id: str, body: dict) -> dict:
        with self.store.lock(session_id):
            session = self.store.load(session_id)
            target, extras = self._session_target(session, body)
            config = SamplerConfig(
                n_chains=int(body.get("chains", 4)),
                warmup=int(body.get("warmup", 2000)),
                samples=int(body.get("samples", 5000)),
                thin=int(body.get("thin", 1)),
                seed=int(body.get("seed", 0)),
            )
            job_id = uuid.uuid4().hex[:12]
            job = {
                "id": job_id,
                "session_id": session_id,
                "status": "queued",
                "progress": 0.0,
                "created_at": time.time(),
                "engine_version": __version__,
                "config": {
                    "chains": config.n_chains, "warmup": config.warmup,
                    "samples": config.samples, "thin": config.thin,
                    "seed": config.seed,
                },
                "inputs_snapshot": {
                    "session_revision": session["revision"],
                    "input_revision": session["input_revision"],
                    "model_family": session["model_family"],
                    "marginals": session.get("marginals"),
                    "n_e": session.get("n_e"),
                    "concordances": session.get("concordances"),
                    "job_request": body,
                    **extras,
                },
                "error": None,
            }
            with self._jobs_guard:
                self.jobs[job_id] = job
            session["jobs"].append(job_id)
            self._append_revision(session, "job", {"job_id": job_id, "request": body})
            self._persist(session)
        self.pool.submit(self._run_job, job_id, target, config)
        return job

    def _run_job(self, job_id: str, target, config: SamplerConfig) -> None:
        job = self.jobs[job_id]
        job["status"] = "running"

        def progress(frac):
            job["progress"] = round(float(frac), 4)

        try:
            batch = run_chains(target, config, progress=progress)
            summary = summarize_batch(batch)
            summary["diagnostics"] = batch.diagnostics()
            summary["engine_version"] = __version__
            summary["inputs_snapshot"] = job["inputs_snapshot"]
            summary["seed"] = config.seed
            self.results[job_id] = summary
            self.batches[job_id] = batch
            result_path = os.path.join(self.store.data_dir, f"job_{job_id}.json")
            atomic_write_json(result_path, summary)
            job["progress"] = 1.0
            job["status"] = "done"
        except Exception as exc:  # failed jobs carry their diagnostic
            job["status"] = "failed"
            job["error"] = f"{type(exc).__name__}: {exc}"

    def get_job(self, job_id: str) -> dict:
        with self._jobs_guard:
            job = self.jobs.get(job_id)
        if job is None:
            raise ApiError(404, "not_found", f"unknown job {job_id!r}")
        out = dict(job)
        sid = job["session_id"]
        current = self._input_revisions.get(sid)
        if current is None:
            session = self.store.load(sid)
            current = session.get("input_revision", session["revision"])
            self._input_revisions[sid] = current
        out["stale"] = current != job["inputs_snapshot"]["input_revision"]
        return out

    def job_summary(self, job_id: str) -> dict:
        job = self.get_job(job_id)
        if job["status"] != "done":
            raise ApiError(409, "not_ready", f"job status is {job['status']}",
                           {"status": job["status"], "error": job.get("error")})
        out = dict(self.results[job_id])
        out["stale"] = job["stale"]
        return out

    def job_density(self, job_id: str, name: str) -> dict:
        job = self.get_job(job_id)
        if job["status"] != "done":
            raise ApiError(409, "not_ready", f"job status is {job['status']}")
        batch = self.batches.get(job_id)
        if batch is None:
            raise ApiError(409, "not_ready", "job result draws no longer in memory")
        try:
            draws = batch.flat(name)
        except KeyError:
            raise ApiError(
                422, "invalid_input",
                f"unknown trace {name!r}",
                {"available": batch.all_names()},
            )
        grid, pdf = gaussian_kde_grid(draws, 512)
        return {"name": name, "x": [float(v) for v in grid], "pdf": [float(v) for v in pdf]}

    # -- schema -----------------------------------------------------------------

    def schema(self) -> dict:
        return {
            "service": "lapbayes session service",
            "version": __version__,
            "config_env": ["LAP_DATA_DIR", "LAP_PORT", "LAP_WORKERS"],
            "routes": [
                {"method": "POST", "path": "/sessions",
                 "body": {"model_family": "mvn|exponential|regression",
                          "k": "int (mvn)", "n_e": "number"}},
                {"method": "GET", "path": "/sessions/{id}"},
                {"method": "PUT", "path": "/sessions/{id}/marginals",
                 "body": {"quantiles": "[[q50, q75], ...] (mvn)", "n_e": "number",
                          "alpha,ytilde|mu,sigma": "(exponential)",
                          "mu_expert,sigma_expert": "(regression)"}},
                {"method": "PUT", "path": "/sessions/{id}/concordances",
                 "body": {"concordances": [{"pair": [1, 2], "p": 0.6}]}},
                {"method": "GET", "path": "/sessions/{id}/coherency"},
                {"method": "GET", "path": "/sessions/{id}/preview",
                 "query": {"component": "1-based marginal index"}},
                {"method": "POST", "path": "/sessions/{id}/jobs",
                 "body": {"seed": "int", "chains": "int", "warmup": "int",
                          "samples": "int", "thin": "int",
                          "flattening": "(mvn)", "parameterization": "(exponential)",
                          "with_data": "(regression)"}},
                {"method": "GET", "path": "/jobs/{id}"},
                {"method": "GET", "path": "/jobs/{id}/results/summary"},
                {"method": "GET", "path": "/jobs/{id}/results/density",
                 "query": {"name": "parameter or observable trace name"}},
                {"method": "GET", "path": "/api/schema"},
            ],
            "errors": {"shape": {"code": "string", "message": "string", "details": "object"},
                       "unknown id": 404, "invalid input": 422},
        }


# ---------------------------------------------------------------------------
# HTTP transport
# ---------------------------------------------------------------------------

def make_handler(service: ElicitationService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):  # quiet by default
            pass

        def _send(self, status: int, body: dict):
            payload = json.dumps(body).encode()
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header(
                "Access-Control-Allow-Headers", "Content-Type"
            )
            self.send_header(
                "Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"
            )
            self.end_headers()
            self.wfile.write(payload)

        def _body(self) -> dict:
            length = int(self.headers.get("Content-Length") or 0)
            if length == 0:
                return {}
            raw = self.rfile.read(length)
            try:
                doc = json.loads(raw.decode())
            except json.JSONDecodeError as exc:
                raise ApiError(422, "invalid_json", f"request body is not JSON: {exc}")
            if not isinstance(doc, dict):
                raise ApiError(422, "invalid_json", "request body must be a JSON object")
            return doc

        def _route(self, method: str):
            parsed = urlparse(self.path)
            parts = [p for p in parsed.path.split("/") if p]
            query = {k: v[0] for k, v in parse_qs(parsed.query).items()}
            try:
                return self._dispatch(method, parts, query)
            except ApiError as exc:
                self._send(exc.status, exc.body())
            except LapError as exc:
                self._send(422, {"code": "invalid_input", "message": str(exc), "details": {}})
            except Exception as exc:  # pragma: no cover - last-resort guard
                self._send(500, {"code": "internal", "message": f"{type(exc).__name__}: {exc}",
                                 "details": {}})

        def _dispatch(self, method: str, parts: list[str], query: dict):
            svc = service
            if method == "GET" and parts == ["api", "schema"]:
                return self._send(200, svc.schema())
            if parts and parts[0] == "sessions":
                if method == "POST" and len(parts) == 1:
                    return self._send(201, svc.create_session(self._body()))
                if len(parts) >= 2:
                    sid = parts[1]
                    if method == "GET" and len(parts) == 2:
                        return self._send(200, svc.get_session(sid))
                    if method == "PUT" and parts[2:] == ["marginals"]:
                        return self._send(200, svc.put_marginals(sid, self._body()))
                    if method == "PUT" and parts[2:] == ["concordances"]:
                        return self._send(200, svc.put_concordances(sid, self._body()))
                    if method == "GET" and parts[2:] == ["coherency"]:
                        return self._send(200, svc.get_coherency(sid))
                    if method == "GET" and parts[2:] == ["preview"]:
                        component = int(query.get("component", "1"))
                        return self._send(200, svc.preview_density(sid, component))
                    if method == "POST" and parts[2:] == ["jobs"]:
                        return self._send(202, svc.start_job(sid, self._body()))
            if parts and parts[0] == "jobs" and len(parts) >= 2:
                jid = parts[1]
                if method == "GET" and len(parts) == 2:
                    return self._send(200, svc.get_job(jid))
                if method == "GET" and parts[2:] == ["results", "summary"]:
                    return self._send(200, svc.job_summary(jid))
                if method == "GET" and parts[2:] == ["results", "density"]:
                    name = query.get("name")
                    if not name:
                        raise ApiError(422, "invalid_input", "density needs ?name=",
                                       {"name": "trace name"})
                    return self._send(200, svc.job_density(jid, name))
            raise ApiError(404, "not_found", f"no route {method} /{'/'.join(parts)}")

        def do_GET(self):
            self._route("GET")

        def do_POST(self):
            self._route("POST")

        def do_PUT(self):
            self._route("PUT")

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS")
            self.send_header("Content-Length", "0")
            self.end_headers()

    return Handler


def serve(port: int | None = None, data_dir: str | None = None,
          n_workers: int | None = None, poll_ready=None):
    """Run the HTTP service (blocking). Returns the server for tests."""
    port = int(port or os.environ.get("LAP_PORT", "8764"))
    service = ElicitationService(data_dir=data_dir, n_workers=n_workers)
    server = ThreadingHTTPServer(("0.0.0.0", port), make_handler(service))
    if poll_ready is not None:
        poll_ready(server, service)
    server.serve_forever()


def start_background(port: int = 0, data_dir: str | None = None,
                     n_workers: int | None = None):
    """Start the service on a daemon thread; returns (server, service, port)."""
    service = ElicitationService(data_dir=data_dir, n_workers=n_workers)
    server = ThreadingHTTPServer(("127.0.0.1", port), make_handler(service))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, service, server.server_address[1]

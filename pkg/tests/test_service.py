"""Session service: HTTP contract, persistence, jobs, determinism."""

import json
import os
import time
import urllib.request

import numpy as np
import pytest

from lapbayes.service import (
    ApiError,
    ElicitationService,
    SessionStore,
    atomic_write_json,
    start_background,
)

EXAMPLE_QUANTILES = [[5.0, 6.35], [2.0, 2.67], [1.0, 1.34], [3.0, 5.02]]
EXAMPLE_CONCORDANCES = [
    {"pair": [1, 2], "p": 0.60}, {"pair": [1, 3], "p": 0.25},
    {"pair": [2, 3], "p": 0.40}, {"pair": [1, 4], "p": 0.50},
    {"pair": [2, 4], "p": 0.50}, {"pair": [3, 4], "p": 0.50},
]


@pytest.fixture()
def svc(tmp_path):
    return ElicitationService(data_dir=str(tmp_path), n_workers=2)


@pytest.fixture()
def live(tmp_path):
    server, service, port = start_background(data_dir=str(tmp_path / "live"), n_workers=2)
    yield f"http://127.0.0.1:{port}", service
    server.shutdown()


def http(method, url, body=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(url, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req) as resp:
            return resp.status, json.loads(resp.read().decode())
    except urllib.error.HTTPError as err:
        return err.code, json.loads(err.read().decode())


class TestSessions:
    def test_create_and_solve_marginals(self, svc):
        session = svc.create_session({"model_family": "mvn", "k": 4, "n_e": 10})
        out = svc.put_marginals(session["id"], {"quantiles": EXAMPLE_QUANTILES, "n_e": 10})
        betas = [h["beta"] for h in out["hypers"]]
        for got, golden in zip(betas, (16.89, 4.22, 1.06, 38.0)):
            assert abs(got - golden) / golden < 0.015
        assert [h["mu0"] for h in out["hypers"]] == [5.0, 2.0, 1.0, 3.0]

    def test_coherency_flags_outlier(self, svc):
        session = svc.create_session({"model_family": "mvn", "k": 3, "n_e": 10})
        svc.put_marginals(session["id"], {"quantiles": EXAMPLE_QUANTILES[:3], "n_e": 10})
        out = svc.put_concordances(session["id"], {"concordances": [
            {"pair": [1, 2], "p": 0.60}, {"pair": [2, 3], "p": 0.40},
            {"pair": [1, 3], "p": 0.95},
        ]})
        by_pair = {tuple(r["pair"]): r for r in out["coherency"]}
        assert not by_pair[(1, 3)]["in_interval"]
        # the offending value also makes the others' intervals exclude them,
        # so only the interval bounds are asserted here
        assert by_pair[(1, 3)]["interval"][1] < 0.95

    def test_coherent_set_all_in_interval(self, svc):
        session = svc.create_session({"model_family": "mvn", "k": 4, "n_e": 10})
        svc.put_marginals(session["id"], {"quantiles": EXAMPLE_QUANTILES, "n_e": 10})
        out = svc.put_concordances(session["id"], {"concordances": EXAMPLE_CONCORDANCES})
        assert all(r["in_interval"] for r in out["coherency"])

    def test_jointly_incoherent_answers_degrade_per_pair(self, svc):
        # with k=4, fixing an impossible (1,2)/(2,3)/(1,3) triple leaves no
        # feasible value for pairs outside it; the report says so rather
        # than erroring out
        session = svc.create_session({"model_family": "mvn", "k": 4, "n_e": 10})
        svc.put_marginals(session["id"], {"quantiles": EXAMPLE_QUANTILES, "n_e": 10})
        out = svc.put_concordances(session["id"], {"concordances": [
            {"pair": [1, 2], "p": 0.95}, {"pair": [2, 3], "p": 0.05},
            {"pair": [1, 3], "p": 0.50}, {"pair": [1, 4], "p": 0.50},
        ]})
        infeasible = [r for r in out["coherency"] if r["interval"] is None]
        assert infeasible
        for r in infeasible:
            assert r["infeasible"] and not r["in_interval"]
        feasible = [r for r in out["coherency"] if r["interval"] is not None]
        assert feasible  # the pairs inside the bad triple still get ranges

    def test_unknown_session_404(self, svc):
        with pytest.raises(ApiError) as err:
            svc.get_session("doesnotexist99")
        assert err.value.status == 404

    def test_invalid_inputs_422(self, svc):
        session = svc.create_session({"model_family": "mvn", "k": 4, "n_e": 10})
        with pytest.raises(ApiError) as err:
            svc.put_marginals(session["id"], {"quantiles": EXAMPLE_QUANTILES[:2], "n_e": 10})
        assert err.value.status == 422
        with pytest.raises(ApiError) as err:
            svc.put_concordances(session["id"], {"concordances": [{"pair": [1, 9], "p": 0.5}]})
        assert err.value.status == 422

    def test_revisions_append_only(self, svc):
        session = svc.create_session({"model_family": "mvn", "k": 4, "n_e": 10})
        svc.put_marginals(session["id"], {"quantiles": EXAMPLE_QUANTILES, "n_e": 10})
        s2 = svc.put_marginals(session["id"], {"quantiles": EXAMPLE_QUANTILES, "n_e": 10})
        kinds = [r["kind"] for r in s2["revisions"]]
        assert kinds == ["create", "marginals", "marginals"]
        assert s2["revision"] == 3

    def test_preview_density_grid(self, svc):
        session = svc.create_session({"model_family": "mvn", "k": 4, "n_e": 10})
        svc.put_marginals(session["id"], {"quantiles": EXAMPLE_QUANTILES, "n_e": 10})
        grid = svc.preview_density(session["id"], 1)
        assert len(grid["x"]) == 512 and len(grid["pdf"]) == 512
        x = np.array(grid["x"])
        pdf = np.array(grid["pdf"])
        mode_x = x[np.argmax(pdf)]
        assert abs(mode_x - 5.0) < 0.1  # Student-t centered at mu0 = 5


class TestPersistence:
    def test_persist_load_roundtrip(self, svc):
        session = svc.create_session({"model_family": "mvn", "k": 4, "n_e": 10})
        svc.put_marginals(session["id"], {"quantiles": EXAMPLE_QUANTILES, "n_e": 10})
        loaded = svc.get_session(session["id"])
        on_disk = svc.store.load(session["id"])
        assert loaded == on_disk
        assert loaded["hypers"] is not None

    def test_crash_during_write_keeps_old_version(self, svc, monkeypatch):
        session = svc.create_session({"model_family": "mvn", "k": 4, "n_e": 10})
        sid = session["id"]
        before = svc.store.load(sid)

        def exploding_replace(src, dst):
            raise OSError("simulated crash before rename")

        monkeypatch.setattr(os, "replace", exploding_replace)
        with pytest.raises(OSError):
            svc.put_marginals(sid, {"quantiles": EXAMPLE_QUANTILES, "n_e": 10})
        monkeypatch.undo()
        after = svc.store.load(sid)
        assert after["revision"] == before["revision"]
        assert after["hypers"] is None

    def test_corrupt_file_does_not_break_store(self, tmp_path):
        store = SessionStore(str(tmp_path))
        atomic_write_json(str(tmp_path / "session_good.json"), {"id": "good"})
        (tmp_path / "session_bad.json").write_text("{ not json")
        assert store.load("good")["id"] == "good"
        with pytest.raises(ApiError) as err:
            store.load("bad")
        assert err.value.status == 500

    def test_load_unknown_id(self, tmp_path):
        store = SessionStore(str(tmp_path))
        with pytest.raises(ApiError) as err:
            store.load("nope")
        assert err.value.status == 404


class TestJobs:
    def test_exponential_job_end_to_end(self, svc):
        session = svc.create_session({"model_family": "exponential"})
        svc.put_marginals(session["id"], {"alpha": 10, "ytilde": 1})
        job = svc.start_job(session["id"], {"seed": 5, "warmup": 500, "samples": 1500})
        deadline = time.time() + 120
        while svc.get_job(job["id"])["status"] not in ("done", "failed"):
            assert time.time() < deadline
            time.sleep(0.05)
        record = svc.get_job(job["id"])
        assert record["status"] == "done", record.get("error")
        summary = svc.job_summary(job["id"])
        med = summary["parameters"]["t_med"]["quantiles"]["0.5"]
        assert abs(med - 0.726) < 0.03
        density = svc.job_density(job["id"], "t_med")
        assert len(density["x"]) == 512
        # trapezoid CDF of the grid has median near the lognormal median
        x, pdf = np.array(density["x"]), np.array(density["pdf"])
        cdf = np.concatenate(([0.0], np.cumsum(0.5 * (pdf[1:] + pdf[:-1]) * np.diff(x))))
        cdf /= cdf[-1]
        med_grid = float(np.interp(0.5, cdf, x))
        assert abs(med_grid - 0.726) < 0.02

    def test_job_determinism(self, svc):
        session = svc.create_session({"model_family": "exponential"})
        svc.put_marginals(session["id"], {"mu": -0.32, "sigma": 0.34})
        req = {"seed": 11, "warmup": 400, "samples": 800}
        j1 = svc.start_job(session["id"], req)
        j2 = svc.start_job(session["id"], req)
        for jid in (j1["id"], j2["id"]):
            while svc.get_job(jid)["status"] not in ("done", "failed"):
                time.sleep(0.05)
        s1 = svc.job_summary(j1["id"])
        s2 = svc.job_summary(j2["id"])
        assert s1["observables"] == s2["observables"]
        assert s1["parameters"] == s2["parameters"]

    def test_stale_flag_after_revision(self, svc):
        session = svc.create_session({"model_family": "exponential"})
        svc.put_marginals(session["id"], {"mu": -0.32, "sigma": 0.34})
        job = svc.start_job(session["id"], {"seed": 3, "warmup": 300, "samples": 500})
        while svc.get_job(job["id"])["status"] not in ("done", "failed"):
            time.sleep(0.05)
        assert not svc.get_job(job["id"])["stale"]
        svc.put_marginals(session["id"], {"mu": -0.30, "sigma": 0.34})
        assert svc.get_job(job["id"])["stale"]

    def test_unknown_job_404(self, svc):
        with pytest.raises(ApiError) as err:
            svc.get_job("nope")
        assert err.value.status == 404

    def test_result_records_provenance(self, svc):
        session = svc.create_session({"model_family": "exponential"})
        svc.put_marginals(session["id"], {"mu": -0.32, "sigma": 0.34})
        job = svc.start_job(session["id"], {"seed": 9, "warmup": 300, "samples": 500})
        while svc.get_job(job["id"])["status"] not in ("done", "failed"):
            time.sleep(0.05)
        summary = svc.job_summary(job["id"])
        assert summary["engine_version"]
        assert summary["seed"] == 9
        assert summary["inputs_snapshot"]["model_family"] == "exponential"


class TestHttp:
    def test_schema_served(self, live):
        base, _ = live
        status, doc = http("GET", f"{base}/api/schema")
        assert status == 200
        assert any(r["path"] == "/sessions" for r in doc["routes"])

    def test_full_mvn_flow_over_http(self, live):
        base, _ = live
        status, session = http("POST", f"{base}/sessions",
                               {"model_family": "mvn", "k": 4, "n_e": 10})
        assert status == 201
        sid = session["id"]
        status, out = http("PUT", f"{base}/sessions/{sid}/marginals",
                           {"quantiles": EXAMPLE_QUANTILES, "n_e": 10})
        assert status == 200
        assert abs(out["hypers"][0]["beta"] - 16.89) / 16.89 < 0.01
        status, out = http("PUT", f"{base}/sessions/{sid}/concordances",
                           {"concordances": EXAMPLE_CONCORDANCES})
        assert status == 200
        status, coh = http("GET", f"{base}/sessions/{sid}/coherency")
        assert status == 200
        assert len(coh["coherency"]) == 6
        status, preview = http("GET", f"{base}/sessions/{sid}/preview?component=2")
        assert status == 200 and len(preview["x"]) == 512

    def test_errors_shaped(self, live):
        base, _ = live
        status, body = http("GET", f"{base}/sessions/zzz")
        assert status == 404
        assert body["code"] == "not_found" and "message" in body

        status, body = http("POST", f"{base}/sessions", {"model_family": "bogus"})
        assert status == 422
        assert body["code"] == "invalid_input" and "details" in body

    def test_status_endpoint_responsive_during_job(self, live):
        base, _ = live
        _, session = http("POST", f"{base}/sessions", {"model_family": "exponential"})
        sid = session["id"]
        http("PUT", f"{base}/sessions/{sid}/marginals", {"alpha": 10, "ytilde": 1})
        _, job = http("POST", f"{base}/sessions/{sid}/jobs",
                      {"seed": 2, "warmup": 3000, "samples": 30000})
        jid = job["id"]
        slow = 0.0
        polls = 0
        while True:
            t0 = time.time()
            status, record = http("GET", f"{base}/jobs/{jid}")
            dt = time.time() - t0
            slow = max(slow, dt)
            polls += 1
            if record["status"] in ("done", "failed"):
                break
            time.sleep(0.02)
        assert record["status"] == "done"
        assert polls >= 3, "job finished too fast to measure responsiveness"
        assert slow < 0.1, f"status polling stalled: worst {slow:.3f}s"

"""Platform service: endpoints, persistence, recovery, schema hygiene."""

import json
import threading

import pytest
from fastapi.testclient import TestClient

from taskads.config import ServiceConfig, load_config
from taskads.engine import ReservationPolicy
from taskads.httpapi import create_app
from taskads.model import CampaignConfig, IllegalTransition
from taskads.service import PlatformService, UnknownBatch, ValidationFailed
from taskads.storage import FileStore, MemoryStore

from conftest import ManualClock, answer_batch, manifest_text


class TestPractitionerOps:
    def test_upload_valid_manifest(self, service):
        dataset_id = service.upload_dataset(manifest_text(), name="d")
        summary = service.dataset_summary(dataset_id)
        assert summary["items_total"] == 50
        assert summary["gold_items"] == 50
        assert len(summary["class_histogram"]) == 5

    def test_upload_names_offending_line(self, service):
        lines = manifest_text().splitlines()
        lines[11] = "{broken"
        with pytest.raises(ValidationFailed) as exc:
            service.upload_dataset("\n".join(lines))
        assert exc.value.line == 12

    def test_reupload_creates_new_dataset(self, service):
        a = service.upload_dataset(manifest_text())
        b = service.upload_dataset(manifest_text())
        assert a != b

    def test_campaign_lifecycle(self, service):
        dataset_id = service.upload_dataset(manifest_text())
        cid = service.create_campaign(dataset_id, CampaignConfig(prompt_template="{class}?"))
        assert service.campaign_overview(cid)[0]["status"] == "Draft"
        service.publish(cid)
        assert service.campaign_overview(cid)[0]["status"] == "Published"
        service.unpublish(cid)
        service.publish(cid)

    def test_publish_complete_campaign_rejected(self, service, clock):
        dataset_id = service.upload_dataset(manifest_text(1, 2))
        cid = service.create_campaign(
            dataset_id, CampaignConfig(prompt_template="{class}?", required_engagements=1, batch_size=2)
        )
        service.publish(cid)
        doc = service.serve_batch("u1")
        answer_batch(service, doc)
        assert service.campaign_overview(cid)[0]["status"] == "Complete"
        with pytest.raises(IllegalTransition):
            service.publish(cid)


class TestServing:
    def test_new_user_gets_batch(self, service, published_campaign):
        doc = service.serve_batch("u1")
        assert not doc["no_tasks"]
        assert len(doc["tasks"]) == 5
        assert doc["campaign_id"] == published_campaign

    def test_no_published_campaign_gives_no_tasks_flag(self, service):
        dataset_id = service.upload_dataset(manifest_text())
        service.create_campaign(dataset_id, CampaignConfig(prompt_template="{class}?"))
        doc = service.serve_batch("u1")
        assert doc["no_tasks"] is True
        assert doc["tasks"] == []

    def test_batch_payload_never_leaks_gold_or_other_users(self, service, published_campaign):
        doc = service.serve_batch("u1")
        allowed_task_keys = {"assignment_id", "item_id", "media_ref", "prompt", "options"}
        for task in doc["tasks"]:
            assert set(task) == allowed_task_keys
        assert "gold" not in json.dumps(doc)
        acks = answer_batch(service, doc)
        assert "gold" not in json.dumps(acks)
        doc2 = service.serve_batch("u2")
        payload = json.dumps(doc2)
        assert "u1" not in payload and "gold" not in payload

    def test_submit_partial_batch_then_ttl_expiry(self, service, published_campaign, clock):
        doc = service.serve_batch("u1")
        half = doc["tasks"][:2]
        acks = service.submit_responses(
            doc["batch_id"],
            [{"assignment_id": t["assignment_id"], "choice": "Yes", "elapsed": 2.0} for t in half],
        )
        assert all(a["accepted"] for a in acks)
        clock.advance(1000.0)
        assert service.expire_stale() == 3
        report = service.progress(published_campaign)
        assert report.responses_total == 2

    def test_duplicate_submission_all_rejected_state_unchanged(self, service, published_campaign):
        doc = service.serve_batch("u1")
        first = answer_batch(service, doc)
        assert all(a["accepted"] for a in first)
        second = answer_batch(service, doc)
        assert all(not a["accepted"] and a["code"] == "AlreadyCompleted" for a in second)
        assert service.progress(published_campaign).responses_total == 5

    def test_unknown_batch(self, service, published_campaign):
        with pytest.raises(UnknownBatch):
            service.submit_responses("b999", [])

    def test_invalid_choice_rejected_per_item(self, service, published_campaign):
        doc = service.serve_batch("u1")
        acks = service.submit_responses(
            doc["batch_id"],
            [{"assignment_id": doc["tasks"][0]["assignment_id"], "choice": "Banana", "elapsed": 1.0}],
        )
        assert acks[0]["accepted"] is False
        assert acks[0]["code"] == "InvalidChoice"


class TestProgressAndExport:
    def _complete_campaign(self, service, cid, n_users=3):
        for u in range(n_users):
            while True:
                doc = service.serve_batch(f"user{u}")
                if doc["no_tasks"]:
                    break
                answer_batch(service, doc, choice="Yes")

    def test_progress_monotone_under_serving(self, service, published_campaign):
        seen = []
        for u in range(4):
            doc = service.serve_batch(f"u{u}")
            if not doc["no_tasks"]:
                answer_batch(service, doc)
            seen.append(service.progress(published_campaign).responses_total)
        assert seen == sorted(seen)

    def test_complete_export_has_all_items_and_responses(self, service, published_campaign):
        self._complete_campaign(service, published_campaign)
        report = service.progress(published_campaign)
        assert report.items_complete == report.items_total == 50
        assert report.responses_total == 150
        lines = service.export(published_campaign)
        assert len(lines) == 50
        records = [json.loads(line) for line in lines]
        assert all(r["complete"] for r in records)
        assert sum(r["n_responses"] for r in records) == 150
        detail = service.export(published_campaign, include_detail=True)
        assert sum(len(json.loads(line)["responses"]) for line in detail) == 150

    def test_export_gold_match(self, service, published_campaign):
        self._complete_campaign(service, published_campaign)
        for line in service.export(published_campaign):
            rec = json.loads(line)
            if rec["verdict"] != "Undecided":
                # everyone answered Yes; gold yes items match, gold no items don't
                expected = rec["item_id"].split("-")[-1]
                assert rec["gold_match"] == (int(expected) < 5)


class TestPersistence:
    def test_memory_roundtrip(self, clock):
        store = MemoryStore()
        service = PlatformService(store, clock=clock, rng_seed=1)
        dataset_id = service.upload_dataset(manifest_text())
        cid = service.create_campaign(dataset_id, CampaignConfig(prompt_template="{class}?"))
        service.publish(cid)
        doc = service.serve_batch("u1")
        answer_batch(service, doc)

        revived = PlatformService(store, clock=clock, rng_seed=1)
        revived.check_invariants()
        assert revived.progress(cid).responses_total == 5
        assert revived.version == service.version

    def test_file_store_recovery(self, tmp_path, clock):
        store = FileStore(tmp_path / "log", fsync=False)
        service = PlatformService(store, clock=clock, rng_seed=1)
        dataset_id = service.upload_dataset(manifest_text())
        cid = service.create_campaign(
            dataset_id, CampaignConfig(prompt_template="{class}?", required_engagements=2)
        )
        service.publish(cid)
        for u in range(3):
            doc = service.serve_batch(f"u{u}")
            if not doc["no_tasks"]:
                answer_batch(service, doc)
        expected = service.progress(cid).responses_total
        # simulate a crash: no close, new instance over the same directory
        revived = PlatformService(FileStore(tmp_path / "log", fsync=False), clock=clock, rng_seed=1)
        revived.check_invariants()
        assert revived.progress(cid).responses_total == expected

    def test_compaction_preserves_state(self, tmp_path, clock):
        store = FileStore(tmp_path / "log", fsync=False)
        service = PlatformService(store, clock=clock, rng_seed=1)
        dataset_id = service.upload_dataset(manifest_text())
        cid = service.create_campaign(dataset_id, CampaignConfig(prompt_template="{class}?"))
        service.publish(cid)
        doc = service.serve_batch("u1")
        answer_batch(service, doc)
        service.compact()
        assert (tmp_path / "log" / "snapshot.json").exists()
        doc2 = service.serve_batch("u2")
        answer_batch(service, doc2)

        revived = PlatformService(FileStore(tmp_path / "log", fsync=False), clock=clock, rng_seed=1)
        revived.check_invariants()
        assert revived.progress(cid).responses_total == 10
        # user history survived compaction: u1 must not see completed items again
        eligible = revived.engine.eligible_items(cid, "u1", clock())
        done = {t["item_id"] for t in doc["tasks"]}
        assert eligible.isdisjoint(done)

    def test_torn_tail_write_ignored(self, tmp_path, clock):
        store = FileStore(tmp_path / "log", fsync=False)
        service = PlatformService(store, clock=clock, rng_seed=1)
        service.upload_dataset(manifest_text())
        store._fh.write('{"type": "response", "assignment_id": "a000')  # torn write
        store._fh.flush()
        revived = PlatformService(FileStore(tmp_path / "log", fsync=False), clock=clock)
        assert len(revived.engine.datasets) == 1

    def test_snapshot_referential_integrity(self, service, published_campaign):
        doc = service.serve_batch("u1")
        answer_batch(service, doc)
        state = service.snapshot_state()
        engine_state = state["engine"]
        dataset_ids = {d["dataset_id"] for d in engine_state["datasets"]}
        campaign_ids = {c["campaign_id"] for c in engine_state["campaigns"]}
        assignment_ids = {a["assignment_id"] for a in engine_state["assignments"]}
        for c in engine_state["campaigns"]:
            assert c["dataset_id"] in dataset_ids
        for a in engine_state["assignments"]:
            assert a["campaign_id"] in campaign_ids
        for r in engine_state["responses"]:
            assert r["assignment_id"] in assignment_ids
        assert state["version"] == service.version


class TestConcurrency:
    def test_concurrent_serve_submit_expire(self, clock):
        service = PlatformService(MemoryStore(), policy=ReservationPolicy(ttl=5.0), clock=clock, rng_seed=3)
        dataset_id = service.upload_dataset(manifest_text())
        cid = service.create_campaign(
            dataset_id, CampaignConfig(prompt_template="{class}?", required_engagements=3, batch_size=5)
        )
        service.publish(cid)
        errors = []

        def worker(idx):
            try:
                for round_ in range(30):
                    doc = service.serve_batch(f"w{idx}")
                    if doc["no_tasks"]:
                        break
                    answer_batch(service, doc)
            except Exception as exc:  # noqa: BLE001
                errors.append(exc)

        def expirer():
            try:
                for _ in range(50):
                    service.expire_stale()
            except Exception as exc:  # noqa: BLE001
                errors.append(exc)

        threads = [threading.Thread(target=worker, args=(i,)) for i in range(8)]
        threads.append(threading.Thread(target=expirer))
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert errors == []
        service.check_invariants()
        counts = service.engine.item_counts(cid)
        assert all(done <= 3 for done, _ in counts.values())


class TestHttpApi:
    @pytest.fixture
    def client(self, clock):
        service = PlatformService(MemoryStore(), clock=clock, rng_seed=2)
        config = ServiceConfig()
        app = create_app(service, config)
        return TestClient(app)

    def _auth(self, role="practitioner"):
        token = "practitioner-token" if role == "practitioner" else "client-token"
        return {"Authorization": f"Bearer {token}"}

    def test_requires_auth(self, client):
        assert client.post("/datasets", json={"manifest": "x"}).status_code == 401
        assert client.post("/serve", json={"user_id": "u"}).status_code == 401
        assert client.get("/healthz").status_code == 200

    def test_client_token_cannot_upload(self, client):
        r = client.post("/datasets", json={"manifest": manifest_text()}, headers=self._auth("client"))
        assert r.status_code == 401

    def test_full_flow_over_http(self, client):
        r = client.post(
            "/datasets",
            json={"name": "d", "manifest": manifest_text()},
            headers=self._auth(),
        )
        assert r.status_code == 201
        dataset_id = r.json()["dataset_id"]

        r = client.post(
            "/campaigns",
            json={
                "dataset_id": dataset_id,
                "prompt_template": "Does this image contain a {class}?",
                "required_engagements": 3,
                "batch_size": 5,
            },
            headers=self._auth(),
        )
        assert r.status_code == 201
        cid = r.json()["campaign_id"]
        assert client.post(f"/campaigns/{cid}/publish", headers=self._auth()).json()["status"] == "Published"

        r = client.post("/serve", json={"user_id": "u1"}, headers=self._auth("client"))
        doc = r.json()
        assert doc["no_tasks"] is False and len(doc["tasks"]) == 5
        assert doc["tasks"][0]["prompt"].startswith("Does this image contain a")

        r = client.post(
            "/responses",
            json={
                "batch_id": doc["batch_id"],
                "responses": [
                    {"assignment_id": t["assignment_id"], "choice": "Yes", "elapsed": 2.5}
                    for t in doc["tasks"]
                ],
            },
            headers=self._auth("client"),
        )
        assert all(a["accepted"] for a in r.json()["acks"])

        r = client.get(f"/campaigns/{cid}/progress", headers=self._auth())
        assert r.json()["responses_total"] == 5
        r = client.get(f"/campaigns/{cid}/export", headers=self._auth())
        assert r.status_code == 200
        assert len(r.text.strip().splitlines()) == 50

    def test_upload_error_names_line(self, client):
        lines = manifest_text().splitlines()
        lines[4] = "oops"
        r = client.post("/datasets", json={"manifest": "\n".join(lines)}, headers=self._auth())
        assert r.status_code == 400
        assert r.json()["line"] == 5

    def test_unknown_campaign_404(self, client):
        assert client.get("/campaigns/nope/progress", headers=self._auth()).status_code == 404


class TestConfig:
    def test_defaults(self):
        cfg = load_config(env={})
        assert cfg.listen_port == 8787
        assert cfg.store_path is None

    def test_file_and_env_overrides(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"listen_port": 9000, "reservation_ttl": 60.0}))
        cfg = load_config(path, env={"TASKADS_LISTEN_PORT": "9100", "TASKADS_OVERCOMMIT": "true"})
        assert cfg.listen_port == 9100  # env beats file
        assert cfg.reservation_ttl == 60.0
        assert cfg.overcommit is True

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps({"nope": 1}))
        with pytest.raises(ValueError):
            load_config(path, env={})

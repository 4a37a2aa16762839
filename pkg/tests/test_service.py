import base64
import json
import threading

import pytest
from fastapi.testclient import TestClient

from panosearch.actions import Rotate, Submit
from panosearch.env import Episode, EpisodeConfig
from panosearch.geometry import Direction
from panosearch.projection import ViewSpec, backproject_bbox, overlay_crosshair, png_bytes, render_view
from panosearch.records import load_records
from panosearch.scoring import episode_reward
from panosearch.tasks import PanoramaStore, generate_synthetic, instance_to_record, parse_dataset
from panosearch.service import ServiceConfig, create_app

VIEW = ViewSpec(96, 72, 90)


@pytest.fixture(scope="module")
def service(tmp_path_factory):
    root = tmp_path_factory.mktemp("svc-data")
    dataset, manifest = generate_synthetic(31, 2, 2, root, pano_size=(512, 256))
    records = tmp_path_factory.mktemp("svc-records")
    config = ServiceConfig(
        dataset_path=manifest, records_dir=records, view=VIEW, max_turns=10
    )
    app = create_app(config)
    client = TestClient(app)
    return client, dataset, manifest, records, config


def create_episode(client, task_id, start_index=0, **cfg):
    body = {"task_id": task_id, "start_index": start_index}
    if cfg:
        body["config"] = cfg
    resp = client.post("/episodes", json=body)
    assert resp.status_code == 200, resp.text
    return resp.json()


class TestWireTransparency:
    def test_episode_matches_in_process_bit_exactly(self, service):
        client, dataset, _, _, config = service
        task = dataset.instances[0]

        created = create_episode(client, task.id, 1)
        eid = created["episode_id"]

        # in-process twin
        store = PanoramaStore(dataset)
        ep = Episode(task, 1, EpisodeConfig(view=VIEW), store.for_task(task))
        obs = ep.reset()
        assert created["observation"]["direction"] == {
            "yaw_deg": obs.direction.yaw_deg,
            "pitch_deg": obs.direction.pitch_deg,
        }
        assert base64.b64decode(created["observation"]["image_png_b64"]) == png_bytes(
            obs.image.pixels
        )

        responses = []
        for action, payload in (
            (Rotate(30, -10), {"action": {"type": "rotate", "yaw": 30, "pitch": -10}}),
            (Submit(0, 0), {"action": {"type": "submit", "yaw": 0, "pitch": 0}}),
        ):
            wire = client.post(f"/episodes/{eid}/step", json=payload).json()
            from panosearch.actions import render_action

            responses.append(render_action(action))
            obs, done = ep.step(action, response_text=render_action(action))
            assert wire["observation"]["feedback"] == obs.feedback_text
            assert wire["observation"]["direction"]["yaw_deg"] == obs.direction.yaw_deg
            assert wire["done"] == done
            assert base64.b64decode(wire["observation"]["image_png_b64"]) == png_bytes(
                obs.image.pixels
            )
        assert wire["success"] == ep.success
        reward = episode_reward(task, ep.current, bool(ep.success), responses)
        assert wire["reward"]["total"] == reward.total
        assert wire["reward"]["variant"] == reward.variant

    def test_raw_response_path(self, service):
        client, dataset, _, _, _ = service
        task = dataset.instances[0]
        created = create_episode(client, task.id)
        eid = created["episode_id"]
        wire = client.post(
            f"/episodes/{eid}/step",
            json={"raw_response": "<think>left</think><answer>rotate(-45,0)</answer>"},
        ).json()
        expect = int(round(task.start_orientations[0].yaw_deg - 45)) % 360
        assert f"({expect},0)" in wire["observation"]["feedback"]
        wire = client.post(
            f"/episodes/{eid}/step", json={"raw_response": "gibberish"}
        ).json()
        assert wire["observation"]["feedback"] == "Invalid action."

    def test_step_after_termination_conflicts(self, service):
        client, dataset, _, _, _ = service
        task = dataset.instances[0]
        eid = create_episode(client, task.id)["episode_id"]
        client.post(f"/episodes/{eid}/step", json={"action": {"type": "submit", "yaw": 0, "pitch": 0}})
        resp = client.post(
            f"/episodes/{eid}/step", json={"action": {"type": "rotate", "yaw": 1, "pitch": 0}}
        )
        assert resp.status_code == 409

    def test_unknown_task_404(self, service):
        client, *_ = service
        assert client.post("/episodes", json={"task_id": "nope"}).status_code == 404

    def test_bad_start_index_422(self, service):
        client, dataset, *_ = service
        resp = client.post(
            "/episodes", json={"task_id": dataset.instances[0].id, "start_index": 9}
        )
        assert resp.status_code == 422


class TestRenderEndpoint:
    def test_byte_equality_with_library(self, service):
        client, dataset, *_ = service
        task = dataset.instances[0]
        resp = client.get(
            "/render",
            params={"pano": task.id, "yaw": 90, "pitch": 0, "hfov": 90, "w": 96, "h": 72},
        )
        assert resp.status_code == 200
        store = PanoramaStore(dataset)
        expect = png_bytes(render_view(store.for_task(task), Direction(90, 0), VIEW).pixels)
        assert resp.content == expect

    def test_crosshair_flag(self, service):
        client, dataset, *_ = service
        task = dataset.instances[0]
        resp = client.get(
            "/render",
            params={"pano": task.id, "yaw": 90, "pitch": 0, "hfov": 90, "w": 96, "h": 72,
                    "cross": 1},
        )
        store = PanoramaStore(dataset)
        expect = png_bytes(
            overlay_crosshair(render_view(store.for_task(task), Direction(90, 0), VIEW)).pixels
        )
        assert resp.content == expect

    def test_pano_by_ref(self, service):
        client, dataset, *_ = service
        ref = dataset.instances[0].panorama_ref
        resp = client.get(
            "/render", params={"pano": ref, "yaw": 0, "pitch": 0, "hfov": 90, "w": 32, "h": 24}
        )
        assert resp.status_code == 200

    def test_unknown_pano_404(self, service):
        client, *_ = service
        resp = client.get(
            "/render", params={"pano": "missing", "yaw": 0, "pitch": 0, "hfov": 90, "w": 8, "h": 8}
        )
        assert resp.status_code == 404


class TestAnnotationEndpoints:
    def test_backproject_matches_library(self, service):
        client, dataset, *_ = service
        rect = [10.0, 12.0, 60.0, 50.0]
        body = {
            "view_dir": {"yaw_deg": 45.0, "pitch_deg": -10.0},
            "spec": {"width_px": 96, "height_px": 72, "hfov_deg": 90},
            "rect_px": rect,
        }
        resp = client.post(f"/tasks/{dataset.instances[0].id}/backproject", json=body)
        assert resp.status_code == 200
        got = resp.json()["target"]
        want = backproject_bbox(Direction(45, -10), VIEW, tuple(rect))
        assert got["yaw_deg"] == want.center.yaw_deg
        assert got["width_deg"] == want.width_deg

    def test_degenerate_rect_422(self, service):
        client, dataset, *_ = service
        body = {
            "view_dir": {"yaw_deg": 0, "pitch_deg": 0},
            "spec": {"width_px": 96, "height_px": 72, "hfov_deg": 90},
            "rect_px": [5, 5, 5, 20],
        }
        resp = client.post(f"/tasks/{dataset.instances[0].id}/backproject", json=body)
        assert resp.status_code == 422

    def test_save_task_persists_and_validates(self, service):
        client, dataset, manifest, _, _ = service
        template = dataset.instances[0]
        rec = instance_to_record(template)
        rec["id"] = "annotated-0001"
        rec["instruction"] = "Center the tall red banner."
        resp = client.post("/tasks", json=rec)
        assert resp.status_code == 200, resp.text
        assert resp.json()["replaced"] is False
        listed = client.get("/tasks").json()["tasks"]
        assert any(t["id"] == "annotated-0001" for t in listed)
        reparsed = parse_dataset(manifest)  # passes full validation
        assert any(t.id == "annotated-0001" for t in reparsed.instances)

    def test_save_rejects_invalid_record(self, service):
        client, dataset, *_ = service
        rec = instance_to_record(dataset.instances[0])
        rec["id"] = "bad-0001"
        rec["instruction"] = ""
        assert client.post("/tasks", json=rec).status_code == 422

    def test_save_replaces_by_id(self, service):
        client, dataset, *_ = service
        rec = instance_to_record(dataset.instances[0])
        rec["id"] = "annotated-0002"
        assert client.post("/tasks", json=rec).json()["replaced"] is False
        rec["instruction"] = "Updated wording."
        assert client.post("/tasks", json=rec).json()["replaced"] is True

    def test_project_endpoint(self, service):
        client, dataset, *_ = service
        body = {
            "view_dir": {"yaw_deg": 0, "pitch_deg": 0},
            "spec": {"width_px": 96, "height_px": 72, "hfov_deg": 90},
            "directions": [
                {"yaw_deg": 0, "pitch_deg": 0},
                {"yaw_deg": 180, "pitch_deg": 0},
            ],
        }
        resp = client.post("/project", json=body).json()
        center, behind = resp["pixels"]
        assert center == [47.5, 35.5]
        assert behind is None

    def test_panorama_listing(self, service):
        client, dataset, *_ = service
        refs = client.get("/panoramas").json()["panoramas"]
        assert dataset.instances[0].panorama_ref in refs


class TestConcurrencyAndRecords:
    def test_two_clients_isolated(self, service):
        client, dataset, _, records_dir, _ = service
        a = create_episode(client, dataset.instances[0].id, 0)["episode_id"]
        b = create_episode(client, dataset.instances[1].id, 2)["episode_id"]
        scripts = {
            a: [{"type": "rotate", "yaw": 15, "pitch": 0}] * 3,
            b: [{"type": "rotate", "yaw": -15, "pitch": 5}] * 3,
        }
        errors = []

        def drive(eid):
            try:
                for action in scripts[eid]:
                    resp = client.post(f"/episodes/{eid}/step", json={"action": action})
                    assert resp.status_code == 200
            except Exception as exc:  # surfaced after join
                errors.append(exc)

        threads = [threading.Thread(target=drive, args=(eid,)) for eid in (a, b)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        rec_a = client.get(f"/episodes/{a}").json()
        rec_b = client.get(f"/episodes/{b}").json()
        assert [t["turn"] for t in rec_a["turns"]] == [1, 2, 3]
        assert [t["turn"] for t in rec_b["turns"]] == [1, 2, 3]
        assert rec_a["turns"][-1]["yaw_deg"] != rec_b["turns"][-1]["yaw_deg"]

    def test_records_persisted_for_replay(self, service):
        client, dataset, _, records_dir, _ = service
        eid = create_episode(client, dataset.instances[0].id)["episode_id"]
        client.post(f"/episodes/{eid}/step", json={"action": {"type": "submit", "yaw": 0, "pitch": 0}})
        complete, _ = load_records(records_dir)
        assert eid in complete
        assert complete[eid].terminal is not None
        assert (records_dir / complete[eid].reset_image_path).exists()


class TestReportEndpoint:
    def test_serves_persisted_report(self, tmp_path):
        dataset_root = tmp_path / "data"
        dataset, manifest = generate_synthetic(7, 1, 1, dataset_root, pano_size=(256, 128))
        from panosearch.harness import RunConfig, run_benchmark

        run_dir = tmp_path / "runs" / "r1"
        report, _ = run_benchmark(
            dataset, "oracle", RunConfig(out_dir=run_dir, view=ViewSpec(64, 48, 90))
        )
        config = ServiceConfig(
            dataset_path=manifest,
            records_dir=tmp_path / "records",
            runs_root=tmp_path / "runs",
            view=ViewSpec(64, 48, 90),
        )
        client = TestClient(create_app(config))
        got = client.get("/report", params={"run": "r1"}).json()
        assert got == report.to_record()
        assert client.get("/report", params={"run": "nope"}).status_code == 404

"""Acceptance suite: every release criterion, one printed verdict per test.

Run with `pytest tests/test_acceptance.py -v -s` to see the verdict lines.
"""

import json
import math
import time

import numpy as np
import pytest

from panosearch.actions import Rotate
from panosearch.agent.prompts import build_prompt, count_images
from panosearch.env import Episode, EpisodeConfig
from panosearch.geometry import (
    AngularBox,
    Direction,
    ToleranceSpec,
    angular_diff,
)
from panosearch.harness import RunConfig, reaggregate, run_benchmark
from panosearch.parsing import parse_response, render_response
from panosearch.projection import (
    Panorama,
    ViewSpec,
    direction_to_pixel,
    pixel_to_direction,
    render_view,
)
from panosearch.records import load_records
from panosearch.scoring import (
    GrpoConfig,
    compose_reward,
    grpo_advantages,
    judge_success,
    reward_correctness,
    reward_distance,
    reward_format,
)
from panosearch.tasks import (
    DifficultyTag,
    HpsCues,
    TaskInstance,
    generate_synthetic,
)

ACCEPT_SEED = 2024
SMALL_VIEW = ViewSpec(96, 72, 90)


def verdict(name: str, ok: bool, detail: str = "") -> None:
    print(f"[ACCEPTANCE] {'PASS' if ok else 'FAIL'} {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


def make_task(task_type="HOS", target=None, starts=None):
    return TaskInstance(
        id="acc-1",
        task_type=task_type,
        panorama_ref="p.png",
        instruction="find it",
        target=target or AngularBox(Direction(0, 0), 10, 10),
        start_orientations=starts or tuple(Direction(y, 0) for y in (0, 90, 180, 270)),
        difficulty=DifficultyTag("Medium", "annotated"),
        hps_cues=HpsCues(True, True) if task_type == "HPS" else None,
    )


@pytest.fixture(scope="module")
def synth_bench(tmp_path_factory):
    root = tmp_path_factory.mktemp("accept-data")
    dataset, manifest = generate_synthetic(ACCEPT_SEED, 50, 50, root, pano_size=(512, 256))
    return dataset, manifest


@pytest.fixture(scope="module")
def e2e_runs(synth_bench, tmp_path_factory):
    dataset, _ = synth_bench
    runs = tmp_path_factory.mktemp("accept-runs")
    t0 = time.perf_counter()
    oracle_report, oracle_results = run_benchmark(
        dataset, "oracle",
        RunConfig(out_dir=runs / "oracle", seed=ACCEPT_SEED, view=SMALL_VIEW, save_images=False),
    )
    random_report, random_results = run_benchmark(
        dataset, "random",
        RunConfig(out_dir=runs / "random", seed=ACCEPT_SEED, view=SMALL_VIEW, save_images=False),
    )
    elapsed = time.perf_counter() - t0
    return {
        "runs": runs,
        "oracle": (oracle_report, oracle_results),
        "random": (random_report, random_results),
        "elapsed": elapsed,
    }


class TestMetricFidelity:
    def test_judge_agrees_with_bruteforce_grid(self):
        rng = np.random.default_rng(ACCEPT_SEED)
        t0 = time.perf_counter()
        mismatches = 0
        for _ in range(50):
            task_type = "HOS" if rng.random() < 0.5 else "HPS"
            spec = ToleranceSpec.for_task_type(task_type)
            box = AngularBox(
                Direction(rng.uniform(0, 360), rng.uniform(-60, 60)),
                rng.uniform(0.5, 120),
                rng.uniform(0.5, 80),
            )
            task = make_task(task_type, box)
            yaws = rng.uniform(0, 360, 100)
            pitches = rng.uniform(-90, 90, 100)
            # independent oracle: raw interval membership with wrap
            tau_yaw = max(box.width_deg / 2, spec.base_yaw_deg)
            tau_pitch = max(box.height_deg / 2, spec.base_pitch_deg)
            grid_yaw, grid_pitch = np.meshgrid(yaws, pitches)
            offs = (grid_yaw - (box.center.yaw_deg - tau_yaw)) % 360.0
            want = offs <= 2 * tau_yaw
            if spec.pitch_checked:
                want &= np.abs(grid_pitch - box.center.pitch_deg) <= tau_pitch
            for i in range(100):
                for j in range(100):
                    got = judge_success(
                        Direction(float(grid_yaw[i, j]), float(grid_pitch[i, j])), task
                    )
                    if got != bool(want[i, j]):
                        mismatches += 1
        elapsed = time.perf_counter() - t0
        verdict(
            "metric-fidelity: judge_success vs brute-force grid (50 boxes x 10k points)",
            mismatches == 0 and elapsed < 30.0,
            f"{mismatches} mismatches, {elapsed:.1f}s",
        )


class TestProtocolConstants:
    def test_default_tolerances(self):
        hos = ToleranceSpec.for_task_type("HOS")
        hps = ToleranceSpec.for_task_type("HPS")
        ok = (
            (hos.base_yaw_deg, hos.base_pitch_deg, hos.pitch_checked) == (30.0, 20.0, True)
            and (hps.base_yaw_deg, hps.pitch_checked) == (10.0, False)
        )
        verdict("protocol: default tolerances (30,20) HOS / 10 HPS yaw-only", ok)

    def test_turn_cap_and_episode_counts(self, synth_bench, tmp_path):
        dataset, _ = synth_bench
        subset = dataset.instances[:3] + dataset.instances[-3:]
        from panosearch.tasks import Dataset

        small = Dataset(instances=subset, split="bench", root=dataset.root)
        report, results = run_benchmark(
            small, "sweep",
            RunConfig(out_dir=tmp_path / "sweep", view=SMALL_VIEW, save_images=False),
        )
        ok_counts = len(results) == 4 * len(subset)
        ok_cap = all(r.terminal_step == 10 for r in results)
        ok_fail = all(not r.success for r in results)
        verdict(
            "protocol: 10-turn cap, unfinished-as-failure, 4 starts -> 4x episodes",
            ok_counts and ok_cap and ok_fail,
            f"{len(results)} episodes over {len(subset)} instances",
        )

    def test_history_window_five(self, synth_bench):
        dataset, _ = synth_bench
        cfg = EpisodeConfig(view=SMALL_VIEW)
        ok_default = cfg.history_window == 5 and cfg.max_turns == 10
        from panosearch.tasks import PanoramaStore

        task = dataset.instances[0]
        ep = Episode(task, 0, cfg, PanoramaStore(dataset).for_task(task))
        ep.reset()
        for _ in range(8):
            ep.step(Rotate(10, 0), response_text=render_response("t", Rotate(10, 0)))
        msgs = build_prompt(
            task, ep.visible_history(), ep.pending_observation, max_images=cfg.history_window
        )
        ok_budget = count_images(msgs) == 5
        verdict(
            "protocol: history window 5 (image budget in built prompts)",
            ok_default and ok_budget,
            f"{count_images(msgs)} images in an 8-turn prompt",
        )


class TestWrapGolden:
    def test_rotate_minus_45_from_zero(self):
        pano = Panorama(np.full((64, 128, 3), 99, dtype=np.uint8), source_id="g")
        task = make_task("HOS")
        ep = Episode(task, 0, EpisodeConfig(view=ViewSpec(32, 24, 90)), pano)
        ep.reset()
        obs, _ = ep.step(Rotate(-45, 0))
        expect = (
            "Last action is executed successfully, your current direction "
            "(yaw,pitch) is (315,0)."
        )
        verdict(
            "wrap-semantics: rotate(-45,0) from (0,0) yields byte-exact (315,0) feedback",
            obs.feedback_text == expect,
            repr(obs.feedback_text),
        )


class TestRewardAlgebra:
    def test_reward_algebra(self):
        ok = True
        details = []
        # r_corr / r_form domains
        ok &= reward_correctness(True) == 0.5 and reward_correctness(False) == 0.0
        good = "<think>a</think><answer>rotate(1,0)</answer>"
        ok &= reward_format([good, good]) == 0.5 and reward_format([good, "x"]) == 0.0
        # r_dist = 1 at exact zero-tolerance hit (box extents degenerate)
        target0 = AngularBox(Direction(77, -12), 1e-13, 1e-13)
        spec0 = ToleranceSpec(0, 0, True)
        hit = reward_distance(Direction(77, -12), target0, spec0)
        ok &= abs(hit - 1.0) < 1e-12
        details.append(f"zero-tol hit={hit:.15f}")
        # constant over box interior
        target = AngularBox(Direction(200, 10), 40, 24)
        spec = ToleranceSpec.for_task_type("HOS")
        vals = [
            reward_distance(Direction(200 + dy, 10 + dp), target, spec)
            for dy in np.linspace(-30, 30, 31)
            for dp in np.linspace(-20, 20, 21)
        ]
        ok &= max(vals) - min(vals) < 1e-12
        # monotone decreasing outside (non-strict at the antipodal plateau)
        prev = reward_distance(Direction(200 + 30, 10), target, spec)
        lowest = prev
        for off in np.linspace(30.5, 180, 160):
            cur = reward_distance(Direction(200 + float(off), 10), target, spec)
            ok &= cur <= prev + 1e-12
            prev = cur
            lowest = min(lowest, cur)
        ok &= lowest < vals[0]
        # variants compose exactly
        rb1 = compose_reward("form_corr", r_corr=0.5, r_form=0.5, r_dist=0.77)
        rb2 = compose_reward("form_corr_dist", r_corr=0.5, r_form=0.0, r_dist=0.77)
        rb3 = compose_reward("form_dist", r_corr=0.5, r_form=0.5, r_dist=0.77)
        ok &= rb1.total == 1.0 and rb1.r_dist == 0.0
        ok &= abs(rb2.total - 1.27) < 1e-12
        ok &= abs(rb3.total - 1.27) < 1e-12 and rb3.r_corr == 0.0
        verdict("reward-algebra: domains, plateau, monotone tail, exact composition",
                bool(ok), "; ".join(details))


class TestGrpoNormalization:
    def test_sizes_2_to_64(self):
        rng = np.random.default_rng(ACCEPT_SEED)
        worst_mean, worst_std = 0.0, 0.0
        for size in range(2, 65):
            rewards = rng.uniform(-3, 3, size).tolist()
            adv = grpo_advantages(rewards, GrpoConfig(group_size=size))
            mean = sum(adv) / size
            std = math.sqrt(sum((a - mean) ** 2 for a in adv) / size)
            worst_mean = max(worst_mean, abs(mean))
            worst_std = max(worst_std, abs(std - 1.0))
        degenerate = grpo_advantages([1.25] * 8, GrpoConfig(group_size=8))
        ok = worst_mean < 1e-12 and worst_std < 1e-9 and degenerate == [0.0] * 8
        verdict(
            "grpo: zero mean (<1e-12), unit population std (<1e-9), degenerate zeros",
            ok,
            f"worst |mean|={worst_mean:.2e}, worst |std-1|={worst_std:.2e}",
        )


class TestProjectionSuite:
    def test_projection_suite(self):
        t0 = time.perf_counter()
        rng = np.random.default_rng(ACCEPT_SEED)
        spec = ViewSpec(320, 240, 85)
        worst = 0.0
        for _ in range(1000):
            d = Direction(rng.uniform(0, 360), rng.uniform(-80, 80))
            px = rng.uniform(1, spec.width_px - 2)
            py = rng.uniform(1, spec.height_px - 2)
            world = pixel_to_direction(d, spec, px, py)
            back = direction_to_pixel(d, spec, world)
            worst = max(worst, abs(back[0] - px), abs(back[1] - py))
        ok_round = worst <= 1.0

        # planted disc at eval resolution
        from test_projection import gray_pano, paint_disc, smooth_pano, bilinear_at

        pano = gray_pano(4096, 2048)
        paint_disc(pano.pixels, 90, 0, 2.5, (255, 0, 255))
        eval_spec = ViewSpec(1920, 1080, 90)
        view = render_view(pano, Direction(90, 0), eval_spec)
        hit = np.argwhere(
            (view.pixels[:, :, 0] > 200)
            & (view.pixels[:, :, 1] < 60)
            & (view.pixels[:, :, 2] > 200)
        )
        cy, cx = hit.mean(axis=0)
        ok_disc = (
            abs(cx - (eval_spec.width_px - 1) / 2) <= 1.0
            and abs(cy - (eval_spec.height_px - 1) / 2) <= 1.0
        )

        # yaw seam continuity
        sp = smooth_pano()
        seam_spec = ViewSpec(320, 180, 90)
        da, db = Direction(359.5, 0), Direction(0.5, 0)
        va = render_view(sp, da, seam_spec).pixels
        vb = render_view(sp, db, seam_spec).pixels
        diffs = []
        for py_ in range(2, seam_spec.height_px - 2, 3):
            for px_ in range(2, seam_spec.width_px - 2, 3):
                world = pixel_to_direction(da, seam_spec, px_, py_)
                pb = direction_to_pixel(db, seam_spec, world)
                if pb is None:
                    continue
                bx, by = pb
                if 1 <= bx <= seam_spec.width_px - 2 and 1 <= by <= seam_spec.height_px - 2:
                    diffs.append(
                        np.abs(bilinear_at(vb, bx, by) - va[py_, px_].astype(np.float64)).mean()
                    )
        seam_mean = float(np.mean(diffs))
        ok_seam = seam_mean < 2.0

        elapsed = time.perf_counter() - t0
        verdict(
            "projection: round trip <=1px x1000, disc centroid <=1px, seam <2 levels, <2min",
            ok_round and ok_disc and ok_seam and elapsed < 120.0,
            f"worst_rt={worst:.2e}px, centroid=({cx:.2f},{cy:.2f}), "
            f"seam={seam_mean:.3f}, {elapsed:.1f}s",
        )


class TestEndToEnd:
    def test_oracle_and_random_floors(self, e2e_runs):
        oracle_report, oracle_results = e2e_runs["oracle"]
        random_report, _ = e2e_runs["random"]
        elapsed = e2e_runs["elapsed"]

        ok_oracle = (
            oracle_report.per_task_type["HOS"].overall.success_rate == 100.0
            and oracle_report.per_task_type["HPS"].overall.success_rate == 100.0
            and all(r.terminal_step <= 2 for r in oracle_results)
        )
        hos_rate = random_report.per_task_type["HOS"].overall.success_rate
        hps_rate = random_report.per_task_type["HPS"].overall.success_rate
        n_hos = random_report.per_task_type["HOS"].overall.episodes
        n_hps = random_report.per_task_type["HPS"].overall.episodes
        ok_random = hos_rate < 20.0 and hps_rate < 10.0 and n_hos == 200 and n_hps == 200
        verdict(
            "end-to-end: oracle 100.0 in <=2 turns; random <20% HOS / <10% HPS at N=200; <5min",
            ok_oracle and ok_random and elapsed < 300.0,
            f"random HOS={hos_rate:.2f}% HPS={hps_rate:.2f}%, {elapsed:.1f}s",
        )


class TestReportStructure:
    def test_table_shape_and_determinism(self, e2e_runs):
        report, _ = e2e_runs["random"]
        hos = report.per_task_type["HOS"]
        hps = report.per_task_type["HPS"]
        ok_shape = (
            set(hos.by_difficulty) <= {"Easy", "Medium", "Hard"}
            and len(hos.by_difficulty) >= 2
            and set(hps.by_difficulty) <= {"Easy", "Medium", "Hard", "Extreme"}
            and len(hps.by_difficulty) >= 2
        )
        ok_monotone = all(
            a <= b
            for rep in (hos, hps)
            for a, b in zip(rep.cumulative_by_step, rep.cumulative_by_step[1:])
        )
        ok_final = all(
            rep.cumulative_by_step[-1] == pytest.approx(rep.overall.success_rate)
            for rep in (hos, hps)
        )
        again = reaggregate(e2e_runs["runs"] / "random")
        ok_determinism = json.dumps(again.to_record(), sort_keys=True) == json.dumps(
            report.to_record(), sort_keys=True
        )
        verdict(
            "report: Table-1-shaped cells, monotone cumulative curve, re-aggregation determinism",
            ok_shape and ok_monotone and ok_final and ok_determinism,
            f"HOS cells={sorted(hos.by_difficulty)}, HPS cells={sorted(hps.by_difficulty)}",
        )


class TestSftRoundTrip:
    def test_hundred_episode_export(self, tmp_path):
        from panosearch.actions import render_action
        from panosearch.harness import export_sft

        dataset, _ = generate_synthetic(
            ACCEPT_SEED + 1, 13, 12, tmp_path / "data", pano_size=(256, 128)
        )
        run_dir = tmp_path / "run"
        _, results = run_benchmark(
            dataset, "oracle", RunConfig(out_dir=run_dir, view=SMALL_VIEW)
        )
        assert len(results) == 100
        out = tmp_path / "sft.jsonl"
        count = export_sft(run_dir, dataset, out)
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        complete, _ = load_records(run_dir)
        total, good = 0, 0
        for row in rows:
            record = complete[row["episode_id"]]
            assistants = [m for m in row["conversation"] if m["role"] == "assistant"]
            for msg, entry in zip(assistants, record.turns):
                total += 1
                parsed = parse_response(msg["content"][0]["text"])
                if parsed.well_formed and render_action(parsed.action) == entry.action_parsed:
                    good += 1
        ok = count == 100 and total > 0 and good == total
        verdict(
            "sft-export: 100% assistant-message round-trip on a 100-episode run",
            ok,
            f"{good}/{total} messages re-parse, {count} trajectories",
        )

"""Scripted policies: the ground-truth oracle and the floor baselines.

The oracle sees the annotated target (a test-only privilege) and needs at
most one corrective rotation before submitting. The baselines bound the
benchmark from below: seeded random motion, and a fixed sweep that never
submits and therefore always hits the turn cap.
"""

from __future__ import annotations

import random

from panosearch.actions import Rotate, Submit
from panosearch.env import Episode
from panosearch.geometry import angular_diff
from panosearch.scoring import judge_success

SWEEP_OVERLAP = 0.1
RANDOM_SUBMIT_PROB = 0.2
RANDOM_PITCH_RANGE = 30

BASELINE_KINDS = ("random", "sweep")


def _submit_echo(episode: Episode) -> Submit:
    d = episode.current
    return Submit(int(round(d.yaw_deg)) % 360, int(round(d.pitch_deg)))


class OraclePolicy:
    """One corrective turn toward the box center, then submit."""

    def act(self, episode: Episode) -> tuple[str, Rotate | Submit]:
        if judge_success(episode.current, episode.task, episode.tolerance):
            return (
                "The target sits within the tolerance region of the view center; submitting.",
                _submit_echo(episode),
            )
        target = episode.task.target.center
        dyaw = int(round(angular_diff(target.yaw_deg, episode.current.yaw_deg)))
        dpitch = int(round(target.pitch_deg - episode.current.pitch_deg))
        return ("Turning straight toward the annotated target.", Rotate(dyaw, dpitch))


class BaselinePolicy:
    """`random`: seeded wandering with occasional submits. `sweep`: fixed
    rightward scan that never submits (measures turn-cap behavior)."""

    def __init__(self, kind: str, seed: int = 0, hfov_deg: float = 90.0):
        if kind not in BASELINE_KINDS:
            raise ValueError(f"unknown baseline kind {kind!r}, have {BASELINE_KINDS}")
        self.kind = kind
        self.hfov_deg = hfov_deg
        self._rng = random.Random(seed)

    def act(self, episode: Episode) -> tuple[str, Rotate | Submit]:
        if self.kind == "sweep":
            step = int(round(self.hfov_deg * (1.0 - SWEEP_OVERLAP)))
            return ("Sweeping right by one view width.", Rotate(step, 0))
        if self._rng.random() < RANDOM_SUBMIT_PROB:
            return ("Guessing this is close enough.", _submit_echo(episode))
        dyaw = self._rng.randrange(-180, 180)
        dpitch = self._rng.randrange(-RANDOM_PITCH_RANGE, RANDOM_PITCH_RANGE + 1)
        return ("Looking somewhere else.", Rotate(dyaw, dpitch))


def make_policy(kind: str, seed: int = 0, hfov_deg: float = 90.0):
    if kind == "oracle":
        return OraclePolicy()
    return BaselinePolicy(kind, seed=seed, hfov_deg=hfov_deg)

"""Advisors propose the next hyper-parameter set from the session memory.

Offline advisors (heuristic, random, hill-climb) are deterministic given their
seed.  :class:`LLMAdvisor` asks a chat-completions endpoint, or replays canned
replies from a fixture directory.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..swarm.params import BASELINE1, PARAM_NAMES, HyperParams
from .memory import Memory
from .profile import AgentProfile


class AdvisorError(RuntimeError):
    def __init__(self, message: str, raw: str | None = None):
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class Proposal:
    params: dict | None = None
    terminate: bool = False
    rationale: str = ""

    @classmethod
    def stop(cls, rationale: str = "") -> "Proposal":
        return cls(None, True, rationale)


class HeuristicAdvisor:
    """Always proposes the human-heuristic preset."""

    name = "heuristic"

    def __init__(self, hyper: HyperParams = BASELINE1):
        self.hyper = hyper

    def propose(self, profile: AgentProfile, memory: Memory) -> Proposal:
        return Proposal(self.hyper.to_dict(), rationale="fixed heuristic setting")


class RandomAdvisor:
    """Uniform draws inside ``bounds``; never terminates on its own."""

    name = "random"

    def __init__(self, bounds: dict, seed: int = 0):
        self.bounds = dict(bounds)
        self.rng = np.random.default_rng(seed)

    def propose(self, profile: AgentProfile, memory: Memory) -> Proposal:
        vals = {}
        for k in PARAM_NAMES:
            lo, hi = self.bounds[k]
            v = float(self.rng.uniform(lo, hi))
            vals[k] = int(round(v)) if k == "p_num" else v
        return Proposal(vals, rationale="uniform draw")


def _key(vals: dict) -> tuple:
    return tuple(round(float(vals[k]), 6) for k in PARAM_NAMES)


class HillClimbAdvisor:
    """Coordinate-wise hill climbing from the best record so far.

    The first proposal is the human-heuristic preset.  Afterwards each call
    takes the next untried move ``best[k] +- step_fraction[k] * range[k]`` from
    a seeded shuffle of the 16 (coordinate, sign) moves around the current
    best.  It stops after ``patience`` proposals without improvement.
    """

    name = "hillclimb"

    def __init__(self, bounds: dict, step_fractions: dict | float = 0.1, seed: int = 0,
                 patience: int = 3, start: HyperParams = BASELINE1):
        self.bounds = dict(bounds)
        if not isinstance(step_fractions, dict):
            step_fractions = {k: float(step_fractions) for k in PARAM_NAMES}
        self.steps = {k: float(step_fractions.get(k, 0.0)) for k in PARAM_NAMES}
        self.rng = np.random.default_rng(seed)
        self.patience = patience
        self.start = start
        self._visited: set = set()
        self._anchor = None
        self._moves: list = []

    def _step(self, k: str) -> float:
        lo, hi = self.bounds[k]
        d = self.steps[k] * (hi - lo)
        if k == "p_num" and d > 0:
            d = max(1.0, float(round(d)))
        return d

    def _move(self, base: dict, k: str, sign: int) -> dict:
        lo, hi = self.bounds[k]
        v = min(max(base[k] + sign * self._step(k), lo), hi)
        out = dict(base)
        out[k] = int(round(v)) if k == "p_num" else round(v, 6)
        return out

    def propose(self, profile: AgentProfile, memory: Memory) -> Proposal:
        for rec in memory:
            self._visited.add(_key(rec.proposal.to_dict()))
        if not len(memory):
            return Proposal(self.start.to_dict(), rationale="start from the heuristic preset")
        if memory.stale_count() >= self.patience:
            return Proposal.stop(f"no improvement in {self.patience} proposals")
        best = memory.best()
        base = best.proposal.to_dict()
        if self._anchor != best.iteration:
            self._anchor = best.iteration
            moves = [(k, s) for k in PARAM_NAMES for s in (1, -1)]
            order = self.rng.permutation(len(moves))
            self._moves = [moves[i] for i in order]
        while self._moves:
            k, sign = self._moves.pop(0)
            cand = self._move(base, k, sign)
            if _key(cand) not in self._visited:
                return Proposal(cand, rationale=f"{k} {'+' if sign > 0 else '-'}step "
                                                f"from iteration {best.iteration}")
        # nothing new around the best point: re-run it and let patience run out
        return Proposal(base, rationale=f"no untried neighbour of iteration {best.iteration}")


FENCE = re.compile(r"```(?:json)?[ \t]*\n(.*?)```", re.DOTALL | re.IGNORECASE)


def parse_reply(text: str) -> Proposal:
    """Extract the fenced JSON block of an advisor reply."""
    blocks = FENCE.findall(text or "")
    if not blocks:
        raise ValueError("no fenced json block in reply")
    try:
        obj = json.loads(blocks[-1])
    except ValueError as exc:
        raise ValueError(f"fenced block is not valid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ValueError("fenced block must hold a JSON object")
    rationale = FENCE.sub("", text).strip()
    if obj.get("terminate") is True:
        return Proposal.stop(rationale)
    missing = [k for k in PARAM_NAMES if k not in obj]
    if missing:
        raise ValueError(f"missing keys: {', '.join(missing)}")
    vals = {}
    for k in PARAM_NAMES:
        v = obj[k]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValueError(f"{k}: expected a number, got {v!r}")
        vals[k] = v
    return Proposal(vals, rationale=rationale)


class ReplaySource:
    """Numbered reply files of a directory, consumed in sorted order."""

    def __init__(self, directory: str | Path):
        self.files = sorted(p for p in Path(directory).iterdir()
                            if p.is_file() and not p.name.startswith("."))
        if not self.files:
            raise AdvisorError(f"no reply files in {directory}")
        self.pos = 0

    def __call__(self, messages: list[dict]) -> str:
        if self.pos >= len(self.files):
            raise AdvisorError(f"replay exhausted after {len(self.files)} replies")
        text = self.files[self.pos].read_text("utf-8")
        self.pos += 1
        return text


class ChatCompletionsSource:
    """HTTP chat-completions endpoint; the key comes from an environment variable."""

    def __init__(self, endpoint: str, model: str, api_key_env: str = "SWARM_TUNER_API_KEY",
                 timeout: float = 120.0, temperature: float = 0.0):
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout
        self.temperature = temperature

    def __call__(self, messages: list[dict]) -> str:
        import requests

        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        body = {"model": self.model, "messages": messages, "temperature": self.temperature}
        try:
            resp = requests.post(self.endpoint, json=body, headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"]["content"]
        except requests.RequestException as exc:
            raise AdvisorError(f"LLM request failed: {exc}") from None
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise AdvisorError(f"unexpected LLM response shape: {exc}") from None


CORRECTION = ("Your reply could not be parsed ({error}). Answer again with exactly one "
              "fenced ```json block holding an object with the keys {keys}.")


class LLMAdvisor:
    """Prompts a language model with the profile and the full session memory."""

    name = "llm"

    def __init__(self, source):
        self.source = source
        self.transcript: list[dict] = []

    def messages(self, profile: AgentProfile, memory: Memory) -> list[dict]:
        if len(memory):
            last = memory[-1].metrics
            user = ("Runs so far:\n\n" + memory.table() + "\n\nLast run breakdown: "
                    f"min_sum_rate={last['min_sum_rate']:.6g}, F={last['f_value']:.6g}, "
                    f"S={last['s_value']:.6g}, A={last['a_value']:.6g}, C={last['c_value']:.6g}."
                    "\n\nPropose the next hyper-parameters, or terminate.")
        else:
            user = "No runs yet. Propose the first hyper-parameters."
        return [{"role": "system", "content": profile.render()},
                {"role": "user", "content": user}]

    def propose(self, profile: AgentProfile, memory: Memory) -> Proposal:
        msgs = self.messages(profile, memory)
        reply = self.source(msgs)
        self.transcript.append({"iteration": len(memory) + 1, "reply": reply})
        try:
            return parse_reply(reply)
        except ValueError as exc:
            first_error = str(exc)
        msgs = msgs + [{"role": "assistant", "content": reply},
                       {"role": "user", "content": CORRECTION.format(
                           error=first_error, keys=", ".join(profile.output_keys))}]
        retry = self.source(msgs)
        self.transcript.append({"iteration": len(memory) + 1, "reply": retry, "retry": True})
        try:
            return parse_reply(retry)
        except ValueError as exc:
            raise AdvisorError(f"unparseable advisor reply after one retry: {exc}",
                               raw=retry) from None

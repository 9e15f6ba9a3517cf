"""External-evaluator boundary: newline-delimited JSON over worker stdio.

Protocol version 1:

- Worker emits ``{"type":"ready","protocol_version":1}`` on start.
- Engine sends ``{"type":"evaluate","id":...,"genotype":{...},"budget":{...},
  "parent_hint":...,"seed":...}``.
- Worker answers ``{"type":"result","id":...,...}`` or
  ``{"type":"error","id":...,"message":...}``.

Any candidate-level misbehaviour — timeout past the proxy budget, a malformed
or out-of-range message, a closed stream — fails only that candidate; the
worker process is terminated and respawned lazily for the next request.
"""

from __future__ import annotations

import json
import logging
import queue
import subprocess
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

from .evaluation import (
    FitnessRecord,
    PenaltyWeights,
    ProxyBudget,
    failed_record,
    replace_scalar,
    scalar_fitness,
)
from .planner import (
    ArchitecturePlan,
    DEFAULT_PLANNER_CONFIG,
    PlannerConfig,
    build_plan,
)
from .space import Genotype

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
#: Relative Params/FLOPs disagreement between worker and planner worth logging.
COUNT_DISCREPANCY_TOLERANCE = 0.01


class WorkerError(RuntimeError):
    """Endpoint-level fault: the worker cannot be spawned or handshaken."""


class CandidateFault(RuntimeError):
    """Candidate-level fault: this evaluation failed, the search continues."""


class WorkerClient:
    """Owns one worker subprocess and serializes evaluate requests to it."""

    def __init__(self, command: Sequence[str], handshake_timeout: float = 10.0):
        if not command:
            raise WorkerError("empty worker command")
        self.command = list(command)
        self.handshake_timeout = handshake_timeout
        self._process: Optional[subprocess.Popen] = None
        self._messages: "queue.Queue[Tuple[str, object]]" = queue.Queue()

    # -- process management ----------------------------------------------

    def _spawn(self) -> None:
        try:
            self._process = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
            )
        except OSError as exc:
            raise WorkerError(f"cannot spawn worker {self.command!r}: {exc}") from exc
        self._messages = queue.Queue()
        thread = threading.Thread(
            target=_pump_lines, args=(self._process.stdout, self._messages), daemon=True
        )
        thread.start()
        self._handshake()

    def _handshake(self) -> None:
        try:
            kind, payload = self._messages.get(timeout=self.handshake_timeout)
        except queue.Empty:
            self.close()
            raise WorkerError("worker did not send a ready message in time") from None
        if kind != "message" or not isinstance(payload, dict):
            self.close()
            raise WorkerError(f"bad handshake from worker: {payload!r}")
        if payload.get("type") != "ready":
            self.close()
            raise WorkerError(f"expected ready message, got {payload!r}")
        version = payload.get("protocol_version")
        if version != PROTOCOL_VERSION:
            self.close()
            raise WorkerError(
                f"unsupported protocol_version {version!r} (engine speaks {PROTOCOL_VERSION})"
            )

    def ensure_ready(self) -> None:
        if self._process is None or self._process.poll() is not None:
            self._process = None
            self._spawn()

    def close(self) -> None:
        if self._process is not None:
            try:
                self._process.kill()
                self._process.wait(timeout=5)
            except OSError:
                pass
            self._process = None

    # -- evaluation ------------------------------------------------------

    def evaluate_raw(
        self,
        genotype: Genotype,
        *,
        eval_id: int,
        seed: int,
        budget: ProxyBudget,
        parent_hint: Optional[Genotype] = None,
    ) -> dict:
        """Send one evaluate message and return the validated result payload.

        Raises CandidateFault on timeout/protocol error/crash (the worker is
        terminated so the next call starts clean) and WorkerError when the
        process cannot even be spawned.
        """
        self.ensure_ready()
        request = {
            "type": "evaluate",
            "id": eval_id,
            "genotype": genotype.to_dict(),
            "budget": {
                "max_epochs": budget.max_epochs,
                "early_stop_patience": budget.early_stop_patience,
                "max_train_seconds": budget.max_train_seconds,
            },
            "parent_hint": parent_hint.to_dict() if parent_hint else None,
            "seed": seed,
        }
        assert self._process is not None and self._process.stdin is not None
        try:
            self._process.stdin.write(json.dumps(request) + "\n")
            self._process.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self._fail(f"worker stdin closed: {exc}")
        deadline = time.monotonic() + budget.max_train_seconds
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                self._fail(f"timeout after {budget.max_train_seconds} s")
            try:
                kind, payload = self._messages.get(timeout=remaining)
            except queue.Empty:
                self._fail(f"timeout after {budget.max_train_seconds} s")
            if kind == "eof":
                self._fail("worker stream closed mid-evaluation")
            if kind == "malformed":
                self._fail(f"malformed worker message: {payload!r}")
            assert isinstance(payload, dict)
            msg_type = payload.get("type")
            if msg_type == "error":
                self._fail(f"worker error: {payload.get('message', '')!r}")
            if msg_type != "result":
                self._fail(f"unexpected message type {msg_type!r}")
            if payload.get("id") != eval_id:
                self._fail(
                    f"result id {payload.get('id')!r} does not match request {eval_id}"
                )
            self._validate_result(payload)
            return payload

    def _fail(self, reason: str) -> None:
        self.close()
        raise CandidateFault(reason)

    def _validate_result(self, payload: dict) -> None:
        dsc = payload.get("dsc_avg")
        hd95 = payload.get("hd95_avg")
        cost = payload.get("eval_cost_seconds")
        if not isinstance(dsc, (int, float)) or not 0.0 <= dsc <= 1.0:
            self._fail(f"dsc_avg out of range: {dsc!r}")
        if not isinstance(hd95, (int, float)) or hd95 < 0:
            self._fail(f"hd95_avg out of range: {hd95!r}")
        if not isinstance(cost, (int, float)) or cost < 0:
            self._fail(f"eval_cost_seconds out of range: {cost!r}")
        for key in ("params", "flops"):
            value = payload.get(key)
            if not isinstance(value, int) or isinstance(value, bool) or value < 0:
                self._fail(f"{key} must be a nonnegative integer, got {value!r}")
        curve = payload.get("curve")
        if curve is not None and not isinstance(curve, list):
            self._fail(f"curve must be a list, got {type(curve).__name__}")


def _pump_lines(stream, messages: "queue.Queue[Tuple[str, object]]") -> None:
    for line in stream:
        line = line.strip()
        if not line:
            continue
        try:
            messages.put(("message", json.loads(line)))
        except json.JSONDecodeError:
            messages.put(("malformed", line))
    messages.put(("eof", None))


def external_evaluate(
    genotype: Genotype,
    budget: ProxyBudget,
    endpoint: WorkerClient,
    *,
    eval_id: int = 0,
    seed: int = 0,
    parent_hint: Optional[Genotype] = None,
    penalty: Optional[PenaltyWeights] = None,
    planner_config: Optional[PlannerConfig] = None,
    plan: Optional[ArchitecturePlan] = None,
) -> FitnessRecord:
    """Evaluate through a worker; planner counts override worker counts.

    Candidate-level faults return a failed sentinel record; only spawn-level
    faults escape as WorkerError.
    """
    penalty = penalty or PenaltyWeights()
    plan = plan or build_plan(genotype, planner_config or DEFAULT_PLANNER_CONFIG)
    start = time.monotonic()
    try:
        payload = endpoint.evaluate_raw(
            genotype,
            eval_id=eval_id,
            seed=seed,
            budget=budget,
            parent_hint=parent_hint,
        )
    except CandidateFault as fault:
        elapsed = time.monotonic() - start
        logger.warning("candidate %d failed: %s", eval_id, fault)
        return failed_record(plan, str(fault), eval_cost_seconds=elapsed)
    for key, planned in (("params", plan.total_params), ("flops", plan.total_flops)):
        reported = payload[key]
        if planned and abs(reported - planned) / planned > COUNT_DISCREPANCY_TOLERANCE:
            logger.warning(
                "worker %s=%d disagrees with planner %s=%d for candidate %d "
                "(>%.0f%%); planner count kept",
                key, reported, key, planned, eval_id,
                COUNT_DISCREPANCY_TOLERANCE * 100,
            )
    per_class = payload.get("per_class")
    curve = payload.get("curve")
    record = FitnessRecord(
        dsc_avg=float(payload["dsc_avg"]),
        hd95_avg=float(payload["hd95_avg"]),
        params=plan.total_params,
        flops=plan.total_flops,
        eval_cost_seconds=float(payload["eval_cost_seconds"]),
        feasible=True,
        violation="",
        failed=False,
        failure="",
        scalar_fitness=0.0,
        per_class=dict(per_class) if isinstance(per_class, dict) else None,
        curve=tuple(curve) if isinstance(curve, list) else None,
    )
    return replace_scalar(record, scalar_fitness(record, penalty))


class ExternalEvaluator:
    """Evaluator facade over a pool of worker endpoints.

    With pool size 1 behaviour is strictly sequential. With a larger pool,
    distinct candidates may evaluate concurrently; the engine merges results
    by candidate index so outcomes are order-independent.
    """

    def __init__(
        self,
        command: Sequence[str],
        *,
        pool_size: int = 1,
        penalty: Optional[PenaltyWeights] = None,
        planner_config: Optional[PlannerConfig] = None,
        handshake_timeout: float = 10.0,
    ):
        if pool_size < 1:
            raise ValueError(f"pool_size must be ≥ 1, got {pool_size}")
        self.penalty = penalty or PenaltyWeights()
        self.planner_config = planner_config or DEFAULT_PLANNER_CONFIG
        self._clients = [
            WorkerClient(command, handshake_timeout=handshake_timeout)
            for _ in range(pool_size)
        ]
        self._free: "queue.Queue[WorkerClient]" = queue.Queue()
        for client in self._clients:
            self._free.put(client)
        self._executor = (
            ThreadPoolExecutor(max_workers=pool_size) if pool_size > 1 else None
        )

    def evaluate(
        self,
        genotype: Genotype,
        *,
        eval_id: int = 0,
        seed: int = 0,
        budget: Optional[ProxyBudget] = None,
        parent_hint: Optional[Genotype] = None,
        plan: Optional[ArchitecturePlan] = None,
    ) -> FitnessRecord:
        budget = budget or ProxyBudget()
        client = self._free.get()
        try:
            return external_evaluate(
                genotype,
                budget,
                client,
                eval_id=eval_id,
                seed=seed,
                parent_hint=parent_hint,
                penalty=self.penalty,
                planner_config=self.planner_config,
                plan=plan,
            )
        finally:
            self._free.put(client)

    def evaluate_batch(self, tasks: List[dict]) -> List[FitnessRecord]:
        """Evaluate keyword-argument task dicts, preserving task order."""
        if self._executor is None or len(tasks) <= 1:
            return [self.evaluate(**task) for task in tasks]
        futures = [self._executor.submit(self.evaluate, **task) for task in tasks]
        return [future.result() for future in futures]

    def close(self) -> None:
        for client in self._clients:
            client.close()
        if self._executor is not None:
            self._executor.shutdown(wait=False)

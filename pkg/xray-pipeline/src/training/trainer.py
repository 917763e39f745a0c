"""
Mini-batch training loop.

Every batch builds a fresh graph holding the parameters as leaves and one
forward pass per sample. The batch loss is the mean of the per-sample
cross-entropies; one Adam step follows each backward pass. Sample order is
re-drawn each epoch from an Rng seeded with the training seed, and batches
are assembled ahead of the loop on a background thread through a bounded
queue.
"""
from __future__ import annotations

import json
import logging
import math
import queue
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from tqdm import tqdm

from src.architectures.network import ModelGraph, parameter_leaves, wire_forward
from src.autodiff.graph import Graph
from src.autodiff.rng import Rng
from src.config import settings
from src.layers import ops as L
from src.preprocessing.images import Sample
from src.training.config import TrainConfig
from src.training.optimizer import AdamState, adam_step
from src.utils.errors import DataError, NumericalError, ShapeError, StorageError, UsageError
from src.utils.io import writable_path

logger = logging.getLogger(__name__)


class TrainLogRecord(BaseModel):
    """One line of the JSONL training log."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    epoch: int = Field(..., ge=1)
    batch: int = Field(..., ge=1)
    loss: float = Field(..., ge=0)
    running_accuracy: float = Field(..., ge=0, le=1, alias="acc")
    wall_millis: int = Field(default=0, ge=0, alias="ms")

    def to_json_line(self) -> str:
        return json.dumps(self.model_dump(by_alias=True), separators=(",", ":"))


class TrainLogWriter:
    """Appends records to a JSONL file as they are produced."""

    def __init__(self, path: Union[str, Path]):
        self.path = writable_path(path)
        try:
            self._fh = open(self.path, "w", encoding="utf-8", newline="\n")
        except OSError as e:
            raise StorageError(f"Cannot open training log {self.path}: {e}") from e

    def write(self, record: TrainLogRecord) -> None:
        self._fh.write(record.to_json_line() + "\n")
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "TrainLogWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_train_log(path: Union[str, Path]) -> List[TrainLogRecord]:
    with open(path, encoding="utf-8") as fh:
        return [TrainLogRecord.model_validate(json.loads(line)) for line in fh if line.strip()]


class BatchPrefetcher:
    """
    Runs `assemble` over `batches` on a worker thread, at most `depth` ahead.

    Results come back in submission order; an exception in the worker is
    re-raised in the consumer.
    """

    _DONE = object()

    def __init__(self, batches: Sequence[Any], assemble: Callable[[Any], Any], depth: Optional[int] = None):
        self._batches = list(batches)
        self._assemble = assemble
        self._queue: "queue.Queue" = queue.Queue(maxsize=max(depth or settings.prefetch_batches, 1))
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, name="batch-prefetch", daemon=True)

    def _run(self) -> None:
        try:
            for item in self._batches:
                if self._stop.is_set():
                    return
                self._put(("ok", self._assemble(item)))
        except BaseException as e:  # handed to the consumer
            self._put(("error", e))
            return
        self._put(("ok", self._DONE))

    def _put(self, entry) -> None:
        while not self._stop.is_set():
            try:
                self._queue.put(entry, timeout=0.1)
                return
            except queue.Full:
                continue

    def __iter__(self) -> Iterator:
        self._thread.start()
        try:
            while True:
                kind, value = self._queue.get()
                if kind == "error":
                    raise value
                if value is self._DONE:
                    return
                yield value
        finally:
            self._stop.set()
            self._thread.join()


def epoch_batches(order: np.ndarray, batch_size: int) -> List[np.ndarray]:
    """Consecutive batches of `order`; the final batch may be short."""
    return [order[i : i + batch_size] for i in range(0, len(order), batch_size)]


def check_samples(model: ModelGraph, samples: Sequence[Sample]) -> None:
    c = model.config
    expected = (c.input_channels, c.input_size, c.input_size)
    for s in samples:
        if not 0 <= s.label_index < c.num_classes:
            raise DataError(
                f"Sample {s.source_path} has label index {s.label_index}, model has {c.num_classes} classes"
            )
        if s.image.shape != expected:
            raise ShapeError(f"Sample {s.source_path} has shape {list(s.image.shape)}, model expects {list(expected)}")


@dataclass
class BatchResult:
    loss: float
    correct: int
    grads: dict


def batch_loss_and_grads(model: ModelGraph, batch: Sequence[Sample]) -> BatchResult:
    """Mean cross-entropy over the batch and its gradient for every parameter."""
    graph = Graph(model.dtype)
    params = parameter_leaves(graph, model)
    losses = []
    for s in batch:
        fp = wire_forward(graph, model, params, graph.leaf(s.image, name=s.source_path))
        losses.append(L.softmax_cross_entropy(graph, fp.logits, s.label_index))
    total = graph.mean(losses)
    loss = graph.forward(total).item()
    if not math.isfinite(loss):
        names = ", ".join(s.source_path for s in batch)
        raise NumericalError(f"Loss became {loss} on batch [{names}]")

    correct = sum(int(np.argmax(node.cache) == s.label_index) for node, s in zip(losses, batch))
    leaf_grads = graph.backward(total)
    grads = {name: leaf_grads[leaf.id] for name, leaf in params.items()}
    return BatchResult(loss=loss, correct=correct, grads=grads)


def evaluate_accuracy(model: ModelGraph, samples: Sequence[Sample]) -> Tuple[float, float]:
    """(accuracy, mean cross-entropy) over `samples`."""
    if not samples:
        raise UsageError("Cannot evaluate on an empty sample list")
    check_samples(model, samples)
    total_loss = 0.0
    correct = 0
    for s in samples:
        graph = Graph(model.dtype)
        params = parameter_leaves(graph, model)
        fp = wire_forward(graph, model, params, graph.leaf(s.image))
        xent = L.softmax_cross_entropy(graph, fp.logits, s.label_index)
        total_loss += graph.forward(xent).item()
        correct += int(np.argmax(xent.cache) == s.label_index)
    return correct / len(samples), total_loss / len(samples)


def train(
    model: ModelGraph,
    train_set: Sequence[Sample],
    cfg: TrainConfig,
    log_path: Optional[Union[str, Path]] = None,
    timing: bool = False,
    progress: bool = False,
) -> Tuple[ModelGraph, List[TrainLogRecord]]:
    """
    Train `model` on `train_set`; returns the trained model and one log
    record per batch. Unless `timing` is set every record's `ms` is 0, so
    logs of identical runs are byte-identical.
    """
    if not train_set:
        raise UsageError("Training set is empty")
    check_samples(model, train_set)

    rng = Rng(cfg.seed)
    state = AdamState.for_parameters(model.parameters)
    records: List[TrainLogRecord] = []
    writer = TrainLogWriter(log_path) if log_path is not None else None
    stream: Optional[Iterator] = None
    n = len(train_set)
    logger.info(
        f"Training {model.config.arch} on {n} samples: {cfg.epochs} epochs, batch {cfg.batch_size}, lr {cfg.learning_rate}"
    )

    try:
        for epoch in range(1, cfg.epochs + 1):
            epoch_start = time.perf_counter()
            batches = epoch_batches(rng.permutation(n), cfg.batch_size)
            seen = correct = 0
            loss_sum = 0.0

            stream = iter(BatchPrefetcher(batches, lambda idx: [train_set[i] for i in idx]))
            bar = tqdm(stream, total=len(batches), desc=f"Epoch {epoch}/{cfg.epochs}", disable=not progress)
            for b, batch in enumerate(bar, start=1):
                started = time.perf_counter()
                result = batch_loss_and_grads(model, batch)
                params, state = adam_step(model.parameters, result.grads, state, cfg)
                model = model.with_parameters(params)

                seen += len(batch)
                correct += result.correct
                loss_sum += result.loss * len(batch)
                record = TrainLogRecord(
                    epoch=epoch,
                    batch=b,
                    loss=result.loss,
                    acc=correct / seen,
                    ms=int(round((time.perf_counter() - started) * 1000)) if timing else 0,
                )
                records.append(record)
                if writer is not None:
                    writer.write(record)
                bar.set_postfix(loss=f"{result.loss:.4f}", acc=f"{correct / seen:.3f}")
                logger.debug(f"epoch {epoch} batch {b}: loss {result.loss:.6f} acc {correct / seen:.4f}")

            logger.info(
                f"Epoch {epoch}/{cfg.epochs}: mean loss {loss_sum / n:.4f}, accuracy {correct / n:.4f}, "
                f"{time.perf_counter() - epoch_start:.1f}s"
            )
    finally:
        # joins the prefetch thread when the loop exits early
        if stream is not None:
            stream.close()
        if writer is not None:
            writer.close()

    return model, records

"""
Threaded grid worker for parameter sweeps with memory monitoring
"""

import logging
import queue
import threading
from datetime import datetime
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import psutil

from . import config

logger = logging.getLogger(__name__)

_STOP = object()


def current_memory_mb() -> float:
    return psutil.Process().memory_info().rss / 1024 / 1024


class MemoryMonitor:
    """Resident-memory samples with peak tracking"""

    def __init__(self, memory_limit_mb: int = 4096):
        self.memory_limit_mb = memory_limit_mb
        self.baseline_mb: Optional[float] = None
        self.memory_samples: List[Dict[str, Any]] = []
        self.peak_memory_mb = 0.0
        self.peak_memory_time: Optional[datetime] = None
        self.tasks_processed = 0
        self.lock = threading.Lock()

    def record_memory_sample(self, memory_mb: float, context: str = ""):
        now = datetime.now()
        with self.lock:
            if self.baseline_mb is None:
                self.baseline_mb = memory_mb
            self.memory_samples.append({"time": now, "memory_mb": memory_mb, "context": context})
            self.memory_samples = self.memory_samples[-1000:]
            if memory_mb > self.peak_memory_mb:
                self.peak_memory_mb = memory_mb
                self.peak_memory_time = now

    def sample(self, context: str = "") -> float:
        memory_mb = current_memory_mb()
        self.record_memory_sample(memory_mb, context)
        return memory_mb

    def get_warning_level(self, current_memory_mb: float) -> str:
        percent_used = (current_memory_mb / self.memory_limit_mb) * 100
        if percent_used > 90:
            return "critical"
        elif percent_used > 75:
            return "high"
        elif percent_used > 50:
            return "medium"
        else:
            return "low"


MEMORY_MONITOR = MemoryMonitor()


class SweepWorker(threading.Thread):
    """Worker thread evaluating indexed grid tasks from a shared queue"""

    def __init__(self, tasks: "queue.Queue", results: Dict[int, Any], errors: List[Tuple[int, BaseException]],
                 func: Callable[[Any], Any], monitor: MemoryMonitor = MEMORY_MONITOR):
        super().__init__(daemon=True)
        self.tasks = tasks
        self.results = results
        self.errors = errors
        self.func = func
        self.memory_monitor = monitor
        self.last_heartbeat = datetime.now()
        self.current_task: Optional[int] = None
        self.is_running = False

    def run(self):
        self.is_running = True
        while True:
            item = self.tasks.get()
            if item is _STOP:
                self.tasks.task_done()
                break
            index, payload = item
            self.current_task = index
            try:
                memory_before = self.memory_monitor.sample(f"before_task_{index}")
                started = datetime.now()
                self.results[index] = self.func(payload)
                memory_after = self.memory_monitor.sample(f"after_task_{index}")
                elapsed = (datetime.now() - started).total_seconds()
                logger.debug(
                    f"Task {index} done in {elapsed:.2f}s (memory {memory_before:.1f}MB -> {memory_after:.1f}MB)"
                )
                with self.memory_monitor.lock:
                    self.memory_monitor.tasks_processed += 1
            except Exception as e:
                logger.error(f"Worker error processing task {index}: {e}")
                self.errors.append((index, e))
            finally:
                self.current_task = None
                self.last_heartbeat = datetime.now()
                self.tasks.task_done()
        self.is_running = False

    def get_status(self) -> Dict[str, Any]:
        return {
            "current_task": self.current_task,
            "worker_alive": self.is_alive(),
            "last_heartbeat": self.last_heartbeat.isoformat(),
        }


def run_grid(func: Callable[[Any], Any], payloads: Sequence[Any], workers: Optional[int] = None) -> List[Any]:
    """Evaluate func on every payload; results come back in payload order.

    The first failing task's exception is re-raised once every task has finished.
    """
    workers = config.WORKERS if workers is None else max(1, workers)
    workers = min(workers, max(1, len(payloads)))
    tasks: "queue.Queue" = queue.Queue()
    results: Dict[int, Any] = {}
    errors: List[Tuple[int, BaseException]] = []

    for index, payload in enumerate(payloads):
        tasks.put((index, payload))
    for _ in range(workers):
        tasks.put(_STOP)

    logger.info(f"Running {len(payloads)} grid tasks on {workers} worker thread(s)")
    pool = [SweepWorker(tasks, results, errors, func) for _ in range(workers)]
    for worker in pool:
        worker.start()
    tasks.join()
    for worker in pool:
        worker.join()

    if errors:
        index, error = min(errors, key=lambda item: item[0])
        raise error
    return [results[index] for index in range(len(payloads))]


def get_memory_status() -> Dict[str, Any]:
    """Memory summary for run manifests"""
    current = MEMORY_MONITOR.sample("status")
    return {
        "memory_mb": round(current, 1),
        "memory_baseline_mb": round(MEMORY_MONITOR.baseline_mb or 0.0, 1),
        "peak_memory_mb": round(MEMORY_MONITOR.peak_memory_mb, 1),
        "peak_memory_time": MEMORY_MONITOR.peak_memory_time.isoformat() if MEMORY_MONITOR.peak_memory_time else None,
        "tasks_processed": MEMORY_MONITOR.tasks_processed,
        "warning_level": MEMORY_MONITOR.get_warning_level(current),
    }

"""
Monitoring System: stage timing and process resource tracking for weylsheet
Metrics are logged only; they never enter the result files
"""

import time
import psutil
import logging
from typing import Dict, List, Any
from dataclasses import dataclass, field
from collections import defaultdict, deque
from functools import wraps


@dataclass
class MetricPoint:
    timestamp: float
    value: float
    tags: Dict[str, str] = field(default_factory=dict)


@dataclass
class StageStats:
    calls: int = 0
    failures: int = 0
    total_seconds: float = 0.0
    max_seconds: float = 0.0

    @property
    def avg_seconds(self) -> float:
        return self.total_seconds / self.calls if self.calls else 0.0


class RunMonitor:
    """
    Performance monitoring for computation stages.

    Features:
    - Per-stage wall time (calls, failures, mean, max)
    - Process resident memory via psutil
    - Slow-stage alerts in the log
    """

    def __init__(self, max_history: int = 1000):
        self.max_history = max_history
        self.metrics = defaultdict(lambda: deque(maxlen=max_history))
        self.stage_stats: Dict[str, StageStats] = {}
        self.alerts: List[str] = []

        self.logger = logging.getLogger("weylsheet.monitor")

        # Seconds after which a stage is reported as slow
        self.alert_thresholds = {
            "solve_sigma": 60.0,
            "selfcheck": 120.0,
            "default": 30.0,
        }
        self._process = psutil.Process()

    def collect_process_metrics(self) -> Dict[str, float]:
        """Collect resident memory and CPU usage of this process."""
        try:
            rss_mb = self._process.memory_info().rss / (1024 * 1024)
            cpu_percent = self._process.cpu_percent(interval=None)
        except psutil.Error as e:
            self.logger.error(f"Failed to collect process metrics: {e}")
            return {}

        now = time.time()
        self.metrics["rss_mb"].append(MetricPoint(now, rss_mb, {"type": "process"}))
        self.metrics["cpu_percent"].append(MetricPoint(now, cpu_percent, {"type": "process"}))
        return {"rss_mb": rss_mb, "cpu_percent": cpu_percent}

    def record_stage(self, name: str, seconds: float, success: bool):
        stats = self.stage_stats.setdefault(name, StageStats())
        stats.calls += 1
        stats.total_seconds += seconds
        stats.max_seconds = max(stats.max_seconds, seconds)
        if not success:
            stats.failures += 1

        self.metrics[f"{name}_seconds"].append(
            MetricPoint(time.time(), seconds, {"stage": name})
        )

        threshold = self.alert_thresholds.get(name, self.alert_thresholds["default"])
        if seconds > threshold:
            message = f"{name} took {seconds:.2f}s (threshold: {threshold}s)"
            self.alerts.append(message)
            self.logger.warning(f"ALERT: {message}")
        else:
            self.logger.debug(f"{name} finished in {seconds:.3f}s")

    def get_stage_summary(self) -> Dict[str, Any]:
        return {
            name: {
                "calls": s.calls,
                "failures": s.failures,
                "avg_seconds": s.avg_seconds,
                "max_seconds": s.max_seconds,
            }
            for name, s in sorted(self.stage_stats.items())
        }

    def log_summary(self):
        process = self.collect_process_metrics()
        for name, stats in self.get_stage_summary().items():
            self.logger.info(
                f"stage {name}: {stats['calls']} call(s), "
                f"avg {stats['avg_seconds']:.3f}s, max {stats['max_seconds']:.3f}s"
            )
        if process:
            self.logger.info(f"resident memory {process['rss_mb']:.1f} MB")


# Global monitoring instance
monitor = RunMonitor()


def track_stage(stage_name: str):
    """Decorator to time a computation stage automatically."""
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kwargs):
            start_time = time.perf_counter()
            success = True
            try:
                return func(*args, **kwargs)
            except Exception:
                success = False
                raise
            finally:
                monitor.record_stage(stage_name, time.perf_counter() - start_time, success)
        return wrapper
    return decorator

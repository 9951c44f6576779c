"""
Metrics collection for turnstilesampler.

Prometheus counters and histograms covering ingestion volume, buffer
flushes and sample extraction outcomes.
"""

from typing import Any, Dict, Optional

from prometheus_client import CollectorRegistry, Counter, Gauge, Histogram, generate_latest


class MetricsCollector:
    """
    Metrics collector for sketch ingestion and extraction.

    Each collector owns its registry so several collectors (one per test,
    for instance) never clash on metric names.
    """

    def __init__(self, registry: Optional[CollectorRegistry] = None):
        """
        Initialize metrics collector.

        Args:
            registry: Optional Prometheus registry to use
        """
        self.registry = registry or CollectorRegistry()
        self._setup_prometheus_metrics()

    def _setup_prometheus_metrics(self) -> None:
        self.updates_counter = Counter(
            "turnstilesampler_updates_total",
            "Stream updates accepted by sketches",
            ["model"],
            registry=self.registry,
        )

        self.flushes_counter = Counter(
            "turnstilesampler_buffer_flushes_total",
            "Ingestion buffer flushes",
            registry=self.registry,
        )

        self.extractions_counter = Counter(
            "turnstilesampler_extractions_total",
            "Sample extractions by recovery structure and outcome",
            ["recovery", "status"],
            registry=self.registry,
        )

        self.fallbacks_counter = Counter(
            "turnstilesampler_recovery_fallbacks_total",
            "Extractions retried on a deeper level after a failed recovery",
            registry=self.registry,
        )

        self.extraction_duration = Histogram(
            "turnstilesampler_extraction_duration_seconds",
            "Time spent extracting a sample",
            ["recovery"],
            registry=self.registry,
        )

        self.sample_size_gauge = Gauge(
            "turnstilesampler_last_sample_size",
            "Number of entries in the most recent sample",
            registry=self.registry,
        )

    def record_updates(self, model: str, count: int = 1) -> None:
        """Record accepted stream updates."""
        self.updates_counter.labels(model=model).inc(count)

    def record_flush(self) -> None:
        """Record an ingestion buffer flush."""
        self.flushes_counter.inc()

    def record_fallback(self) -> None:
        """Record a retry on a deeper level."""
        self.fallbacks_counter.inc()

    def record_extraction(
        self,
        recovery: str,
        status: str = "success",
        duration: Optional[float] = None,
        sample_size: Optional[int] = None,
    ) -> None:
        """
        Record a sample extraction.

        Args:
            recovery: Recovery structure (frs, efrs)
            status: Outcome (success, error)
            duration: Extraction duration in seconds
            sample_size: Number of sampled entries on success
        """
        self.extractions_counter.labels(recovery=recovery, status=status).inc()

        if duration is not None:
            self.extraction_duration.labels(recovery=recovery).observe(duration)

        if sample_size is not None:
            self.sample_size_gauge.set(sample_size)

    def get_metrics_summary(self) -> Dict[str, Any]:
        """Flatten the registry into a plain dictionary of sample values."""
        summary: Dict[str, Any] = {}
        for metric in self.registry.collect():
            for sample in metric.samples:
                if sample.name.endswith("_created"):
                    continue
                key = sample.name
                if sample.labels:
                    labels = ",".join(f"{k}={v}" for k, v in sorted(sample.labels.items()))
                    key = f"{key}{{{labels}}}"
                summary[key] = sample.value
        return summary

    def export_metrics(self) -> str:
        """
        Export metrics in Prometheus format.

        Returns:
            Prometheus-formatted metrics string
        """
        return generate_latest(self.registry).decode("utf-8")


# Global metrics collector instance
metrics_collector = MetricsCollector()

"""Datasets, workloads, microbenchmarks and reporting for the index comparison."""

from .datasets import gen_lognormal, gen_uniform64, load_dataset, read_dataset, write_dataset
from .microbench import bounded_binary_search, exponential_search, search_microbenchmark
from .oracle import oracle_check
from .report import emit_report
from .workload import MetricsReport, WorkloadSpec, error_histogram, run_workload
from .zipf import ZipfGenerator, zipf_pick

__all__ = [
    "MetricsReport", "WorkloadSpec", "ZipfGenerator", "bounded_binary_search", "emit_report",
    "error_histogram", "exponential_search", "gen_lognormal", "gen_uniform64", "load_dataset",
    "oracle_check", "read_dataset", "run_workload", "search_microbenchmark", "write_dataset",
    "zipf_pick",
]

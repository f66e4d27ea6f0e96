"""Asymmetric RDMA lock: memory model, lock algorithms, checker and simulator."""

__version__ = "0.1.0"

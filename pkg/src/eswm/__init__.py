"""Expected-social-welfare-maximising double auction for crowdsourcing platforms."""
from .mechanism import AuctionOutcome, MechanismParams, run_benchmark, run_eswm
from .model import RequesterProfile, WorkerProfile, expected_valuation, task_valuation

__all__ = [
    "AuctionOutcome",
    "MechanismParams",
    "RequesterProfile",
    "WorkerProfile",
    "expected_valuation",
    "run_benchmark",
    "run_eswm",
    "task_valuation",
]

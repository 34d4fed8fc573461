"""
Log Replay
Recomputes metrics from a saved event log and audits it
"""

import logging
from pathlib import Path
from typing import Optional, Tuple, Union

from src.dispatch.event_log import read_events
from src.dispatch.metrics import AuditReport, audit, compute_metrics
from src.models.metrics import MetricsReport

logger = logging.getLogger('experiments')


def replay(path: Union[str, Path], max_wait: Optional[float] = None,
           relocation_horizon: Optional[float] = None) -> Tuple[MetricsReport, AuditReport]:
    records = read_events(path)
    if not records:
        logger.warning(f"{path}: event log is empty")
    report = compute_metrics(records)
    checked = audit(records, max_wait=max_wait, relocation_horizon=relocation_horizon)
    logger.info(
        f"Replayed {len(records)} record(s) from {path}: R={report.served_ratio:.3f}, "
        f"audit {'passed' if checked.ok else 'failed'}"
    )
    return report, checked

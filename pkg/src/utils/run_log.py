from __future__ import annotations

import json
import logging
from typing import Any

run_logger = logging.getLogger("photoyield.runs")


def log_run(
    action: str,
    entity_type: str | None = None,
    metadata: dict[str, Any] | None = None,
) -> None:
    try:
        payload = {
            "action": action,
            "entity_type": entity_type,
            "metadata": metadata or {},
        }
        run_logger.info(json.dumps(payload, default=str, sort_keys=True))
    except Exception:
        # Run logging must never break a command.
        return

"""Service for writing and reading benchmark reports"""

import csv
import json
import logging
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from core.domain.entities.bench import BenchRecord, RECORD_FIELDS
from core.domain.exceptions import ConfigurationError, SerializationError, UsageError
from core.infrastructure.config.constants import APP_VERSION, REPORT_FORMATS
from core.infrastructure.utils.rng import prng_id

logger = logging.getLogger(__name__)


class ReportService:
    """CSV and JSON reports with a fixed column order"""

    def __init__(self, reports_dir: Path):
        self.reports_dir = Path(reports_dir)

    def default_path(self, fmt: str) -> Path:
        stamp = datetime.now().strftime('%Y%m%d_%H%M%S')
        return self.reports_dir / f"bench_{stamp}.{fmt}"

    def emit_report(self, records: Sequence[BenchRecord], fmt: str = 'csv',
                    path: Optional[Path] = None, seed: Optional[int] = None) -> Path:
        """Write records; JSON adds run metadata and op-count extras"""
        if not records:
            raise UsageError("No benchmark records to report")
        if fmt not in REPORT_FORMATS:
            raise UsageError(f"Unknown report format {fmt!r}")
        path = Path(path) if path is not None else self.default_path(fmt)

        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w', newline='') as f:
                if fmt == 'csv':
                    writer = csv.DictWriter(f, fieldnames=RECORD_FIELDS)
                    writer.writeheader()
                    for record in records:
                        writer.writerow(record.to_row())
                else:
                    json.dump(self._json_document(records, seed), f, indent=2)
        except OSError as e:
            logger.error(f"Cannot write report to {path}: {e}")
            raise ConfigurationError(f"Cannot write report to {path}: {e}")

        logger.info(f"Wrote {len(records)} record(s) to {path}")
        return path

    def _json_document(self, records: Sequence[BenchRecord], seed: Optional[int]) -> Dict[str, Any]:
        return {
            'meta': {
                'version': APP_VERSION,
                'prng': prng_id(),
                'seed': seed,
                'columns': list(RECORD_FIELDS),
            },
            'records': [record.to_dict() for record in records],
        }

    def read_report(self, path: Path) -> List[BenchRecord]:
        """Load records back from a CSV or JSON report"""
        path = Path(path)
        try:
            if path.suffix == '.json':
                with open(path) as f:
                    return [BenchRecord.from_dict(r) for r in json.load(f)['records']]
            with open(path, newline='') as f:
                return [BenchRecord.from_dict(row) for row in csv.DictReader(f)]
        except (OSError, KeyError, ValueError) as e:
            raise SerializationError(f"Cannot read report {path}: {e}")

    def emit_verification(self, results: Sequence[Any], path: Path) -> Path:
        """Write verification outcomes (objects with to_dict) as JSON"""
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, 'w') as f:
                json.dump({
                    'meta': {'version': APP_VERSION, 'prng': prng_id()},
                    'results': [r.to_dict() for r in results],
                }, f, indent=2)
        except OSError as e:
            logger.error(f"Cannot write verification report to {path}: {e}")
            raise ConfigurationError(f"Cannot write verification report to {path}: {e}")
        return path

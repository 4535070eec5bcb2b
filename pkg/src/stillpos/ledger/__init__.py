from stillpos.ledger.journal import Journal
from stillpos.ledger.ledger import Ledger, report_csv
from stillpos.ledger.model import (
    BranchConfig,
    PaymentRecord,
    ReportResult,
    ReportRow,
    SaleRecord,
    TransitionLogEntry,
)

__all__ = [
    "Journal",
    "Ledger",
    "report_csv",
    "SaleRecord",
    "PaymentRecord",
    "BranchConfig",
    "ReportRow",
    "ReportResult",
    "TransitionLogEntry",
]

from .api import ServiceState, create_app
from .storage import Conflict, NotFound, PatientRecord, Store, StorageError

__all__ = [
    "Conflict",
    "NotFound",
    "PatientRecord",
    "ServiceState",
    "StorageError",
    "Store",
    "create_app",
]

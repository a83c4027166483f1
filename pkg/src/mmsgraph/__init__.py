"""Maximin-share allocation of chores and goods on trees and cycles."""
from .core import (
    CHORES,
    CYCLE,
    GOODS,
    TREE,
    ChoreGraph,
    Instance,
    InstanceError,
    SplitCertificate,
    UnsupportedGraph,
    check_feasible,
    mms_split,
    mms_value,
    parse_instance,
)

__version__ = "0.1.0"

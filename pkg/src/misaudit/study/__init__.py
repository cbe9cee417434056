from .records import AnnotationRecord, GroupAssignment, RecordStore, StudyDefinition
from .stats import human_profiles, unanimous_filter, weighted_modality_accuracy
from .agreement import (
    AgreementReport,
    BucketStats,
    agreement_report,
    cohen_kappa,
    fleiss_kappa,
)

__all__ = [
    "AgreementReport",
    "AnnotationRecord",
    "BucketStats",
    "GroupAssignment",
    "RecordStore",
    "StudyDefinition",
    "agreement_report",
    "cohen_kappa",
    "fleiss_kappa",
    "human_profiles",
    "unanimous_filter",
    "weighted_modality_accuracy",
]

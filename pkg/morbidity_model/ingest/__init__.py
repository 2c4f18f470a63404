"""Dataset and location ingestion."""

from .design import build_design, standardize_age
from .loader import (
    RESPONDENTS_FILE,
    load_data_dir,
    load_dataset,
    load_locations,
    respondent_columns,
    write_dataset,
    write_locations,
)
from .locations import LocationTable

__all__ = [
    "RESPONDENTS_FILE",
    "LocationTable",
    "respondent_columns",
    "build_design",
    "standardize_age",
    "load_dataset",
    "write_dataset",
    "load_locations",
    "write_locations",
    "load_data_dir",
]

"""Instance generation, dataset files, benchmark parsers and augmentation."""

from .augment import augment8, dihedral8
from .dataset import (
    Dataset,
    DatasetFormatError,
    DatasetHeader,
    dumps_dataset,
    generate_dataset,
    instance_from_json,
    instance_to_json,
    load_dataset,
    loads_dataset,
    save_dataset,
)
from .generate import generate_instance, generate_instances, make_rng
from .parsers import ParseError, parse_cvrplib, parse_solomon

__all__ = [
    "Dataset",
    "DatasetFormatError",
    "DatasetHeader",
    "ParseError",
    "augment8",
    "dihedral8",
    "dumps_dataset",
    "generate_dataset",
    "generate_instance",
    "generate_instances",
    "instance_from_json",
    "instance_to_json",
    "load_dataset",
    "loads_dataset",
    "make_rng",
    "parse_cvrplib",
    "parse_solomon",
    "save_dataset",
]

from dadet.data.scenes import DataConfig, Domain, apply_fog, generate_scene
from dadet.data.annotations import read_annotations, write_annotations
from dadet.data.dataset import SceneDataset, generate_dataset, load_manifest, load_split
from dadet.data.batches import DomainBatch, DomainBatchComposer

__all__ = [
    "DataConfig",
    "Domain",
    "apply_fog",
    "generate_scene",
    "read_annotations",
    "write_annotations",
    "SceneDataset",
    "generate_dataset",
    "load_manifest",
    "load_split",
    "DomainBatch",
    "DomainBatchComposer",
]

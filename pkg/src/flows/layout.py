"""Where each pipeline stage reads and writes under the run output directory."""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Union

from src.dataset.store import DatasetStore

STYLES = ("original", "light", "gray", "sketch")
SPLITS = ("train", "test")


@dataclass(frozen=True)
class RunLayout:
    root: Path

    @classmethod
    def at(cls, root: Union[str, Path]) -> "RunLayout":
        return cls(Path(root))

    @property
    def data_dir(self) -> Path:
        return self.root / "data"

    @property
    def data(self) -> DatasetStore:
        return DatasetStore(self.data_dir)

    @property
    def discovery_dir(self) -> Path:
        return self.root / "discovery"

    @property
    def gan_dir(self) -> Path:
        return self.root / "gan"

    @property
    def aggregated_dir(self) -> Path:
        return self.root / "aggregated"

    def aggregated_split_dir(self, style: str, split: str) -> Path:
        return self.aggregated_dir / style / split

    @property
    def detector_root(self) -> Path:
        return self.root / "detector"

    def detector_dir(self, variant: str) -> Path:
        return self.detector_root / variant

    @property
    def evaluation_dir(self) -> Path:
        return self.root / "evaluation"

    @property
    def cross_style_dir(self) -> Path:
        return self.root / "cross_style"

    @property
    def report_path(self) -> Path:
        return self.root / "report.json"

    @property
    def state_path(self) -> Path:
        return self.root / "pipeline_state.json"

    def stage_outputs(self) -> Dict[str, List[Path]]:
        """Paths each stage owns; the resume marker hashes exactly these."""
        return {
            "synth-data": [self.data_dir / "original"],
            "stylize": [self.data_dir / style for style in STYLES[1:]],
            "discover": [self.discovery_dir],
            "train-gan": [self.gan_dir],
            "aggregate": [self.aggregated_dir],
            "train-detector": [self.detector_root],
            "evaluate": [self.evaluation_dir],
            "cross-style": [self.cross_style_dir],
            "report": [self.report_path],
        }

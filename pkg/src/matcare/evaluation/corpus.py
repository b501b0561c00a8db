"""Evaluation corpus bundles.

A corpus is a directory of per-patient subdirectories, each holding any of:
reference.txt, hypothesis.txt, system_emr.json, truth_emr.json, flags.json,
ratings.json. Which files must be present depends on the evaluation being
run; loading records what was found.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

from ..emr.document import EMRDocument, document_from_json
from ..emr.schema import EMRSchema
from ..rules import RedFlag
from .ratings import FlagRating


class CorpusBundleError(ValueError):
    """Missing or malformed corpus files."""


@dataclass
class PatientBundle:
    patient_id: str
    reference: Optional[str] = None
    hypothesis: Optional[str] = None
    system_emr: Optional[EMRDocument] = None
    truth_emr: Optional[EMRDocument] = None
    flags: Optional[List[RedFlag]] = None
    ratings: Optional[List[FlagRating]] = None

    def require(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise CorpusBundleError(
                f"patient {self.patient_id}: bundle lacks "
                + ", ".join(missing))


def load_bundle(path: Path, schema: EMRSchema) -> PatientBundle:
    path = Path(path)
    if not path.is_dir():
        raise CorpusBundleError(f"{path} is not a directory")
    bundle = PatientBundle(patient_id=path.name)
    ref = path / "reference.txt"
    hyp = path / "hypothesis.txt"
    if ref.exists():
        bundle.reference = ref.read_text("utf-8").strip()
    if hyp.exists():
        bundle.hypothesis = hyp.read_text("utf-8").strip()
    system = path / "system_emr.json"
    truth = path / "truth_emr.json"
    try:
        if system.exists():
            bundle.system_emr = document_from_json(
                json.loads(system.read_text("utf-8")), schema)
        if truth.exists():
            bundle.truth_emr = document_from_json(
                json.loads(truth.read_text("utf-8")), schema)
        flags = path / "flags.json"
        if flags.exists():
            bundle.flags = [RedFlag.from_json(obj)
                            for obj in json.loads(flags.read_text("utf-8"))]
        ratings = path / "ratings.json"
        if ratings.exists():
            bundle.ratings = [
                FlagRating(
                    flag_id=obj["flag_id"],
                    rater=obj["rater"],
                    medically_accurate=obj["medically_accurate"],
                    patient_relevant=obj["patient_relevant"],
                )
                for obj in json.loads(ratings.read_text("utf-8"))
            ]
    except (json.JSONDecodeError, KeyError, ValueError) as exc:
        raise CorpusBundleError(
            f"patient {bundle.patient_id}: malformed bundle file: {exc}"
        ) from exc
    return bundle


def load_corpus(root: Path, schema: EMRSchema) -> List[PatientBundle]:
    root = Path(root)
    if not root.is_dir():
        raise CorpusBundleError(f"corpus path {root} is not a directory")
    bundles = [load_bundle(p, schema) for p in sorted(root.iterdir())
               if p.is_dir()]
    if not bundles:
        raise CorpusBundleError(f"no patient bundles found in {root}")
    return bundles

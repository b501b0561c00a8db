"""Generate the bundled demonstration evaluation corpus.

Run from the repository root:  python3 tools/gen_eval_corpus.py
Writes src/matcare/data/eval_corpus/<patient>/... deterministically.
"""

import json
from pathlib import Path

from matcare.emr.document import blank_document, document_to_json
from matcare.emr.schema import default_schema
from matcare.emr.values import Affirmed, Date, Denied, Numeric, Text, Unit

ROOT = Path(__file__).resolve().parent.parent / "src/matcare/data/eval_corpus"

schema = default_schema()


def write(patient: str, files: dict) -> None:
    directory = ROOT / patient
    directory.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        path = directory / name
        if isinstance(content, str):
            path.write_text(content + "\n", "utf-8")
        else:
            path.write_text(json.dumps(content, indent=1, sort_keys=True,
                                       ensure_ascii=False) + "\n", "utf-8")


def doc(values: dict) -> dict:
    import datetime as dt
    d = blank_document(schema)
    for fid, v in values.items():
        d.values[fid] = v
    return document_to_json(d, schema)


base = {
    "blood_group_self": Text("b positive"),
    "gravida": Text("two"),
    "hypertension": Affirmed(),
    "diabetes": Denied(),
    "lmp_date": Date(__import__("datetime").date(2026, 2, 1)),
    "hemoglobin_g_dl": Numeric(10.5, Unit.G_DL),
    "bmi_kg_m2": Numeric(37.9, Unit.KG_M2),
    "proposed_plan": Text("repeat complete blood count"),
    "prescriptions": Text("tablet duphaston"),
}

# P301: perfect transcription, one EMR field error (misspelled drug).
write("P301", {
    "reference.txt": "patient has hypertension and her cycle is regular",
    "hypothesis.txt": "patient has hypertension and her cycle is regular",
    "truth_emr.json": doc(base),
    "system_emr.json": doc({**base, "prescriptions": Text("tablet duplascon")}),
    "labels.json": [["prescriptions",
                     "easily_identifiable_and_correctable", "consultant-1"]],
    "flags.json": [
        {"category": "critical", "rule_id": "hypertension",
         "title": "Hypertension", "detail": "BP above threshold.",
         "source": "deterministic", "snippet_ids": []},
        {"category": "critical", "rule_id": "obesity",
         "title": "Obesity", "detail": "BMI above threshold.",
         "source": "deterministic", "snippet_ids": []},
    ],
    "ratings.json": [
        {"flag_id": "hypertension", "rater": "gyn-1",
         "medically_accurate": True, "patient_relevant": True},
        {"flag_id": "obesity", "rater": "gyn-1",
         "medically_accurate": True, "patient_relevant": False},
        {"flag_id": "hypertension", "rater": "gyn-2",
         "medically_accurate": True, "patient_relevant": True},
    ],
})

# P302: the transcription repeats the same sentence three times.
sentence = "surgical history is not significant"
write("P302", {
    "reference.txt": sentence,
    "hypothesis.txt": " ".join([sentence] * 3),
    "truth_emr.json": doc(base),
    "system_emr.json": doc(base),
    "flags.json": [
        {"category": "missing", "rule_id": "missing:hba1c_percent",
         "title": "HbA1c not recorded", "detail": "No HbA1c on file.",
         "source": "deterministic", "snippet_ids": []},
    ],
    "ratings.json": [
        {"flag_id": "missing:hba1c_percent", "rater": "gyn-1",
         "medically_accurate": True, "patient_relevant": True},
    ],
})

# P303: Roman-Urdu spelling drift between reference and hypothesis.
write("P303", {
    "reference.txt": "dard nahin ho raha marz kertay hain",
    "hypothesis.txt": "dard nhi ho rha marz krte hain",
    "truth_emr.json": doc(base),
    "system_emr.json": doc({**base, "diabetes": Affirmed(),
                            "gravida": Text("three")}),
    "labels.json": [
        ["diabetes", "unidentifiable_without_ground_truth", "consultant-1"],
        ["gravida", "no_action_needed", "consultant-1"],
    ],
    "flags.json": [
        {"category": "critical", "rule_id": "anemia",
         "title": "Anemia", "detail": "Hb below threshold.",
         "source": "deterministic", "snippet_ids": []},
    ],
    "ratings.json": [
        {"flag_id": "anemia", "rater": "gyn-2",
         "medically_accurate": False, "patient_relevant": True},
    ],
})

print(f"wrote corpus under {ROOT}")

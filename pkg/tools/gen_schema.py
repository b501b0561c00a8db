"""Generate the bundled EMR schema data file (version 1)."""

import json
import sys

T, X, N, D, O = "tristate", "text", "numeric", "date", "ordinal"


def f(fid, section, label, kind, unit=None, flag=False, critical=False):
    out = {"id": fid, "section": section, "label": label, "kind": kind}
    if unit:
        out["unit"] = unit
    if flag:
        out["required_for_flagging"] = True
    if critical:
        out["clinically_critical"] = True
    return out


PMH = "personal_medical_history"
FAM = "family_history"
SOC = "socio_economic_history"
PAST = "past_pregnancy"
PRES = "present_pregnancy"
PLAN = "proposed_plan"

fields = [
    # Personal and Medical History
    f("blood_group_self", PMH, "Blood Group Self", X),
    f("education_self", PMH, "Education Self", X),
    f("occupation_self", PMH, "Occupation Self", X),
    f("married_since", PMH, "Married Since", X),
    f("gravida", PMH, "Gravida", X),
    f("para", PMH, "Para", X),
    f("miscarriage", PMH, "Miscarriage", T, critical=True),
    f("abortion", PMH, "Abortion", T, critical=True),
    f("menstrual_cycle_regular", PMH, "Normal Menstrual Cycle (Regular/Irregular)", X),
    f("consanguineous_marriage", PMH, "Consanguineous Marriage", T),
    f("vaginal_bleeding_since_last_period", PMH, "Vaginal Bleeding Since Last Period", T, critical=True),
    f("contraceptives", PMH, "Oral Contraceptives, Other Contraceptives", T),
    f("drug_abuse", PMH, "Drug Abuse", T),
    f("smoking", PMH, "Smoking", T),
    f("present_medications", PMH, "Present Medications", X),
    f("lmp_date", PMH, "Last Menstrual Period (LMP)", D, flag=True),
    f("husband_education", PMH, "Husband Education", X),
    f("husband_blood_group", PMH, "Husband Blood Group", X),
    f("husband_occupation", PMH, "Husband Occupation", X),
    f("diabetes", PMH, "Diabetes", T, critical=True),
    f("recurrent_uti", PMH, "Recurrent UTI", T),
    f("cardiac_problem", PMH, "Cardiac Problem", T, critical=True),
    f("hepatitis", PMH, "Hepatitis", T),
    f("anemia_history", PMH, "Anemia", T),
    f("hypertension", PMH, "Hypertension", T, critical=True),
    f("hemoglobinopathy", PMH, "Hemoglobinopathy", T),
    f("endocrine_dysfunction", PMH, "Endocrine Dysfunction (Thyroid/PCOS)", T),
    f("surgical_history", PMH, "Surgical History", T),
    f("blood_transfusion", PMH, "Blood Transfusion", T),
    f("anesthetic_problem", PMH, "Anesthetic Problem", T),
    f("infertility", PMH, "Infertility", T),
    f("operation_allergies", PMH, "Operation Allergies", T),
    # Family History (patient side and husband side)
    f("family_diabetes", FAM, "Family History: Diabetes", T),
    f("family_hypertension", FAM, "Family History: Hypertension", T),
    f("family_multiple_pregnancy", FAM, "Family History: Multiple Pregnancy", T),
    f("family_hemoglobinopathies_tb", FAM, "Family History: Haemoglobinopathies / T.B", T),
    f("family_congenital_anomalies", FAM, "Family History: Congenital Anomalies", T),
    f("husband_family_diabetes", FAM, "Husband Family History: Diabetes", T),
    f("husband_family_hypertension", FAM, "Husband Family History: Hypertension", T),
    f("husband_family_multiple_pregnancy", FAM, "Husband Family History: Multiple Pregnancy", T),
    f("husband_family_hemoglobinopathies_tb", FAM, "Husband Family History: Haemoglobinopathies / T.B", T),
    f("husband_family_congenital_anomalies", FAM, "Husband Family History: Congenital Anomalies", T),
    # Socio-Economic History
    f("family_members_count", SOC, "No of Family Members", X),
    f("joint_nuclear_family", SOC, "Joint/Nuclear Family", X),
    f("husband_status", SOC, "Husband Status", X),
    f("relationship_with_family", SOC, "Relationship with Family and Husband", X),
    f("domestic_abuse", SOC, "History of Domestic Abuse", T),
    f("mental_health_issues", SOC, "Mental Health Issues", T),
    # Past Pregnancy (partially specified template; section is extensible)
    f("previous_deliveries", PAST, "Previous Deliveries", X),
    f("mode_of_delivery", PAST, "Mode of Delivery", X),
    f("miscarriage_week", PAST, "Week of Miscarriage or Abortion", N, unit="weeks"),
    f("dnc_performed", PAST, "DNC Performed", T),
    f("baby_weight_kg", PAST, "Weight of the Baby", N, unit="kg"),
    f("postnatal_complications", PAST, "Postnatal Complications", T),
    f("puerperium_complications", PAST, "Puerperium Complications", T),
    # Present Pregnancy (exam, concerns, vitals-derived values, baseline labs)
    f("weeks_of_gestation", PRES, "Weeks of Gestation", N, unit="weeks"),
    f("edd_date", PRES, "Expected Date of Delivery (EDD)", D),
    f("fundal_height_cm", PRES, "Symphysio Fundal Height", N, unit="cm"),
    f("presentation", PRES, "Presentation", X),
    f("engagement", PRES, "Engagement", X),
    f("fetal_movement", PRES, "Fetal Movement", T, critical=True),
    f("edema", PRES, "Edema", T),
    f("burning_micturition", PRES, "Burning Micturition", T),
    f("pv_discharge", PRES, "PV Discharge", T),
    f("vaginal_itching", PRES, "Itching in Vaginal Area", T),
    f("nausea", PRES, "Nausea", T),
    f("vomiting", PRES, "Vomiting", T),
    f("diarrhea", PRES, "Diarrhea", T),
    f("constipation", PRES, "Constipation", T),
    f("contractions", PRES, "Contractions", T, critical=True),
    f("fluid_leakage", PRES, "Leakage of Fluid per Vagina", T, critical=True),
    f("vaginal_bleeding", PRES, "Vaginal Bleeding", T, critical=True),
    f("warning_symptoms", PRES, "Warning Symptoms", T),
    f("general_food_intake", PRES, "General Food Intake", X),
    f("systolic_bp_mmhg", PRES, "Blood Pressure (Systolic)", N, unit="mmHg", flag=True, critical=True),
    f("diastolic_bp_mmhg", PRES, "Blood Pressure (Diastolic)", N, unit="mmHg", flag=True, critical=True),
    f("bmi_kg_m2", PRES, "Body Mass Index (BMI)", N, unit="kg/m2", flag=True, critical=True),
    f("hemoglobin_g_dl", PRES, "Hb (Hemoglobin)", N, unit="g/dL", flag=True, critical=True),
    f("random_blood_glucose_mg_dl", PRES, "BSR (Blood Sugar Random)", N, unit="mg/dL", flag=True, critical=True),
    f("hba1c_percent", PRES, "HbA1c (Glycated Hemoglobin)", N, unit="percent", flag=True, critical=True),
    f("urine_albumin", PRES, "Urine Dipstick: Albumin", O, flag=True, critical=True),
    f("urine_glucose", PRES, "Urine Dipstick: Glucose", O, flag=True, critical=True),
    # Proposed Plan
    f("proposed_plan", PLAN, "Proposed Plan", X),
    f("differential_diagnosis", PLAN, "Differential Diagnosis", X),
    f("prescriptions", PLAN, "Prescriptions", X),
    f("referrals", PLAN, "Referrals to Other Doctors", T),
    f("follow_up", PLAN, "Follow-up", X),
]

schema = {"version": "1", "fields": fields}
out = sys.argv[1] if len(sys.argv) > 1 else "src/matcare/data/emr_schema_v1.json"
with open(out, "w", encoding="utf-8") as fh:
    json.dump(schema, fh, indent=2, ensure_ascii=False)
    fh.write("\n")
print(f"wrote {out}: {len(fields)} fields")

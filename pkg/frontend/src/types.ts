/** Wire types for the decision-support API. */

export type AlertTypeLabel = "None" | "Interruptive" | "Non-interruptive";

export interface AssessmentPayload {
  analysis: string;
  classification: string;
  reaction_type: string;
  alert_type: AlertTypeLabel;
  consistency_flags: string[];
  raw_response: string;
}

export interface NoteRecord {
  patient_id: string;
  timestamp: string;
  source: string;
  text: string;
}

export interface PatientHistoryPayload {
  patient_id: string;
  notes: NoteRecord[];
}

export interface DrugRecordPayload {
  drug_code: string;
  drug_name: string;
  drug_form: string;
  atc_code: string;
  composition: string;
  excipients: string;
  contraindications: string;
  drug_interactions: string;
  side_effects: string;
  incompatibilities: string;
}

export type BatchState = "queued" | "running" | "done" | "failed";

export interface BatchJobPayload {
  job_id: string;
  state: BatchState;
  completed: number;
  total: number;
  result_location: string | null;
  error?: string | null;
}

export interface AssessmentRequestBody {
  drug_code: string;
  patient_id?: string;
  clinical_note?: string;
  language_hint?: string;
}

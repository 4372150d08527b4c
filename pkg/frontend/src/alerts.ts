/**
 * Alert presentation mapping and view models.
 *
 * The modality is a pure function of the alert type: interruptive alerts
 * block the workflow behind a modal, non-interruptive alerts inform inline,
 * and no-alert outcomes confirm quietly. Stream errors get their own card and
 * are never rendered as a quiet confirmation.
 */

import type { AssessmentPayload } from "./types.js";

export type AlertPresentation =
  | "blockingModal"
  | "inlineBanner"
  | "quietConfirmation";

export function presentationFor(alertType: string): AlertPresentation {
  switch (alertType) {
    case "Interruptive":
      return "blockingModal";
    case "Non-interruptive":
      return "inlineBanner";
    case "None":
      return "quietConfirmation";
    default:
      throw new Error(`unknown alert type: ${alertType}`);
  }
}

export interface AlertView {
  kind: "assessment";
  presentation: AlertPresentation;
  title: string;
  classification: string;
  reactionType: string;
  analysis: string;
  requiresAcknowledgment: boolean;
  consistencyFlags: string[];
}

export interface ErrorCard {
  kind: "error";
  title: string;
  message: string;
}

export function buildAlertView(assessment: AssessmentPayload): AlertView {
  const presentation = presentationFor(assessment.alert_type);
  const titles: Record<AlertPresentation, string> = {
    blockingModal: "Interruptive alert — acknowledgment required",
    inlineBanner: "Non-interruptive alert",
    quietConfirmation: "No alert needed",
  };
  return {
    kind: "assessment",
    presentation,
    title: titles[presentation],
    classification: assessment.classification,
    reactionType: assessment.reaction_type,
    analysis: assessment.analysis,
    requiresAcknowledgment: presentation === "blockingModal",
    consistencyFlags: assessment.consistency_flags,
  };
}

export function buildErrorCard(message: string): ErrorCard {
  return {
    kind: "error",
    title: "Assessment failed",
    message,
  };
}

/** Note text recorded when a clinician overrides or cancels an interruptive alert. */
export function overrideAnnotation(
  action: "override" | "cancel",
  drugCode: string,
  view: AlertView,
): string {
  const verb =
    action === "override"
      ? "Clinician overrode interruptive alert and continued prescription"
      : "Clinician cancelled prescription after interruptive alert";
  return (
    `${verb} of drug ${drugCode}. ` +
    `Alert classification: ${view.classification}; reaction type: ${view.reactionType}.`
  );
}

export interface FormValidation {
  ok: boolean;
  errors: string[];
}

/** Client-side check mirroring the API contract: drug code plus some narrative. */
export function validatePrescriptionForm(
  drugCode: string,
  patientId: string,
  note: string,
): FormValidation {
  const errors: string[] = [];
  if (!drugCode.trim()) {
    errors.push("Drug code is required.");
  }
  if (!patientId.trim() && !note.trim()) {
    errors.push("Provide a clinical note or pick a patient.");
  }
  return { ok: errors.length === 0, errors };
}

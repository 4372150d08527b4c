import { describe, expect, it } from "vitest";

import {
  buildAlertView,
  buildErrorCard,
  overrideAnnotation,
  presentationFor,
  validatePrescriptionForm,
} from "../src/alerts.js";
import type { AssessmentPayload } from "../src/types.js";

function assessment(alert: AssessmentPayload["alert_type"]): AssessmentPayload {
  return {
    analysis: "documented reaction to the active ingredient",
    classification: "DIRECT ACTIVE INGREDIENT REACTIVITY",
    reaction_type: "Life-threatening",
    alert_type: alert,
    consistency_flags: [],
    raw_response: "{}",
  };
}

describe("presentationFor", () => {
  it("maps the three alert types exhaustively", () => {
    expect(presentationFor("Interruptive")).toBe("blockingModal");
    expect(presentationFor("Non-interruptive")).toBe("inlineBanner");
    expect(presentationFor("None")).toBe("quietConfirmation");
  });

  it("rejects unknown labels instead of guessing", () => {
    expect(() => presentationFor("Loud")).toThrow(/unknown alert type/);
  });
});

describe("buildAlertView", () => {
  it("interruptive fixture requires acknowledgment behind a modal", () => {
    const view = buildAlertView(assessment("Interruptive"));
    expect(view.presentation).toBe("blockingModal");
    expect(view.requiresAcknowledgment).toBe(true);
    expect(view.classification).toBe("DIRECT ACTIVE INGREDIENT REACTIVITY");
    expect(view.reactionType).toBe("Life-threatening");
  });

  it("non-interruptive fixture renders an inline banner without blocking", () => {
    const view = buildAlertView(assessment("Non-interruptive"));
    expect(view.presentation).toBe("inlineBanner");
    expect(view.requiresAcknowledgment).toBe(false);
  });

  it("no-alert fixture renders a quiet confirmation", () => {
    const view = buildAlertView(assessment("None"));
    expect(view.presentation).toBe("quietConfirmation");
    expect(view.requiresAcknowledgment).toBe(false);
  });

  it("carries consistency flags through to the view", () => {
    const payload = assessment("None");
    payload.consistency_flags = ["unresolved ingredient name: x"];
    expect(buildAlertView(payload).consistencyFlags).toEqual([
      "unresolved ingredient name: x",
    ]);
  });
});

describe("buildErrorCard", () => {
  it("is a distinct card, never a quiet confirmation", () => {
    const card = buildErrorCard("backend unreachable");
    expect(card.kind).toBe("error");
    expect(card.message).toContain("backend unreachable");
  });
});

describe("overrideAnnotation", () => {
  it("records the decision, drug, and alert labels", () => {
    const view = buildAlertView(assessment("Interruptive"));
    const text = overrideAnnotation("override", "012745017", view);
    expect(text).toContain("overrode");
    expect(text).toContain("012745017");
    expect(text).toContain("DIRECT ACTIVE INGREDIENT REACTIVITY");
    const cancel = overrideAnnotation("cancel", "012745017", view);
    expect(cancel).toContain("cancelled");
  });
});

describe("validatePrescriptionForm", () => {
  it("requires a drug code", () => {
    const result = validatePrescriptionForm("  ", "P1", "note");
    expect(result.ok).toBe(false);
    expect(result.errors.join(" ")).toMatch(/drug code/i);
  });

  it("requires a note or a patient", () => {
    expect(validatePrescriptionForm("123", "", "").ok).toBe(false);
    expect(validatePrescriptionForm("123", "P1", "").ok).toBe(true);
    expect(validatePrescriptionForm("123", "", "note").ok).toBe(true);
  });
});

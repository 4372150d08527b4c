/**
 * DOM wiring for the three screens: prescribe, patient history, batch.
 *
 * One assessment stream is active at a time; an interruptive alert blocks the
 * prescription form behind a modal until the clinician overrides or cancels,
 * and that decision is written back to the patient record as an annotation
 * note.
 */

import {
  buildAlertView,
  buildErrorCard,
  overrideAnnotation,
  validatePrescriptionForm,
} from "./alerts.js";
import type { AlertView } from "./alerts.js";
import {
  batchResultsUrl,
  getHistory,
  postNote,
  startAssessment,
  uploadBatch,
} from "./api.js";
import type { ApiConfig } from "./api.js";
import { describeProgress, parseResultsCsv, pollBatch } from "./batch.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node as T;
}

function apiConfig(): ApiConfig {
  const token = (el<HTMLInputElement>("api-token").value || "").trim();
  return { baseUrl: "", token: token || undefined };
}

// --- prescribe screen --------------------------------------------------------

let streamActive = false;

function setFormEnabled(enabled: boolean): void {
  el<HTMLButtonElement>("submit-assessment").disabled = !enabled;
}

function showOutcome(html: HTMLElement): void {
  const container = el<HTMLDivElement>("outcome");
  container.innerHTML = "";
  container.appendChild(html);
}

function outcomeCard(className: string, title: string, lines: string[]): HTMLElement {
  const card = document.createElement("div");
  card.className = `card ${className}`;
  const heading = document.createElement("h3");
  heading.textContent = title;
  card.appendChild(heading);
  for (const line of lines) {
    const paragraph = document.createElement("p");
    paragraph.textContent = line;
    card.appendChild(paragraph);
  }
  return card;
}

function showBlockingModal(view: AlertView, drugCode: string, patientId: string): void {
  const overlay = el<HTMLDivElement>("modal-overlay");
  el<HTMLElement>("modal-title").textContent = view.title;
  el<HTMLElement>("modal-body").textContent =
    `${view.classification} — ${view.reactionType}. ${view.analysis}`;
  overlay.classList.remove("hidden");

  const conclude = (action: "override" | "cancel") => {
    overlay.classList.add("hidden");
    setFormEnabled(true);
    const annotation = overrideAnnotation(action, drugCode, view);
    if (patientId) {
      postNote(apiConfig(), patientId, annotation).catch((error) =>
        console.error("failed to record override annotation", error),
      );
    } else {
      console.info("override recorded locally (no patient selected):", annotation);
    }
    showOutcome(
      outcomeCard(
        action === "override" ? "banner" : "quiet",
        action === "override" ? "Alert overridden" : "Prescription cancelled",
        [annotation],
      ),
    );
  };

  el<HTMLButtonElement>("modal-override").onclick = () => conclude("override");
  el<HTMLButtonElement>("modal-cancel").onclick = () => conclude("cancel");
}

function renderFinal(view: AlertView, drugCode: string, patientId: string): void {
  if (view.presentation === "blockingModal") {
    showBlockingModal(view, drugCode, patientId);
    return;
  }
  setFormEnabled(true);
  const lines = [
    `Classification: ${view.classification}`,
    `Reaction type: ${view.reactionType}`,
    view.analysis,
    ...view.consistencyFlags.map((flag) => `Note: ${flag}`),
  ];
  showOutcome(
    outcomeCard(
      view.presentation === "inlineBanner" ? "banner" : "quiet",
      view.title,
      lines,
    ),
  );
}

function wirePrescribe(): void {
  el<HTMLFormElement>("prescribe-form").addEventListener("submit", (event) => {
    event.preventDefault();
    if (streamActive) {
      return;
    }
    const drugCode = el<HTMLInputElement>("drug-code").value;
    const patientId = el<HTMLInputElement>("patient-id").value.trim();
    const note = el<HTMLTextAreaElement>("clinical-note").value;
    const validation = validatePrescriptionForm(drugCode, patientId, note);
    const streamBox = el<HTMLPreElement>("stream-text");
    if (!validation.ok) {
      showOutcome(outcomeCard("error", "Check the form", validation.errors));
      return;
    }
    streamBox.textContent = "";
    showOutcome(outcomeCard("quiet", "Assessing…", []));
    setFormEnabled(false);
    streamActive = true;

    void startAssessment(
      apiConfig(),
      {
        drug_code: drugCode.trim(),
        patient_id: patientId || undefined,
        clinical_note: note || undefined,
        language_hint:
          el<HTMLInputElement>("language-hint").value.trim() || undefined,
      },
      {
        onChunk: (delta) => {
          streamBox.textContent += delta;
        },
        onFinal: (assessment) => {
          streamActive = false;
          renderFinal(buildAlertView(assessment), drugCode.trim(), patientId);
        },
        onError: (message) => {
          streamActive = false;
          setFormEnabled(true);
          const card = buildErrorCard(message);
          showOutcome(outcomeCard("error", card.title, [card.message]));
        },
      },
    );
  });
}

// --- patient history screen ---------------------------------------------------

async function refreshHistory(): Promise<void> {
  const patientId = el<HTMLInputElement>("history-patient-id").value.trim();
  if (!patientId) {
    return;
  }
  const list = el<HTMLUListElement>("history-list");
  list.innerHTML = "";
  try {
    const history = await getHistory(apiConfig(), patientId);
    if (history.notes.length === 0) {
      const item = document.createElement("li");
      item.textContent = "No notes recorded for this patient.";
      list.appendChild(item);
    }
    for (const note of history.notes) {
      const item = document.createElement("li");
      const when = document.createElement("strong");
      when.textContent = `${note.timestamp} (${note.source})`;
      const body = document.createElement("div");
      body.textContent = note.text;
      item.appendChild(when);
      item.appendChild(body);
      list.appendChild(item);
    }
  } catch (error) {
    const item = document.createElement("li");
    item.textContent = `Failed to load history: ${String(error)}`;
    list.appendChild(item);
  }
}

function wireHistory(): void {
  el<HTMLButtonElement>("history-load").addEventListener("click", () => {
    void refreshHistory();
  });
  el<HTMLFormElement>("append-note-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const patientId = el<HTMLInputElement>("history-patient-id").value.trim();
    const text = el<HTMLTextAreaElement>("new-note-text").value;
    if (!patientId || !text.trim()) {
      return;
    }
    void postNote(apiConfig(), patientId, text)
      .then(() => {
        el<HTMLTextAreaElement>("new-note-text").value = "";
        return refreshHistory();
      })
      .catch((error) => alert(`Failed to store note: ${String(error)}`));
  });
}

// --- batch screen ----------------------------------------------------------------

function wireBatch(): void {
  el<HTMLFormElement>("batch-form").addEventListener("submit", (event) => {
    event.preventDefault();
    const input = el<HTMLInputElement>("batch-file");
    const file = input.files?.[0];
    const status = el<HTMLParagraphElement>("batch-status");
    if (!file) {
      status.textContent = "Choose a dataset CSV first.";
      return;
    }
    status.textContent = "Uploading…";
    const config = apiConfig();
    void uploadBatch(config, file, file.name)
      .then((job) =>
        pollBatch(config, job.job_id, {
          intervalMs: 750,
          onUpdate: (update) => {
            status.textContent = describeProgress(update).label;
          },
        }),
      )
      .then(async (job) => {
        if (job.state === "failed") {
          status.textContent = `Batch failed: ${job.error ?? "unknown error"}`;
          return;
        }
        const url = batchResultsUrl(config, job.job_id);
        const link = el<HTMLAnchorElement>("batch-download");
        link.href = url;
        link.classList.remove("hidden");
        const response = await fetch(url, {
          headers: config.token
            ? { Authorization: `Bearer ${config.token}` }
            : {},
        });
        renderResultsTable(parseResultsCsv(await response.text()));
      })
      .catch((error) => {
        status.textContent = `Batch failed: ${String(error)}`;
      });
  });
}

function renderResultsTable(
  rows: ReturnType<typeof parseResultsCsv>,
): void {
  const table = el<HTMLTableElement>("batch-results");
  table.innerHTML =
    "<tr><th>Patient</th><th>Drug</th><th>Classification</th>" +
    "<th>Reaction</th><th>Alert</th><th>Status</th></tr>";
  for (const row of rows.slice(0, 200)) {
    const tr = document.createElement("tr");
    for (const value of [
      row.patientId,
      row.drugCode,
      row.classification,
      row.reactionType,
      row.alertType,
      row.status,
    ]) {
      const td = document.createElement("td");
      td.textContent = value;
      tr.appendChild(td);
    }
    table.appendChild(tr);
  }
}

// --- navigation --------------------------------------------------------------------

function showScreen(name: string): void {
  for (const screen of ["prescribe", "patients", "batch"]) {
    el(`screen-${screen}`).classList.toggle("hidden", screen !== name);
  }
}

function wireNavigation(): void {
  const route = () => {
    const hash = window.location.hash.replace("#", "") || "prescribe";
    showScreen(["prescribe", "patients", "batch"].includes(hash) ? hash : "prescribe");
  };
  window.addEventListener("hashchange", route);
  route();
}

document.addEventListener("DOMContentLoaded", () => {
  wireNavigation();
  wirePrescribe();
  wireHistory();
  wireBatch();
});

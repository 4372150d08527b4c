/** Thin client over the decision-support HTTP/SSE surface. */

import { readSSEStream } from "./sse.js";
import type {
  AssessmentPayload,
  AssessmentRequestBody,
  BatchJobPayload,
  DrugRecordPayload,
  NoteRecord,
  PatientHistoryPayload,
} from "./types.js";

export interface ApiConfig {
  baseUrl: string;
  token?: string;
  fetchFn?: typeof fetch;
}

export interface AssessmentHandlers {
  onChunk: (delta: string) => void;
  onFinal: (assessment: AssessmentPayload) => void;
  onError: (message: string) => void;
}

function headers(config: ApiConfig, json = true): Record<string, string> {
  const result: Record<string, string> = {};
  if (json) {
    result["Content-Type"] = "application/json";
  }
  if (config.token) {
    result["Authorization"] = `Bearer ${config.token}`;
  }
  return result;
}

function doFetch(config: ApiConfig): typeof fetch {
  return config.fetchFn ?? fetch;
}

async function expectOk(response: Response): Promise<Response> {
  if (!response.ok) {
    let detail = `${response.status}`;
    try {
      const body = await response.json();
      if (body && typeof body.detail === "string") {
        detail = `${response.status}: ${body.detail}`;
      }
    } catch {
      // non-JSON error body; status alone will do
    }
    throw new Error(`request failed (${detail})`);
  }
  return response;
}

/**
 * Start a streamed assessment. Chunks arrive through onChunk as they are
 * produced; exactly one of onFinal/onError concludes the stream.
 */
export async function startAssessment(
  config: ApiConfig,
  body: AssessmentRequestBody,
  handlers: AssessmentHandlers,
): Promise<void> {
  let response: Response;
  try {
    response = await doFetch(config)(`${config.baseUrl}/api/assessments`, {
      method: "POST",
      headers: headers(config),
      body: JSON.stringify(body),
    });
  } catch (error) {
    handlers.onError(`network error: ${String(error)}`);
    return;
  }
  if (!response.ok) {
    try {
      await expectOk(response);
    } catch (error) {
      handlers.onError(String((error as Error).message));
    }
    return;
  }
  let concluded = false;
  try {
    await readSSEStream(response, (event) => {
      if (event.event === "chunk") {
        handlers.onChunk(event.data);
      } else if (event.event === "final") {
        concluded = true;
        handlers.onFinal(JSON.parse(event.data) as AssessmentPayload);
      } else if (event.event === "error") {
        concluded = true;
        handlers.onError(event.data);
      }
    });
    if (!concluded) {
      handlers.onError("stream ended without a final assessment");
    }
  } catch (error) {
    if (!concluded) {
      handlers.onError(`stream interrupted: ${String(error)}`);
    }
  }
}

export async function postNote(
  config: ApiConfig,
  patientId: string,
  text: string,
): Promise<NoteRecord> {
  const response = await expectOk(
    await doFetch(config)(
      `${config.baseUrl}/api/patients/${encodeURIComponent(patientId)}/notes`,
      {
        method: "POST",
        headers: headers(config),
        body: JSON.stringify({ text, source: "api" }),
      },
    ),
  );
  return (await response.json()) as NoteRecord;
}

export async function getHistory(
  config: ApiConfig,
  patientId: string,
): Promise<PatientHistoryPayload> {
  const response = await expectOk(
    await doFetch(config)(
      `${config.baseUrl}/api/patients/${encodeURIComponent(patientId)}/history`,
      { headers: headers(config, false) },
    ),
  );
  return (await response.json()) as PatientHistoryPayload;
}

export async function getDrug(
  config: ApiConfig,
  drugCode: string,
): Promise<DrugRecordPayload> {
  const response = await expectOk(
    await doFetch(config)(
      `${config.baseUrl}/api/drugs/${encodeURIComponent(drugCode)}`,
      { headers: headers(config, false) },
    ),
  );
  return (await response.json()) as DrugRecordPayload;
}

export async function uploadBatch(
  config: ApiConfig,
  file: File | Blob,
  filename = "dataset.csv",
): Promise<BatchJobPayload> {
  const form = new FormData();
  form.append("file", file, filename);
  const response = await expectOk(
    await doFetch(config)(`${config.baseUrl}/api/batches`, {
      method: "POST",
      headers: headers(config, false),
      body: form,
    }),
  );
  return (await response.json()) as BatchJobPayload;
}

export async function getBatch(
  config: ApiConfig,
  jobId: string,
): Promise<BatchJobPayload> {
  const response = await expectOk(
    await doFetch(config)(
      `${config.baseUrl}/api/batches/${encodeURIComponent(jobId)}`,
      { headers: headers(config, false) },
    ),
  );
  return (await response.json()) as BatchJobPayload;
}

export function batchResultsUrl(config: ApiConfig, jobId: string): string {
  return `${config.baseUrl}/api/batches/${encodeURIComponent(jobId)}/results.csv`;
}

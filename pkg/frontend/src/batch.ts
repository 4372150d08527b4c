/** Batch job polling loop and progress view model. */

import { getBatch } from "./api.js";
import type { ApiConfig } from "./api.js";
import type { BatchJobPayload } from "./types.js";

export interface BatchProgress {
  label: string;
  percent: number;
  terminal: boolean;
}

export function describeProgress(job: BatchJobPayload): BatchProgress {
  const percent =
    job.total > 0 ? Math.round((100 * job.completed) / job.total) : 0;
  switch (job.state) {
    case "queued":
      return { label: "Queued…", percent: 0, terminal: false };
    case "running":
      return {
        label: `Processing ${job.completed}/${job.total} cases`,
        percent,
        terminal: false,
      };
    case "done":
      return { label: `Done: ${job.total} cases processed`, percent: 100, terminal: true };
    case "failed":
      return {
        label: `Failed: ${job.error ?? "unknown error"}`,
        percent,
        terminal: true,
      };
  }
}

export interface PollOptions {
  intervalMs?: number;
  maxPolls?: number;
  onUpdate?: (job: BatchJobPayload) => void;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) =>
  new Promise<void>((resolve) => setTimeout(resolve, ms));

/** Poll a job on a timer until it reaches a terminal state. */
export async function pollBatch(
  config: ApiConfig,
  jobId: string,
  options: PollOptions = {},
): Promise<BatchJobPayload> {
  const interval = options.intervalMs ?? 500;
  const maxPolls = options.maxPolls ?? 600;
  const sleep = options.sleep ?? defaultSleep;
  let job = await getBatch(config, jobId);
  options.onUpdate?.(job);
  let polls = 1;
  while (job.state !== "done" && job.state !== "failed") {
    if (polls >= maxPolls) {
      throw new Error(`batch job ${jobId} did not finish after ${maxPolls} polls`);
    }
    await sleep(interval);
    job = await getBatch(config, jobId);
    options.onUpdate?.(job);
    polls += 1;
  }
  return job;
}

export interface ResultRow {
  patientId: string;
  drugCode: string;
  classification: string;
  reactionType: string;
  alertType: string;
  status: string;
}

/** Parse the results CSV (no embedded commas in its fields by construction). */
export function parseResultsCsv(text: string): ResultRow[] {
  const lines = text.trim().split(/\r?\n/);
  if (lines.length === 0) {
    return [];
  }
  const expected =
    "Patient_ID,Drug_code,Predicted_classification," +
    "Predicted_reaction_type,Predicted_alert_type,Status";
  if (lines[0] !== expected) {
    throw new Error(`unexpected results header: ${lines[0]}`);
  }
  return lines.slice(1).map((line) => {
    const [patientId, drugCode, classification, reactionType, alertType, ...rest] =
      line.split(",");
    return {
      patientId,
      drugCode,
      classification,
      reactionType,
      alertType,
      status: rest.join(","),
    };
  });
}

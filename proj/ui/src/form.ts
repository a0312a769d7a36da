// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

export const METRICS = ["fluency", "creativity", "pcc", "consistency"] as const;
export type Metric = (typeof METRICS)[number];

export const METRIC_HELP: Record<Metric, string> = {
  fluency: "Is the caption natural and grammatically correct?",
  creativity: "Is the comparison unexpected rather than literal or cliched?",
  pcc: "Does the primary concept match what the video is about?",
  consistency: "Does the metaphor as a whole fit the video?",
};

export interface Progress {
  labeled: number;
  assigned: number;
}

export interface TaskView {
  task_id: string;
  video_id: string;
  video_url: string;
  caption: string;
  blind: boolean;
  model_id?: string;
  progress?: Progress;
}

export type Answers = Partial<Record<Metric, boolean>>;

export interface LabelBody {
  annotator_id: string;
  task_id: string;
  fluency: boolean;
  creativity: boolean;
  pcc: boolean;
  consistency: boolean;
}

export function canSubmit(answers: Answers): boolean {
  return METRICS.every((m) => typeof answers[m] === "boolean");
}

export function buildBody(annotator: string, taskId: string, answers: Answers): LabelBody {
  if (!annotator) throw new Error("annotator id is required");
  if (!canSubmit(answers)) throw new Error("all four judgments are required");
  return {
    annotator_id: annotator,
    task_id: taskId,
    fluency: answers.fluency!,
    creativity: answers.creativity!,
    pcc: answers.pcc!,
    consistency: answers.consistency!,
  };
}

// Fields the page may show. The model id only appears outside blind mode.
export function visibleFields(task: TaskView): Record<string, string> {
  const out: Record<string, string> = { caption: task.caption, video_url: task.video_url };
  if (!task.blind && task.model_id) out.model_id = task.model_id;
  return out;
}

export function percent(p: Progress): number {
  if (p.assigned <= 0) return 0;
  return Math.round((100 * Math.min(p.labeled, p.assigned)) / p.assigned);
}

export function isComplete(p: Progress): boolean {
  return p.assigned > 0 && p.labeled >= p.assigned;
}

export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const PENDING_KEY = "metaphor-eval.pending";

// Labels that have not reached the server yet, kept across reloads.
export class PendingQueue {
  constructor(private readonly store: KeyValueStore) {}

  all(): LabelBody[] {
    const raw = this.store.getItem(PENDING_KEY);
    if (!raw) return [];
    try {
      const parsed = JSON.parse(raw);
      return Array.isArray(parsed) ? (parsed as LabelBody[]) : [];
    } catch {
      return [];
    }
  }

  add(body: LabelBody): void {
    const rest = this.all().filter((b) => !(b.task_id === body.task_id && b.annotator_id === body.annotator_id));
    rest.push(body);
    this.store.setItem(PENDING_KEY, JSON.stringify(rest));
  }

  remove(body: LabelBody): void {
    const rest = this.all().filter((b) => !(b.task_id === body.task_id && b.annotator_id === body.annotator_id));
    if (rest.length === 0) this.store.removeItem(PENDING_KEY);
    else this.store.setItem(PENDING_KEY, JSON.stringify(rest));
  }

  // Sends every queued label; the ones that fail stay queued.
  async flush(send: (body: LabelBody) => Promise<boolean>): Promise<number> {
    let sent = 0;
    for (const body of this.all()) {
      let ok = false;
      try {
        ok = await send(body);
      } catch {
        ok = false;
      }
      if (!ok) continue;
      this.remove(body);
      ++sent;
    }
    return sent;
  }
}

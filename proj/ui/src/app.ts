// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 metaphor-eval contributors

import {
  Answers,
  LabelBody,
  METRIC_HELP,
  METRICS,
  PendingQueue,
  Progress,
  TaskView,
  buildBody,
  canSubmit,
  isComplete,
  percent,
  visibleFields,
} from "./form.js";

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

const pending = new PendingQueue(window.localStorage);
let annotator = window.sessionStorage.getItem("metaphor-eval.annotator") ?? "";
let current: TaskView | null = null;
let answers: Answers = {};

function banner(text: string | null): void {
  const el = $("banner");
  el.hidden = text === null;
  el.textContent = text ?? "";
}

async function send(body: LabelBody): Promise<boolean> {
  const res = await fetch("/api/labels", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  // Client errors will not succeed on retry, so they leave the queue.
  if (res.status >= 400 && res.status < 500) {
    banner(`label rejected: ${(await res.json()).error ?? res.status}`);
    return true;
  }
  return res.ok;
}

function showProgress(p: Progress): void {
  const pct = percent(p);
  $("bar").style.width = `${pct}%`;
  $("counts").textContent = `${p.labeled} of ${p.assigned} labeled (${pct}%)`;
  $("complete").hidden = !isComplete(p);
}

async function refreshProgress(): Promise<void> {
  try {
    const res = await fetch(`/api/progress?annotator=${encodeURIComponent(annotator)}`);
    if (!res.ok) throw new Error(String(res.status));
    showProgress(await res.json());
  } catch {
    banner("The judgment server is unreachable.");
  }
}

function renderForm(): void {
  const form = $("judgments");
  form.replaceChildren();
  for (const m of METRICS) {
    const row = document.createElement("div");
    row.className = "metric";
    const label = document.createElement("span");
    label.textContent = m;
    label.title = METRIC_HELP[m];
    row.append(label);
    for (const value of [true, false]) {
      const b = document.createElement("button");
      b.type = "button";
      b.textContent = value ? "Yes" : "No";
      b.className = answers[m] === value ? "chosen" : "";
      b.onclick = () => {
        answers[m] = value;
        renderForm();
      };
      row.append(b);
    }
    form.append(row);
  }
  ($("submit") as HTMLButtonElement).disabled = !canSubmit(answers);
}

function renderTask(task: TaskView): void {
  current = task;
  answers = {};
  const fields = visibleFields(task);
  $("caption").textContent = fields.caption;
  $("model").textContent = fields.model_id ? `model: ${fields.model_id}` : "";
  const video = $("video") as HTMLVideoElement;
  const fallback = $("fallback") as HTMLAnchorElement;
  fallback.href = fields.video_url;
  fallback.hidden = true;
  video.hidden = false;
  video.onerror = () => {
    video.hidden = true;
    fallback.hidden = false;
  };
  video.src = fields.video_url;
  $("task").hidden = false;
  renderForm();
  if (task.progress) showProgress(task.progress);
}

async function nextTask(): Promise<void> {
  try {
    const res = await fetch(`/api/tasks/next?annotator=${encodeURIComponent(annotator)}`);
    const body = await res.json();
    if (!res.ok) {
      banner(body.error ?? `error ${res.status}`);
      return;
    }
    banner(null);
    if (body.done) {
      current = null;
      $("task").hidden = true;
      showProgress(body.progress);
      return;
    }
    renderTask(body as TaskView);
  } catch {
    banner("The judgment server is unreachable.");
  }
}

async function submit(): Promise<void> {
  if (!current) return;
  const body = buildBody(annotator, current.task_id, answers);
  pending.add(body);
  const sent = await pending.flush(send);
  if (pending.all().length > 0) {
    banner(`${pending.all().length} label(s) not sent yet; they will be retried.`);
    if (sent === 0) return;
  }
  await refreshProgress();
  await nextTask();
}

async function start(): Promise<void> {
  $("login").hidden = true;
  $("session").hidden = false;
  $("who").textContent = annotator;
  await pending.flush(send);
  await refreshProgress();
  await nextTask();
}

$("start").onclick = () => {
  annotator = ($("annotator") as HTMLInputElement).value.trim();
  if (!annotator) return;
  window.sessionStorage.setItem("metaphor-eval.annotator", annotator);
  void start();
};
$("submit").onclick = () => void submit();
if (annotator) void start();

/**
 * DOM wiring: one annotator per browser session, no server.
 *
 * The manifest is opened with a file picker, annotations are committed
 * task by task, and exports are downloaded as local files (canonical JSON
 * lines plus an elapsed-time CSV). All annotation logic lives in the
 * DOM-free session module.
 */

import { AnnotationTask } from "./model.js";
import { parseManifest, orderTasks } from "./queue.js";
import { AnnotationSession, CommitBlockedError } from "./session.js";
import { ClipPlayer } from "./player.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function download(filename: string, text: string, type: string): void {
  const blob = new Blob([text], { type });
  const url = URL.createObjectURL(blob);
  const link = document.createElement("a");
  link.href = url;
  link.download = filename;
  link.click();
  URL.revokeObjectURL(url);
}

export class App {
  private session: AnnotationSession | null = null;
  private player: ClipPlayer | null = null;
  private urlTemplate = "";

  private readonly video = el<HTMLVideoElement>("video");
  private readonly startSlider = el<HTMLInputElement>("start-slider");
  private readonly endSlider = el<HTMLInputElement>("end-slider");
  private readonly notice = el<HTMLElement>("notice");

  start(): void {
    el<HTMLButtonElement>("begin").addEventListener("click", () => void this.begin());
    this.startSlider.addEventListener("input", () => this.onSlider("start"));
    this.endSlider.addEventListener("input", () => this.onSlider("end"));
    el<HTMLButtonElement>("review").addEventListener("click", () => void this.review());
    el<HTMLButtonElement>("commit").addEventListener("click", () => this.commit());
    el<HTMLButtonElement>("skip").addEventListener("click", () =>
      this.skipCurrent("skipped by annotator"),
    );
    el<HTMLButtonElement>("export-canonical").addEventListener("click", () => this.export("jsonl"));
    el<HTMLButtonElement>("export-elapsed").addEventListener("click", () => this.export("csv"));
    this.video.addEventListener("error", () => {
      this.skipCurrent("video source failed to load");
    });
  }

  private async begin(): Promise<void> {
    const annotatorId = el<HTMLInputElement>("annotator-id").value.trim();
    const fileInput = el<HTMLInputElement>("manifest-file");
    const shuffle = el<HTMLInputElement>("shuffle").checked;
    this.urlTemplate = el<HTMLInputElement>("url-template").value.trim();
    if (!annotatorId) return this.warn("enter an annotator id first");
    const file = fileInput.files?.[0];
    if (!file) return this.warn("choose a task manifest file first");
    let tasks: AnnotationTask[];
    try {
      tasks = orderTasks(parseManifest(await file.text()), annotatorId, shuffle);
    } catch (err) {
      return this.warn(err instanceof Error ? err.message : String(err));
    }
    this.session = new AnnotationSession(tasks, annotatorId);
    this.player = new ClipPlayer(this.video);
    this.player.onError = (message) => this.warn(message);
    el<HTMLElement>("setup").hidden = true;
    el<HTMLElement>("workspace").hidden = false;
    this.showCurrent();
  }

  private showCurrent(): void {
    const session = this.session!;
    const task = session.currentTask;
    const { done, total } = session.progress;
    el<HTMLElement>("progress").textContent = `${done} / ${total}`;
    if (!task) {
      el<HTMLElement>("annotate").hidden = true;
      el<HTMLElement>("complete").hidden = false;
      el<HTMLElement>("complete-summary").textContent =
        `${session.results.length} annotations committed, ${session.skipped.length} tasks skipped.`;
      return;
    }
    el<HTMLElement>("annotate").hidden = false;
    el<HTMLElement>("query").textContent = task.query;
    const source = task.videoUrl ??
      (this.urlTemplate ? this.urlTemplate.replaceAll("{video_id}", task.videoId) : "");
    if (!source) {
      this.skipCurrent("no video source for this task");
      return;
    }
    this.video.src = source;
    for (const slider of [this.startSlider, this.endSlider]) {
      slider.min = "0";
      slider.max = task.duration.toFixed(1);
      slider.step = "0.1";
    }
    this.syncSliders();
    this.notice.textContent = "";
  }

  private onSlider(which: "start" | "end"): void {
    const session = this.session!;
    if (which === "start") session.setStart(Number(this.startSlider.value));
    else session.setEnd(Number(this.endSlider.value));
    this.syncSliders();
    this.video.currentTime = session.selection[which];
  }

  private syncSliders(): void {
    const { start, end } = this.session!.selection;
    this.startSlider.value = String(start);
    this.endSlider.value = String(end);
    el<HTMLElement>("selection").textContent =
      `[${start.toFixed(1)} s, ${end.toFixed(1)} s]`;
  }

  private async review(): Promise<void> {
    const session = this.session!;
    await this.player!.review(session.selection);
  }

  private commit(): void {
    const session = this.session!;
    try {
      session.commit();
    } catch (err) {
      if (err instanceof CommitBlockedError) return this.warn(err.message);
      throw err;
    }
    this.showCurrent();
  }

  private skipCurrent(reason: string): void {
    const session = this.session;
    if (!session || !session.currentTask) return;
    const sampleId = session.currentTask.sampleId;
    session.markSkipped(reason);
    this.warn(`task ${sampleId} skipped: ${reason}`);
    this.showCurrent();
  }

  private export(kind: "jsonl" | "csv"): void {
    const session = this.session!;
    try {
      if (kind === "jsonl") {
        download(
          `annotations_${session.annotatorId}.jsonl`,
          session.exportCanonicalJsonLines(),
          "application/jsonl",
        );
      } else {
        download(`elapsed_${session.annotatorId}.csv`, session.exportElapsedCsv(), "text/csv");
      }
    } catch (err) {
      this.warn(err instanceof Error ? err.message : String(err));
    }
  }

  private warn(message: string): void {
    this.notice.textContent = message;
  }
}

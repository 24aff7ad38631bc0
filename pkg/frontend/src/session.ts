/**
 * Annotation session state: one annotator working through a task queue.
 *
 * The session owns the slider state for the current task (snapped to the
 * 0.1 s granularity, end never below start), the commit rules, per-task
 * elapsed timing, and the export builders. It is deliberately DOM-free so
 * the whole flow is unit-testable; the app layer only forwards events.
 */

import {
  AnnotationResult,
  AnnotationTask,
  CanonicalRecord,
  mergeResults,
  recordsToJsonLines,
  snapTime,
} from "./model.js";

export interface SkippedTask {
  task: AnnotationTask;
  reason: string;
}

export interface SliderState {
  start: number;
  end: number;
  moved: boolean;
}

export class CommitBlockedError extends Error {}

export class AnnotationSession {
  readonly annotatorId: string;
  readonly results: AnnotationResult[] = [];
  readonly skipped: SkippedTask[] = [];

  private readonly tasks: AnnotationTask[];
  private readonly now: () => number;
  private cursor = 0;
  private sliders: SliderState = { start: 0, end: 0, moved: false };
  private shownAt = 0;

  constructor(tasks: AnnotationTask[], annotatorId: string, now: () => number = Date.now) {
    if (!annotatorId.trim()) throw new Error("annotator id must not be empty");
    this.tasks = tasks.slice();
    this.annotatorId = annotatorId.trim();
    this.now = now;
    this.resetSliders();
  }

  get currentTask(): AnnotationTask | null {
    return this.cursor < this.tasks.length ? this.tasks[this.cursor]! : null;
  }

  /** True once every task was committed or skipped: show the completion screen. */
  get isComplete(): boolean {
    return this.currentTask === null;
  }

  get progress(): { done: number; total: number } {
    return { done: this.cursor, total: this.tasks.length };
  }

  get sliderState(): SliderState {
    return { ...this.sliders };
  }

  private resetSliders(): void {
    const task = this.currentTask;
    this.sliders = { start: 0, end: task ? snapTime(task.duration) : 0, moved: false };
    this.shownAt = this.now();
  }

  /** Move the start handle: snapped, clamped to [0, end]. */
  setStart(value: number): void {
    const task = this.requireTask();
    const snapped = Math.min(
      Math.max(snapTime(value), 0),
      this.sliders.end,
    );
    if (snapped !== this.sliders.start) this.sliders.moved = true;
    this.sliders.start = Math.min(snapped, snapTime(task.duration));
  }

  /** Move the end handle: snapped, clamped to [start, duration]. */
  setEnd(value: number): void {
    const task = this.requireTask();
    const snapped = Math.max(
      Math.min(snapTime(value), snapTime(task.duration)),
      this.sliders.start,
    );
    if (snapped !== this.sliders.end) this.sliders.moved = true;
    this.sliders.end = snapped;
  }

  get selection(): { start: number; end: number } {
    return { start: this.sliders.start, end: this.sliders.end };
  }

  /**
   * Commit the current selection. Blocked (with a prompt-worthy error) when
   * the sliders were never touched, so accidental [0, duration] defaults
   * cannot slip through.
   */
  commit(): AnnotationResult {
    const task = this.requireTask();
    if (!this.sliders.moved) {
      throw new CommitBlockedError(
        "move the start or end slider before committing (full-video defaults are rejected)",
      );
    }
    const result: AnnotationResult = {
      sampleId: task.sampleId,
      videoId: task.videoId,
      duration: task.duration,
      query: task.query,
      annotatorId: this.annotatorId,
      moment: { start: this.sliders.start, end: this.sliders.end },
      elapsedSeconds: Math.max(0, (this.now() - this.shownAt) / 1000),
    };
    this.results.push(result);
    this.advance();
    return result;
  }

  /** Flag the current task (unreachable video, decode failure, ...) and move on. */
  markSkipped(reason: string): void {
    const task = this.requireTask();
    this.skipped.push({ task, reason });
    this.advance();
  }

  private advance(): void {
    this.cursor += 1;
    this.resetSliders();
  }

  private requireTask(): AnnotationTask {
    const task = this.currentTask;
    if (task === null) throw new Error("no task remaining in this session");
    return task;
  }

  /** Canonical records (one per committed annotation, session order). */
  exportRecords(): CanonicalRecord[] {
    if (!this.results.length) {
      throw new Error("nothing to export: commit at least one annotation");
    }
    return mergeResults(this.results);
  }

  exportCanonicalJsonLines(): string {
    return recordsToJsonLines(this.exportRecords());
  }

  /** Sidecar CSV with per-annotation completion times. */
  exportElapsedCsv(): string {
    if (!this.results.length) {
      throw new Error("nothing to export: commit at least one annotation");
    }
    const lines = ["sample_id,annotator_id,elapsed_seconds"];
    for (const r of this.results) {
      lines.push(`${r.sampleId},${r.annotatorId},${r.elapsedSeconds.toFixed(3)}`);
    }
    return lines.join("\n") + "\n";
  }
}

import { describe, expect, it } from "vitest";

import { parseManifest } from "../src/queue.js";
import { AnnotationSession, CommitBlockedError } from "../src/session.js";
import { validateCanonicalRecord } from "../src/model.js";

function makeTasks(n = 3, duration = 30): ReturnType<typeof parseManifest> {
  return parseManifest(
    Array.from({ length: n }, (_, i) =>
      JSON.stringify({ sample_id: `s${i}`, video_id: `v${i}`, duration, query: `query ${i}` }),
    ).join("\n"),
  );
}

function makeClock(start = 1_000_000): { now: () => number; advance: (ms: number) => void } {
  let t = start;
  return { now: () => t, advance: (ms) => (t += ms) };
}

describe("slider state", () => {
  it("starts at the full video and counts as unmoved", () => {
    const session = new AnnotationSession(makeTasks(), "ann-1");
    expect(session.sliderState).toEqual({ start: 0, end: 30, moved: false });
  });

  it("snaps to 0.1 s", () => {
    const session = new AnnotationSession(makeTasks(), "ann-1");
    session.setStart(3.17);
    session.setEnd(9.44);
    expect(session.selection).toEqual({ start: 3.2, end: 9.4 });
  });

  it("end handle can never cross below the start handle", () => {
    const session = new AnnotationSession(makeTasks(), "ann-1");
    session.setStart(10);
    session.setEnd(4);
    expect(session.selection.end).toBe(10);
    session.setStart(25);
    expect(session.selection.start).toBe(10);
  });

  it("clamps to [0, duration]", () => {
    const session = new AnnotationSession(makeTasks(1, 20), "ann-1");
    session.setEnd(500);
    expect(session.selection.end).toBe(20);
    session.setStart(-3);
    expect(session.selection.start).toBe(0);
  });

  it("allows a zero-length selection (single-frame hold)", () => {
    const session = new AnnotationSession(makeTasks(), "ann-1");
    session.setStart(5);
    session.setEnd(5);
    expect(session.selection).toEqual({ start: 5, end: 5 });
  });
});

describe("commit rules", () => {
  it("blocks committing untouched sliders", () => {
    const session = new AnnotationSession(makeTasks(), "ann-1");
    expect(() => session.commit()).toThrow(CommitBlockedError);
    expect(session.results).toHaveLength(0);
  });

  it("commits a moved selection, snapped to the grid", () => {
    const clock = makeClock();
    const session = new AnnotationSession(makeTasks(), "ann-1", clock.now);
    session.setStart(2.04);
    session.setEnd(8.26);
    clock.advance(4_500);
    const result = session.commit();
    expect(result.moment).toEqual({ start: 2.0, end: 8.3 });
    expect(result.elapsedSeconds).toBeCloseTo(4.5);
    expect(session.currentTask?.sampleId).toBe("s1");
  });

  it("resets sliders and timing for the next task", () => {
    const clock = makeClock();
    const session = new AnnotationSession(makeTasks(), "ann-1", clock.now);
    session.setEnd(9);
    clock.advance(2_000);
    session.commit();
    expect(session.sliderState.moved).toBe(false);
    clock.advance(1_000);
    session.setStart(1);
    const second = session.commit();
    expect(second.elapsedSeconds).toBeCloseTo(1.0);
  });
});

describe("skipping and completion", () => {
  it("flags skipped tasks and advances", () => {
    const session = new AnnotationSession(makeTasks(2), "ann-1");
    session.markSkipped("video source failed to load");
    expect(session.skipped).toHaveLength(1);
    expect(session.skipped[0]!.task.sampleId).toBe("s0");
    expect(session.currentTask?.sampleId).toBe("s1");
  });

  it("empty queue is complete immediately", () => {
    const session = new AnnotationSession([], "ann-1");
    expect(session.isComplete).toBe(true);
    expect(session.currentTask).toBeNull();
  });

  it("completes after the last task", () => {
    const session = new AnnotationSession(makeTasks(1), "ann-1");
    session.setEnd(10);
    session.commit();
    expect(session.isComplete).toBe(true);
    expect(session.progress).toEqual({ done: 1, total: 1 });
  });
});

describe("export", () => {
  it("requires at least one committed annotation", () => {
    const session = new AnnotationSession(makeTasks(), "ann-1");
    expect(() => session.exportCanonicalJsonLines()).toThrow(/at least one/);
    expect(() => session.exportElapsedCsv()).toThrow(/at least one/);
  });

  it("exports canonical records that pass validation, quantized to 0.1 s", () => {
    const session = new AnnotationSession(makeTasks(3), "ann-7");
    for (const end of [7.13, 9.99, 14.06]) {
      session.setStart(1.11);
      session.setEnd(end);
      session.commit();
    }
    const lines = session.exportCanonicalJsonLines().trimEnd().split("\n");
    expect(lines).toHaveLength(3);
    for (const line of lines) {
      const record = JSON.parse(line);
      validateCanonicalRecord(record);
      for (const [start, end] of record.moments) {
        expect(Math.round(start * 10)).toBeCloseTo(start * 10, 10);
        expect(Math.round(end * 10)).toBeCloseTo(end * 10, 10);
      }
      expect(record.annotators).toEqual(["ann-7"]);
    }
  });

  it("writes the elapsed-time sidecar CSV", () => {
    const clock = makeClock();
    const session = new AnnotationSession(makeTasks(2), "ann-1", clock.now);
    session.setEnd(5);
    clock.advance(1_500);
    session.commit();
    session.setEnd(6);
    clock.advance(2_500);
    session.commit();
    const csv = session.exportElapsedCsv().trimEnd().split("\n");
    expect(csv[0]).toBe("sample_id,annotator_id,elapsed_seconds");
    expect(csv[1]).toBe("s0,ann-1,1.500");
    expect(csv[2]).toBe("s1,ann-1,2.500");
  });
});

/**
 * Task queue loading and ordering.
 *
 * Manifests are JSON lines; tasks are presented in manifest order unless
 * per-annotator shuffling is enabled, in which case a deterministic
 * permutation is derived from the annotator id (the same annotator always
 * sees the same order, different annotators see different orders).
 */

import { AnnotationTask, parseTaskRecord } from "./model.js";

export function parseManifest(text: string): AnnotationTask[] {
  const tasks: AnnotationTask[] = [];
  const lines = text.split("\n");
  let index = 0;
  for (const line of lines) {
    if (!line.trim()) continue;
    index += 1;
    let raw: unknown;
    try {
      raw = JSON.parse(line);
    } catch {
      throw new Error(`task record ${index}: invalid JSON`);
    }
    tasks.push(parseTaskRecord(raw, index));
  }
  const seen = new Set<string>();
  for (const task of tasks) {
    if (seen.has(task.sampleId)) {
      throw new Error(`duplicate sample_id '${task.sampleId}' in task manifest`);
    }
    seen.add(task.sampleId);
  }
  return tasks;
}

/** FNV-1a, good enough to seed a per-annotator permutation. */
function hashString(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193);
  }
  return hash >>> 0;
}

/** mulberry32 PRNG: tiny, deterministic, plenty for shuffling task lists. */
function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function orderTasks(
  tasks: AnnotationTask[],
  annotatorId: string,
  shufflePerAnnotator: boolean,
): AnnotationTask[] {
  const ordered = tasks.slice();
  if (!shufflePerAnnotator) return ordered;
  const rand = mulberry32(hashString(annotatorId));
  for (let i = ordered.length - 1; i > 0; i--) {
    const j = Math.floor(rand() * (i + 1));
    const a = ordered[i]!;
    ordered[i] = ordered[j]!;
    ordered[j] = a;
  }
  return ordered;
}

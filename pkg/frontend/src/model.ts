/**
 * Data model shared by the annotation tool: tasks in, canonical records out.
 *
 * The output contract mirrors the Python toolkit's canonical format exactly,
 * so every exported record loads through its corpus module unchanged. Task
 * manifests are canonical-compatible records without moments (what
 * `momentaudit export-annotations --tasks` emits), optionally carrying a
 * `video_url`.
 */

/** Slider snap granularity in seconds; all committed times are multiples. */
export const SNAP_SECONDS = 0.1;

/** Tolerated relative overshoot of an end time past the video duration. */
const DURATION_OVERSHOOT_TOLERANCE = 0.05;

export interface Moment {
  start: number;
  end: number;
}

export interface AnnotationTask {
  sampleId: string;
  videoId: string;
  query: string;
  duration: number;
  videoUrl: string | null;
}

export interface AnnotationResult {
  sampleId: string;
  videoId: string;
  duration: number;
  query: string;
  annotatorId: string;
  moment: Moment;
  elapsedSeconds: number;
}

export interface CanonicalRecord {
  sample_id: string;
  video_id: string;
  duration: number;
  query: string;
  moments: [number, number][];
  annotators?: string[];
}

/** Round a time to the slider granularity, avoiding float dust. */
export function snapTime(value: number): number {
  return Math.round(value / SNAP_SECONDS) / (1 / SNAP_SECONDS);
}

function fail(index: number, message: string): never {
  throw new Error(`task record ${index}: ${message}`);
}

/** Parse one task-manifest record; errors name the 1-based record index. */
export function parseTaskRecord(raw: unknown, index: number): AnnotationTask {
  if (typeof raw !== "object" || raw === null || Array.isArray(raw)) {
    fail(index, "expected a JSON object");
  }
  const obj = raw as Record<string, unknown>;
  for (const field of ["sample_id", "video_id", "duration", "query"]) {
    if (!(field in obj)) fail(index, `missing field '${field}'`);
  }
  const duration = Number(obj.duration);
  if (!Number.isFinite(duration) || duration <= 0) {
    fail(index, `duration must be a positive number, got ${String(obj.duration)}`);
  }
  const videoUrl = obj.video_url == null ? null : String(obj.video_url);
  return {
    sampleId: String(obj.sample_id),
    videoId: String(obj.video_id),
    query: String(obj.query),
    duration,
    videoUrl,
  };
}

/**
 * Validate a canonical record against the corpus-module rules: finite
 * non-negative moments with start <= end, end within the 5% duration
 * overshoot tolerance, parallel annotator list.
 */
export function validateCanonicalRecord(record: CanonicalRecord): void {
  if (!record.sample_id) throw new Error("record has an empty sample_id");
  if (!Number.isFinite(record.duration) || record.duration <= 0) {
    throw new Error(`${record.sample_id}: duration must be positive`);
  }
  if (!record.moments.length) {
    throw new Error(`${record.sample_id}: moments must be non-empty`);
  }
  const limit = record.duration * (1 + DURATION_OVERSHOOT_TOLERANCE);
  for (const [start, end] of record.moments) {
    if (!Number.isFinite(start) || !Number.isFinite(end)) {
      throw new Error(`${record.sample_id}: non-finite moment bounds`);
    }
    if (start < 0 || end < 0 || start > end) {
      throw new Error(`${record.sample_id}: invalid moment [${start}, ${end}]`);
    }
    if (end > limit) {
      throw new Error(`${record.sample_id}: moment end ${end} exceeds duration ${record.duration}`);
    }
  }
  if (record.annotators && record.annotators.length !== record.moments.length) {
    throw new Error(`${record.sample_id}: annotators and moments lengths differ`);
  }
}

/** Canonical record for one annotation result. */
export function toCanonicalRecord(result: AnnotationResult): CanonicalRecord {
  const record: CanonicalRecord = {
    sample_id: result.sampleId,
    video_id: result.videoId,
    duration: result.duration,
    query: result.query,
    moments: [[result.moment.start, result.moment.end]],
    annotators: [result.annotatorId],
  };
  validateCanonicalRecord(record);
  return record;
}

/**
 * Merge results from several annotators into multi-moment records keyed by
 * sample_id, preserving first-seen sample order and per-sample result order.
 */
export function mergeResults(results: AnnotationResult[]): CanonicalRecord[] {
  const bySample = new Map<string, AnnotationResult[]>();
  for (const result of results) {
    const bucket = bySample.get(result.sampleId);
    if (bucket) bucket.push(result);
    else bySample.set(result.sampleId, [result]);
  }
  const records: CanonicalRecord[] = [];
  for (const group of bySample.values()) {
    const first = group[0]!;
    const record: CanonicalRecord = {
      sample_id: first.sampleId,
      video_id: first.videoId,
      duration: first.duration,
      query: first.query,
      moments: group.map((r) => [r.moment.start, r.moment.end]),
      annotators: group.map((r) => r.annotatorId),
    };
    validateCanonicalRecord(record);
    records.push(record);
  }
  return records;
}

export function recordsToJsonLines(records: CanonicalRecord[]): string {
  return records.map((r) => JSON.stringify(r)).join("\n") + (records.length ? "\n" : "");
}

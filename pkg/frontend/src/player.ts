/**
 * Clip review playback: play exactly the selected [start, end] window.
 *
 * Browsers fire timeupdate too coarsely (up to 250 ms apart) to honor the
 * 0.1 s stop tolerance, so the player polls on a short interval and pauses
 * as soon as the playhead reaches the clip end. A zero-length selection is
 * a single-frame hold: seek and pause. Playback failures surface through
 * onError and never clear the selection (the session owns that state).
 */

import { Moment } from "./model.js";

/** The slice of HTMLVideoElement the player needs; tests supply a fake. */
export interface MediaLike {
  currentTime: number;
  paused: boolean;
  play(): Promise<void>;
  pause(): void;
}

export interface Scheduler {
  setInterval(fn: () => void, ms: number): number;
  clearInterval(id: number): void;
}

const POLL_MS = 40;
export const STOP_TOLERANCE_SECONDS = 0.1;

export class ClipPlayer {
  onError: (message: string) => void = () => {};
  onStopped: () => void = () => {};

  private readonly media: MediaLike;
  private readonly scheduler: Scheduler;
  private watchId: number | null = null;

  constructor(media: MediaLike, scheduler?: Scheduler) {
    this.media = media;
    this.scheduler = scheduler ?? {
      setInterval: (fn, ms) => setInterval(fn, ms) as unknown as number,
      clearInterval: (id) => clearInterval(id as unknown as ReturnType<typeof setInterval>),
    };
  }

  /** Begin reviewing the selection; resolves once playback has started. */
  async review(moment: Moment): Promise<void> {
    this.cancelWatch();
    this.media.currentTime = moment.start;
    if (moment.end - moment.start <= 0) {
      this.media.pause();
      this.onStopped();
      return;
    }
    try {
      await this.media.play();
    } catch (err) {
      this.onError(`playback failed: ${err instanceof Error ? err.message : String(err)}`);
      return;
    }
    this.watchId = this.scheduler.setInterval(() => {
      if (this.media.currentTime >= moment.end - STOP_TOLERANCE_SECONDS / 2) {
        this.media.pause();
        this.media.currentTime = moment.end;
        this.cancelWatch();
        this.onStopped();
      }
    }, POLL_MS);
  }

  stop(): void {
    this.cancelWatch();
    this.media.pause();
  }

  private cancelWatch(): void {
    if (this.watchId !== null) {
      this.scheduler.clearInterval(this.watchId);
      this.watchId = null;
    }
  }
}

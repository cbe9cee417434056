// Session state machine, kept free of DOM so it can run headless in tests.
//
// The server owns all ordering (single-modality stage first, then combined),
// so this class only tracks the current task, the annotator's draft answer,
// and error/retry state. A page reload loses nothing: start() asks the
// server for the next task and resumes wherever the record store says.

import { ApiError } from './api.js';
import type { ProgressInfo, Task, TaskSource } from './types.js';

export type Phase = 'idle' | 'loading' | 'task' | 'done' | 'failed';

export interface FlowState {
  phase: Phase;
  task: Task | null;
  choice: number | null;
  confidence: number | null;
  progress: ProgressInfo | null;
  error: string | null;
  busy: boolean;
}

export function describeError(err: unknown): string {
  if (err instanceof ApiError) {
    return `the server rejected the request (${err.status}): ${err.message}`;
  }
  return 'network problem; your answer was kept, retry when the connection is back';
}

export class SessionFlow {
  state: FlowState = {
    phase: 'idle',
    task: null,
    choice: null,
    confidence: null,
    progress: null,
    error: null,
    busy: false,
  };

  private listeners: Array<() => void> = [];

  constructor(private readonly source: TaskSource) {}

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  async start(): Promise<void> {
    this.state.phase = 'loading';
    this.state.error = null;
    this.emit();
    await this.loadNext();
  }

  private async loadNext(): Promise<void> {
    try {
      const next = await this.source.nextTask();
      this.state.progress = next.progress;
      if (next.done) {
        this.state.phase = 'done';
        this.state.task = null;
      } else {
        this.state.phase = 'task';
        this.state.task = next;
      }
      this.state.choice = null;
      this.state.confidence = null;
      this.state.error = null;
    } catch (err) {
      this.state.phase = 'failed';
      this.state.error = describeError(err);
    }
    this.emit();
  }

  chooseOption(index: number): void {
    const task = this.state.task;
    if (!task || !Number.isInteger(index)) return;
    if (index < 0 || index >= task.choices.length) return;
    this.state.choice = index;
    this.emit();
  }

  setConfidence(value: number): void {
    // 1-5 scale; anything else is ignored rather than sent to the server
    if (!Number.isInteger(value) || value < 1 || value > 5) return;
    this.state.confidence = value;
    this.emit();
  }

  canSubmit(): boolean {
    return (
      this.state.phase === 'task' &&
      !this.state.busy &&
      this.state.choice !== null &&
      this.state.confidence !== null
    );
  }

  async submit(): Promise<void> {
    if (!this.canSubmit()) return;
    const task = this.state.task!;
    this.state.busy = true;
    this.state.error = null;
    this.emit();
    let done: boolean;
    try {
      const ack = await this.source.submitAnswer({
        question_id: task.question_id,
        condition: task.condition,
        choice: this.state.choice!,
        confidence: this.state.confidence!,
      });
      this.state.progress = ack.progress;
      done = ack.done;
    } catch (err) {
      // Rejection (400/409) or transport failure: keep the task and the
      // draft so nothing the annotator picked is lost.
      this.state.busy = false;
      this.state.error = describeError(err);
      this.emit();
      return;
    }
    // The answer is recorded; the draft must not be resubmittable.
    this.state.busy = false;
    this.state.task = null;
    this.state.choice = null;
    this.state.confidence = null;
    if (done) {
      this.state.phase = 'done';
      this.emit();
      return;
    }
    this.state.phase = 'loading';
    this.emit();
    await this.loadNext();
  }

  // One retry entry point for the UI: resubmit a kept draft, or reload the
  // next task if the failure happened between tasks.
  async retry(): Promise<void> {
    if (this.state.phase === 'task' && this.canSubmit()) {
      await this.submit();
    } else if (this.state.phase === 'failed') {
      await this.start();
    }
  }
}

// Pure task -> view-model mapping, split out of the DOM code so the
// "render only what the payload carries" rule is testable.

import type { Task } from './types.js';

const LETTERS = 'ABCDEFGH';

export interface ChoiceView {
  letter: string;
  text: string;
  index: number;
}

export interface FrameView {
  url: string;
  caption: string;
}

export interface TaskView {
  question: string;
  choices: ChoiceView[];
  stageLabel: string;
  conditionLabel: string;
  progressLabel: string;
  subtitleText: string | null;
  frames: FrameView[] | null;
}

export function taskView(task: Task): TaskView {
  const payload = task.payload ?? {};
  return {
    question: task.question,
    choices: task.choices.map((text, index) => ({
      letter: LETTERS[index] ?? `#${index + 1}`,
      text,
      index,
    })),
    stageLabel:
      task.stage === 'single'
        ? 'Stage 1 of 2: your assigned modality'
        : 'Stage 2 of 2: combined modalities',
    conditionLabel: task.condition.split('+').join(' + '),
    progressLabel: `${task.progress.answered} of ${task.progress.total} answered`,
    subtitleText:
      typeof payload.subtitle_text === 'string' ? payload.subtitle_text : null,
    frames: Array.isArray(payload.frames)
      ? payload.frames.map((frame) => ({
          url: frame.url,
          caption: `${frame.timestamp.toFixed(1)}s`,
        }))
      : null,
  };
}

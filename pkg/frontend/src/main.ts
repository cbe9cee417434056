// DOM wiring for the annotation study. Everything stateful lives in
// SessionFlow; this file just redraws from flow.state on every change.
//
// Deliberately no keyboard shortcuts for answering: accidental low-effort
// submissions would skew the confidence data.

import { StudyClient } from './api.js';
import { SessionFlow } from './flow.js';
import { taskView } from './render.js';

const app = document.getElementById('app');
if (!app) throw new Error('missing #app container');

let flow: SessionFlow | null = null;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderLogin(container: HTMLElement): void {
  container.replaceChildren();
  const box = el('div', 'login');
  box.append(el('h1', undefined, 'Perception study'));
  box.append(
    el(
      'p',
      'hint',
      'Enter the annotator id you were given. Your progress is saved on the server; you can close this tab and come back.',
    ),
  );
  const input = el('input');
  input.placeholder = 'annotator id';
  input.autocomplete = 'off';
  const button = el('button', 'primary', 'Start');
  button.addEventListener('click', () => {
    const id = input.value.trim();
    if (!id) return;
    flow = new SessionFlow(new StudyClient(id));
    flow.subscribe(render);
    void flow.start();
  });
  box.append(input, button);
  container.append(box);
}

function renderTask(container: HTMLElement, f: SessionFlow): void {
  const task = f.state.task;
  if (!task) return;
  const view = taskView(task);
  container.replaceChildren();

  const header = el('div', 'header');
  header.append(el('span', 'stage', view.stageLabel));
  header.append(el('span', 'condition', `showing: ${view.conditionLabel}`));
  header.append(el('span', 'progress', view.progressLabel));
  container.append(header);

  // Condition payload: only the sections the server sent exist at all.
  if (view.frames) {
    const strip = el('div', 'frame-strip');
    for (const frame of view.frames) {
      const figure = el('figure', 'frame');
      const img = el('img');
      img.src = frame.url;
      img.alt = `frame at ${frame.caption}`;
      figure.append(img, el('figcaption', undefined, frame.caption));
      strip.append(figure);
    }
    container.append(strip);
  }
  if (view.subtitleText !== null) {
    container.append(el('pre', 'subtitles', view.subtitleText));
  }

  container.append(el('p', 'question', view.question));

  const choices = el('div', 'choices');
  for (const choice of view.choices) {
    const button = el('button', 'choice', `${choice.letter}. ${choice.text}`);
    if (f.state.choice === choice.index) button.classList.add('selected');
    button.addEventListener('click', () => f.chooseOption(choice.index));
    choices.append(button);
  }
  container.append(choices);

  const confidence = el('div', 'confidence');
  confidence.append(el('span', undefined, 'Confidence (1 = guessing, 5 = certain): '));
  for (let value = 1; value <= 5; value++) {
    const button = el('button', 'confidence-option', String(value));
    if (f.state.confidence === value) button.classList.add('selected');
    button.addEventListener('click', () => f.setConfidence(value));
    confidence.append(button);
  }
  container.append(confidence);

  if (f.state.error) {
    const box = el('div', 'error');
    box.append(el('span', undefined, f.state.error));
    const retry = el('button', undefined, 'Retry');
    retry.addEventListener('click', () => void f.retry());
    box.append(retry);
    container.append(box);
  }

  const submit = el('button', 'primary', f.state.busy ? 'Submitting…' : 'Submit');
  submit.disabled = !f.canSubmit();
  submit.addEventListener('click', () => void f.submit());
  container.append(submit);
}

function render(): void {
  if (!app || !flow) return;
  const state = flow.state;
  switch (state.phase) {
    case 'idle':
      renderLogin(app);
      break;
    case 'loading':
      app.replaceChildren(el('p', 'hint', 'Loading…'));
      break;
    case 'task':
      renderTask(app, flow);
      break;
    case 'done': {
      app.replaceChildren();
      app.append(el('h1', undefined, 'All done, thank you!'));
      if (state.progress) {
        app.append(
          el('p', 'hint', `${state.progress.answered} answers recorded.`),
        );
      }
      break;
    }
    case 'failed': {
      app.replaceChildren();
      app.append(el('p', 'error', state.error ?? 'something went wrong'));
      const retry = el('button', 'primary', 'Retry');
      retry.addEventListener('click', () => void flow?.retry());
      app.append(retry);
      break;
    }
  }
}

renderLogin(app);

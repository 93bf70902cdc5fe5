/**
 * Step 4: launch a sampling job and poll its progress (1 s by default).
 */

import { JobDto, SessionApi } from '../api.js';
import { SessionStore } from '../store.js';

export interface SamplingOptions {
  pollMs?: number;
  onDone?: (job: JobDto) => void;
}

export function renderSampling(
  root: HTMLElement,
  store: SessionStore,
  api: SessionApi,
  options: SamplingOptions = {},
): void {
  root.innerHTML = '';
  const session = store.get().session;
  if (!session) return;
  const pollMs = options.pollMs ?? 1000;

  const section = document.createElement('section');
  section.className = 'sampling-screen';
  section.innerHTML = `
    <h2>Sampling job</h2>
    <label>Seed <input name="seed" type="number" value="7"></label>
    <label>Chains <input name="chains" type="number" value="4"></label>
    <label>Warmup <input name="warmup" type="number" value="2000"></label>
    <label>Samples <input name="samples" type="number" value="5000"></label>
    <label>Thin <input name="thin" type="number" value="1"></label>
    <button class="launch-job">Launch</button>
    <div class="job-status" data-role="job-status" hidden>
      <progress max="1" value="0"></progress>
      <span class="job-state">queued</span>
      <span class="job-error" role="alert"></span>
    </div>
  `;
  root.appendChild(section);

  const launch = section.querySelector('.launch-job') as HTMLButtonElement;
  launch.addEventListener('click', () => {
    const num = (name: string) =>
      Number((section.querySelector(`input[name=${name}]`) as HTMLInputElement).value);
    const body: Record<string, unknown> = {
      seed: num('seed'),
      chains: num('chains'),
      warmup: num('warmup'),
      samples: num('samples'),
      thin: num('thin'),
    };
    launch.disabled = true;
    void runJob(section, api, session.id, body, pollMs, store, options.onDone);
  });
}

export async function runJob(
  section: HTMLElement,
  api: SessionApi,
  sessionId: string,
  body: Record<string, unknown>,
  pollMs: number,
  store: SessionStore,
  onDone?: (job: JobDto) => void,
): Promise<JobDto> {
  const statusBox = section.querySelector('[data-role=job-status]') as HTMLElement;
  const bar = statusBox.querySelector('progress') as HTMLProgressElement;
  const state = statusBox.querySelector('.job-state') as HTMLElement;
  const errorBox = statusBox.querySelector('.job-error') as HTMLElement;
  statusBox.hidden = false;

  const job = await api.startJob(sessionId, body);
  let current = job;
  while (current.status === 'queued' || current.status === 'running') {
    await new Promise((resolve) => setTimeout(resolve, pollMs));
    current = await api.getJob(job.id);
    bar.value = current.progress;
    state.textContent = `${current.status} (${Math.round(current.progress * 100)}%)`;
  }
  if (current.status === 'failed') {
    errorBox.textContent = current.error ?? 'job failed';
  } else {
    state.textContent = 'done';
    store.markOverlaysFresh();
    onDone?.(current);
  }
  return current;
}

/**
 * Step 5: posterior overlays.
 *
 * For the MVN flow: a table comparing elicited concordances with the
 * posterior medians the model produced, plus per-pair density charts.
 * For the exponential/regression flows: the elicited belief pdf (from the
 * session preview endpoint) overlaid on the posterior KDE for the
 * observable.  Everything rendered is a served grid or a served summary.
 */

import { JobSummaryDto, SessionApi } from '../api.js';
import { densityChart } from '../charts.js';
import { fmt } from '../format.js';
import { SessionStore } from '../store.js';

export async function renderOverlays(
  root: HTMLElement,
  store: SessionStore,
  api: SessionApi,
  jobId: string,
  onRevise: (step: number) => void,
): Promise<void> {
  root.innerHTML = '';
  const view = store.get();
  const session = view.session;
  if (!session) return;

  const section = document.createElement('section');
  section.className = 'overlay-screen';
  root.appendChild(section);

  const job = await api.getJob(jobId);
  const summary = await api.jobSummary(jobId);

  if (job.stale || view.stale.overlays) {
    const badge = document.createElement('p');
    badge.className = 'stale-badge';
    badge.dataset.role = 'overlay-stale';
    badge.textContent = 'Inputs changed after this run — results shown are stale.';
    section.appendChild(badge);
  }

  if (session.model_family === 'mvn') {
    section.appendChild(concordanceComparison(session.concordances ?? [], summary));
    const charts = document.createElement('div');
    charts.className = 'overlay-charts';
    section.appendChild(charts);
    for (const entry of session.concordances ?? []) {
      const name = `conc_${entry.pair[0]}_${entry.pair[1]}`;
      const grid = await api.jobDensity(jobId, name);
      charts.appendChild(
        densityChart(
          [{ label: 'posterior', x: grid.x, y: grid.pdf, cssClass: 'posterior' }],
          `Concordance (${entry.pair[0]}, ${entry.pair[1]}) — elicited ${fmt(entry.p, 2)}`,
        ),
      );
    }
  } else {
    const observable = session.model_family === 'exponential' ? 't_med' : 'xi';
    const posterior = await api.jobDensity(jobId, observable);
    const belief = await api.previewDensity(session.id, 1);
    const chart = densityChart(
      [
        { label: 'elicited belief', x: belief.x, y: belief.pdf, cssClass: 'belief' },
        { label: 'posterior', x: posterior.x, y: posterior.pdf, cssClass: 'posterior' },
      ],
      `Posterior vs belief: ${observable}`,
    );
    section.appendChild(chart);
    const entry = summary.observables[observable] ?? summary.parameters[observable];
    const med = entry?.quantiles['0.5'];
    const note = document.createElement('p');
    note.dataset.role = 'posterior-median';
    note.textContent = `Posterior median ${observable}: ${med === undefined ? 'n/a' : fmt(med)}`;
    section.appendChild(note);
  }

  const revise = document.createElement('div');
  revise.className = 'revise-row';
  for (const [label, step] of [
    ['Revise marginals', 1],
    ['Revise concordances', 2],
    ['Re-run sampling', 3],
  ] as [string, number][]) {
    const button = document.createElement('button');
    button.className = 'revise-button';
    button.textContent = label;
    button.addEventListener('click', () => onRevise(step));
    revise.appendChild(button);
  }
  section.appendChild(revise);
}

export function concordanceComparison(
  elicited: { pair: [number, number]; p: number }[],
  summary: JobSummaryDto,
): HTMLElement {
  const table = document.createElement('table');
  table.className = 'concordance-comparison';
  table.dataset.role = 'concordance-comparison';
  table.innerHTML =
    '<thead><tr><th>Pair</th><th>Elicited concordance</th>' +
    '<th>Model concordance (posterior median)</th></tr></thead>';
  const body = document.createElement('tbody');
  for (const entry of elicited) {
    const name = `conc_${entry.pair[0]}_${entry.pair[1]}`;
    const median = summary.observables[name]?.quantiles['0.5'];
    const row = document.createElement('tr');
    row.dataset.pair = `${entry.pair[0]}-${entry.pair[1]}`;
    row.innerHTML =
      `<td>(${entry.pair[0]}, ${entry.pair[1]})</td>` +
      `<td data-field="elicited">${fmt(entry.p, 2)}</td>` +
      `<td data-field="model">${median === undefined ? 'n/a' : fmt(median)}</td>`;
    body.appendChild(row);
  }
  table.appendChild(body);
  return table;
}

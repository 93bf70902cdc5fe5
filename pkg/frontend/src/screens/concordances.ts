/**
 * Step 3: concordance probabilities with inline coherency feedback.
 *
 * Values outside their feasible interval (holding the other answers fixed)
 * are highlighted with the interval the service reports, and the expert is
 * prompted to reassess before sampling.
 */

import { CoherencyReportDto } from '../api.js';
import { fmt, fmtInterval } from '../format.js';
import { SessionStore, pairsForK } from '../store.js';

export function renderConcordances(root: HTMLElement, store: SessionStore): void {
  root.innerHTML = '';
  const view = store.get();
  const session = view.session;
  if (!session || session.model_family !== 'mvn') {
    root.textContent = 'Concordances apply to multivariate-normal sessions.';
    return;
  }
  const k = session.k ?? 0;
  const section = document.createElement('section');
  section.className = 'concordance-screen';
  root.appendChild(section);

  const coherencyByPair = new Map<string, CoherencyReportDto>();
  for (const report of session.coherency ?? []) {
    coherencyByPair.set(`${report.pair[0]}-${report.pair[1]}`, report);
  }
  const saved = new Map<string, number>();
  for (const entry of session.concordances ?? []) {
    saved.set(`${entry.pair[0]}-${entry.pair[1]}`, entry.p);
  }

  const table = document.createElement('table');
  table.className = 'concordance-grid';
  table.innerHTML =
    '<thead><tr><th>Pair</th><th>Concordance p</th>' +
    '<th>Feasible concordance range</th><th>Status</th></tr></thead>';
  const body = document.createElement('tbody');

  for (const pair of pairsForK(k)) {
    const key = `${pair[0]}-${pair[1]}`;
    const row = document.createElement('tr');
    row.dataset.pair = key;
    const name = document.createElement('td');
    name.textContent = `(${pair[0]}, ${pair[1]})`;
    row.appendChild(name);

    const inputCell = document.createElement('td');
    const input = document.createElement('input');
    input.type = 'number';
    input.step = 'any';
    input.min = '0';
    input.max = '1';
    const draft = store.get().concordanceDrafts[key];
    input.value = draft ?? (saved.has(key) ? String(saved.get(key)) : '');
    input.addEventListener('input', () => store.editConcordance(pair, input.value));
    inputCell.appendChild(input);
    row.appendChild(inputCell);

    const report = coherencyByPair.get(key);
    const rangeCell = document.createElement('td');
    rangeCell.dataset.role = 'feasible-range';
    const statusCell = document.createElement('td');
    statusCell.dataset.role = 'coherency-status';
    if (report) {
      if (report.concordance_interval === null) {
        rangeCell.textContent = 'none';
        statusCell.textContent =
          'no feasible value — the other answers are jointly incoherent, reassess';
        row.classList.add('out-of-interval');
      } else if (report.in_interval) {
        rangeCell.textContent = fmtInterval(report.concordance_interval);
        statusCell.textContent = 'coherent';
        row.classList.add('in-interval');
      } else {
        rangeCell.textContent = fmtInterval(report.concordance_interval);
        statusCell.textContent =
          `outside feasible range — reassess (elicited ${fmt(report.elicited_concordance)})`;
        row.classList.add('out-of-interval');
      }
      if (view.stale.coherency) {
        statusCell.textContent += ' [stale]';
        row.classList.add('stale');
      }
    } else {
      rangeCell.textContent = '—';
      statusCell.textContent = 'not yet checked';
    }
    row.appendChild(rangeCell);
    row.appendChild(statusCell);
    body.appendChild(row);
  }
  table.appendChild(body);
  section.appendChild(table);

  if (view.stale.coherency && (session.coherency ?? []).length > 0) {
    const badge = document.createElement('p');
    badge.className = 'stale-badge';
    badge.textContent = 'Coherency shown for the last saved answers — save to refresh.';
    section.appendChild(badge);
  }

  const save = document.createElement('button');
  save.className = 'save-concordances';
  save.textContent = 'Check coherency';
  save.addEventListener('click', () => {
    store
      .saveConcordances()
      .then(() => renderConcordances(root, store))
      .catch(() => renderConcordances(root, store));
  });
  section.appendChild(save);

  const error = document.createElement('p');
  error.className = 'form-error';
  if (view.lastError) {
    error.textContent = view.lastError;
  }
  error.hidden = !view.lastError;
  section.appendChild(error);
}

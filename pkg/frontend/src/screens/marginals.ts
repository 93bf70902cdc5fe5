/**
 * Step 2: marginal answers with a live prior-predictive preview and the
 * implied hyperparameters, all numbers straight from the service.
 */

import { NormalGammaHypers, SessionApi } from '../api.js';
import { densityChart } from '../charts.js';
import { fmt } from '../format.js';
import { SessionStore } from '../store.js';

export function renderMarginals(root: HTMLElement, store: SessionStore, api: SessionApi): void {
  root.innerHTML = '';
  const view = store.get();
  const session = view.session;
  if (!session) return;

  const section = document.createElement('section');
  section.className = 'marginals-screen';
  root.appendChild(section);

  if (session.model_family === 'mvn') {
    renderMvnInputs(section, store);
  } else if (session.model_family === 'exponential') {
    renderBeliefInputs(section, store, [
      ['alpha', 'Prior effective sample size (alpha)'],
      ['ytilde', 'Mean survival (ytilde)'],
    ], 'Enter the pseudo-data belief; the service moment-matches a lognormal.');
  } else {
    renderBeliefInputs(section, store, [
      ['mu_expert', 'Expected change from baseline'],
      ['sigma_expert', 'Uncertainty (sd) of that change'],
    ], 'Belief on the change from baseline for the target group.');
  }

  const save = document.createElement('button');
  save.className = 'save-marginals';
  save.textContent = 'Solve hyperparameters';
  save.addEventListener('click', () => {
    store.saveMarginals().then(() => {
      renderMarginals(root, store, api);
      void refreshPreview(root, store, api);
    }).catch(() => renderMarginals(root, store, api));
  });
  section.appendChild(save);

  const error = document.createElement('p');
  error.className = 'form-error';
  error.role = 'alert';
  if (view.lastError) error.textContent = view.lastError;
  error.hidden = !view.lastError;
  section.appendChild(error);

  section.appendChild(hypersPanel(store));

  const preview = document.createElement('div');
  preview.className = 'preview-panel';
  preview.dataset.role = 'preview-panel';
  section.appendChild(preview);
  if (session.hypers) void refreshPreview(root, store, api);
}

function renderMvnInputs(section: HTMLElement, store: SessionStore): void {
  const view = store.get();
  const k = view.session?.k ?? 0;
  const table = document.createElement('table');
  table.className = 'marginal-inputs';
  table.innerHTML = '<thead><tr><th>Component</th><th>q50</th><th>q75</th></tr></thead>';
  const body = document.createElement('tbody');
  for (let i = 0; i < k; i++) {
    const row = document.createElement('tr');
    const draft = view.marginalDrafts[i] ?? { q50: '', q75: '' };
    row.innerHTML = `<td>${i + 1}</td>`;
    for (const field of ['q50', 'q75'] as const) {
      const cell = document.createElement('td');
      const input = document.createElement('input');
      input.type = 'number';
      input.step = 'any';
      input.value = draft[field];
      input.dataset.component = String(i + 1);
      input.dataset.field = field;
      input.addEventListener('input', () => store.editMarginal(i, field, input.value));
      cell.appendChild(input);
      row.appendChild(cell);
    }
    body.appendChild(row);
  }
  table.appendChild(body);
  section.appendChild(table);
}

function renderBeliefInputs(
  section: HTMLElement,
  store: SessionStore,
  fields: [string, string][],
  hint: string,
): void {
  const view = store.get();
  const para = document.createElement('p');
  para.textContent = hint;
  section.appendChild(para);
  for (const [name, label] of fields) {
    const wrap = document.createElement('label');
    wrap.textContent = label;
    const input = document.createElement('input');
    input.type = 'number';
    input.step = 'any';
    input.name = name;
    input.value = view.beliefDrafts[name] ?? '';
    input.addEventListener('input', () => store.editBelief(name, input.value));
    wrap.appendChild(input);
    section.appendChild(wrap);
  }
}

export function hypersPanel(store: SessionStore): HTMLElement {
  const view = store.get();
  const panel = document.createElement('div');
  panel.className = 'hypers-panel';
  panel.dataset.role = 'hypers-panel';
  const heading = document.createElement('h3');
  heading.textContent = 'Implied hyperparameters';
  panel.appendChild(heading);

  if (view.stale.hypers) {
    const badge = document.createElement('span');
    badge.className = 'stale-badge';
    badge.textContent = 'stale — re-solve to refresh';
    panel.appendChild(badge);
  }

  const hypers = view.session?.hypers;
  if (!hypers) {
    const empty = document.createElement('p');
    empty.textContent = 'No solved hyperparameters yet.';
    panel.appendChild(empty);
    return panel;
  }

  if (Array.isArray(hypers)) {
    const table = document.createElement('table');
    table.innerHTML =
      '<thead><tr><th>k</th><th>mu0</th><th>gamma</th><th>alpha</th><th>beta</th></tr></thead>';
    const body = document.createElement('tbody');
    (hypers as NormalGammaHypers[]).forEach((h, i) => {
      const row = document.createElement('tr');
      row.dataset.component = String(i + 1);
      row.innerHTML =
        `<td>${i + 1}</td><td data-field="mu0">${fmt(h.mu0)}</td>` +
        `<td>${fmt(h.gamma)}</td><td>${fmt(h.alpha)}</td>` +
        `<td data-field="beta">${fmt(h.beta)}</td>`;
      body.appendChild(row);
    });
    table.appendChild(body);
    panel.appendChild(table);
  } else {
    const list = document.createElement('dl');
    for (const [key, value] of Object.entries(hypers)) {
      const dt = document.createElement('dt');
      dt.textContent = key;
      const dd = document.createElement('dd');
      dd.dataset.field = key;
      dd.textContent = fmt(value as number);
      list.appendChild(dt);
      list.appendChild(dd);
    }
    panel.appendChild(list);
  }
  return panel;
}

export async function refreshPreview(
  root: HTMLElement,
  store: SessionStore,
  api: SessionApi,
): Promise<void> {
  const view = store.get();
  const session = view.session;
  if (!session || !session.hypers) return;
  const panel = root.querySelector('[data-role=preview-panel]') as HTMLElement | null;
  if (!panel) return;
  panel.innerHTML = '';
  const components = Array.isArray(session.hypers) ? session.hypers.length : 1;
  for (let c = 1; c <= components; c++) {
    const grid = await api.previewDensity(session.id, c);
    panel.appendChild(
      densityChart(
        [{ label: `prior predictive ${c}`, x: grid.x, y: grid.pdf, cssClass: 'predictive' }],
        `Component ${c}`,
      ),
    );
  }
}

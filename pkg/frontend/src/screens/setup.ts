/** Step 1: choose the model family and the expert's effective sample size. */

import { SessionStore } from '../store.js';

export function renderSetup(
  root: HTMLElement,
  store: SessionStore,
  onCreated: () => void,
): void {
  root.innerHTML = '';
  const form = document.createElement('form');
  form.className = 'setup-form';
  form.innerHTML = `
    <h2>Start an elicitation session</h2>
    <label>Model family
      <select name="family">
        <option value="mvn">Multivariate normal (quantiles + concordances)</option>
        <option value="exponential">Exponential survival (median survival belief)</option>
        <option value="regression">Repeated measures (change from baseline)</option>
      </select>
    </label>
    <label>Effective sample size n_e
      <input name="n_e" type="number" min="4" step="1" value="10">
    </label>
    <label class="k-field">Dimension k
      <input name="k" type="number" min="2" step="1" value="4">
    </label>
    <button type="submit">Create session</button>
    <p class="form-error" role="alert" hidden></p>
  `;
  const select = form.querySelector('select[name=family]') as HTMLSelectElement;
  const kField = form.querySelector('.k-field') as HTMLElement;
  select.addEventListener('change', () => {
    kField.hidden = select.value !== 'mvn';
  });
  form.addEventListener('submit', (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const family = String(data.get('family'));
    const body: { model_family: string; k?: number; n_e?: number } = {
      model_family: family,
      n_e: Number(data.get('n_e')),
    };
    if (family === 'mvn') body.k = Number(data.get('k'));
    store
      .create(body)
      .then(onCreated)
      .catch((err) => {
        const msg = form.querySelector('.form-error') as HTMLElement;
        msg.hidden = false;
        msg.textContent = String(err);
      });
  });
  root.appendChild(form);
}

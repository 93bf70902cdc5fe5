/**
 * Stepper wiring: setup -> marginals -> concordances -> sampling -> overlays.
 *
 * Non-MVN families skip the concordance step; the overlay screen's revise
 * buttons jump back to any earlier step without losing drafts.  A detected
 * write conflict (someone else advanced the session) swaps the content for
 * a reload prompt rather than showing possibly stale numbers.
 */

import { SessionApi } from './api.js';
import { renderConcordances } from './screens/concordances.js';
import { renderMarginals } from './screens/marginals.js';
import { renderOverlays } from './screens/overlays.js';
import { renderSampling } from './screens/sampling.js';
import { renderSetup } from './screens/setup.js';
import { SessionStore } from './store.js';

export interface WorkbenchOptions {
  pollMs?: number;
}

const STEP_TITLES = [
  'Model & expert',
  'Marginal answers',
  'Concordances',
  'Sampling',
  'Posterior overlays',
];

export class Workbench {
  readonly store: SessionStore;
  private step = 0;
  private lastJobId: string | null = null;

  constructor(
    private readonly root: HTMLElement,
    private readonly api: SessionApi,
    private readonly options: WorkbenchOptions = {},
  ) {
    this.store = new SessionStore(api);
    this.store.subscribe(() => this.renderConflictIfAny());
  }

  start(): void {
    this.render();
  }

  goTo(step: number): void {
    this.step = step;
    this.render();
  }

  private renderConflictIfAny(): void {
    if (!this.store.get().conflict) return;
    const banner = document.createElement('div');
    banner.className = 'conflict-banner';
    banner.setAttribute('role', 'alert');
    banner.textContent =
      'This session changed elsewhere. Reload to continue from the latest saved state.';
    const reload = document.createElement('button');
    reload.textContent = 'Reload session';
    reload.addEventListener('click', () => {
      void this.store.reload().then(() => this.render());
    });
    banner.appendChild(reload);
    this.root.innerHTML = '';
    this.root.appendChild(banner);
  }

  private nav(): HTMLElement {
    const nav = document.createElement('nav');
    nav.className = 'stepper';
    const family = this.store.get().session?.model_family;
    STEP_TITLES.forEach((title, idx) => {
      if (idx === 2 && family !== 'mvn' && family !== undefined) return;
      const button = document.createElement('button');
      button.textContent = `${idx + 1}. ${title}`;
      button.disabled = this.store.get().session === null && idx > 0;
      if (idx === this.step) button.classList.add('active');
      button.addEventListener('click', () => this.goTo(idx));
      nav.appendChild(button);
    });
    return nav;
  }

  private render(): void {
    if (this.store.get().conflict) {
      this.renderConflictIfAny();
      return;
    }
    this.root.innerHTML = '';
    this.root.appendChild(this.nav());
    const content = document.createElement('main');
    content.className = 'step-content';
    this.root.appendChild(content);

    switch (this.step) {
      case 0:
        renderSetup(content, this.store, () => this.goTo(1));
        break;
      case 1:
        renderMarginals(content, this.store, this.api);
        break;
      case 2:
        renderConcordances(content, this.store);
        break;
      case 3:
        renderSampling(content, this.store, this.api, {
          pollMs: this.options.pollMs,
          onDone: (job) => {
            this.lastJobId = job.id;
            this.goTo(4);
          },
        });
        break;
      default:
        if (this.lastJobId) {
          void renderOverlays(content, this.store, this.api, this.lastJobId, (step) =>
            this.goTo(step),
          );
        } else {
          content.textContent = 'Run a sampling job first.';
        }
    }
  }
}

/**
 * Session view store: the server's session mirrored next to client drafts.
 *
 * Drafts never overwrite server state silently; each step saves explicitly
 * and the save refreshes the mirror.  A revision counter implements
 * optimistic concurrency: if a save comes back with a revision that is not
 * exactly one ahead of the mirror, someone else wrote in between and the
 * store flips into conflict mode until the user reloads.
 */

import { ApiError, SessionApi, SessionDto } from './api.js';

export interface MarginalDraft {
  q50: string;
  q75: string;
}

export interface SessionView {
  session: SessionDto | null;
  marginalDrafts: MarginalDraft[];
  concordanceDrafts: Record<string, string>; // "i-j" -> probability text
  beliefDrafts: Record<string, string>; // exponential / regression inputs
  dirty: { marginals: boolean; concordances: boolean; beliefs: boolean };
  /** panels whose displayed numbers no longer reflect the drafts */
  stale: { hypers: boolean; coherency: boolean; overlays: boolean };
  conflict: boolean;
  lastError: string | null;
}

export type Listener = (view: SessionView) => void;

function pairKey(pair: [number, number]): string {
  return `${pair[0]}-${pair[1]}`;
}

export function pairsForK(k: number): [number, number][] {
  const out: [number, number][] = [];
  for (let i = 2; i <= k; i++) {
    for (let j = 1; j < i; j++) out.push([j, i]);
  }
  return out;
}

export class SessionStore {
  private view: SessionView = {
    session: null,
    marginalDrafts: [],
    concordanceDrafts: {},
    beliefDrafts: {},
    dirty: { marginals: false, concordances: false, beliefs: false },
    stale: { hypers: false, coherency: false, overlays: false },
    conflict: false,
    lastError: null,
  };

  private listeners: Listener[] = [];

  constructor(private readonly api: SessionApi) {}

  get(): SessionView {
    return this.view;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.view);
  }

  private patch(partial: Partial<SessionView>): void {
    this.view = { ...this.view, ...partial };
    this.emit();
  }

  private adoptSession(session: SessionDto, expectedRevision?: number): void {
    const conflict =
      expectedRevision !== undefined && session.revision !== expectedRevision;
    this.patch({ session, conflict: conflict || this.view.conflict });
  }

  async create(body: { model_family: string; k?: number; n_e?: number }): Promise<void> {
    const session = await this.api.createSession(body);
    const k = session.k ?? 0;
    this.view = {
      session,
      marginalDrafts: Array.from({ length: k }, () => ({ q50: '', q75: '' })),
      concordanceDrafts: {},
      beliefDrafts: {},
      dirty: { marginals: false, concordances: false, beliefs: false },
      stale: { hypers: false, coherency: false, overlays: false },
      conflict: false,
      lastError: null,
    };
    this.emit();
  }

  async reload(): Promise<void> {
    const current = this.view.session;
    if (!current) return;
    const session = await this.api.getSession(current.id);
    this.patch({ session, conflict: false, lastError: null });
  }

  editMarginal(index: number, field: keyof MarginalDraft, value: string): void {
    const drafts = this.view.marginalDrafts.map((d, i) =>
      i === index ? { ...d, [field]: value } : d,
    );
    // edited numbers make the solved panels stale until re-saved
    this.patch({
      marginalDrafts: drafts,
      dirty: { ...this.view.dirty, marginals: true },
      stale: { hypers: true, coherency: true, overlays: true },
    });
  }

  editConcordance(pair: [number, number], value: string): void {
    this.patch({
      concordanceDrafts: { ...this.view.concordanceDrafts, [pairKey(pair)]: value },
      dirty: { ...this.view.dirty, concordances: true },
      stale: { ...this.view.stale, coherency: true, overlays: true },
    });
  }

  editBelief(field: string, value: string): void {
    this.patch({
      beliefDrafts: { ...this.view.beliefDrafts, [field]: value },
      dirty: { ...this.view.dirty, beliefs: true },
      stale: { hypers: true, coherency: this.view.stale.coherency, overlays: true },
    });
  }

  async saveMarginals(): Promise<void> {
    const session = this.requireSession();
    const family = session.model_family;
    try {
      let updated: SessionDto;
      if (family === 'mvn') {
        const quantiles = this.view.marginalDrafts.map((d) => [
          Number(d.q50),
          Number(d.q75),
        ]);
        updated = await this.api.putMarginals(session.id, {
          quantiles,
          n_e: session.n_e,
        });
      } else {
        const body: Record<string, number> = {};
        for (const [key, value] of Object.entries(this.view.beliefDrafts)) {
          if (value.trim() !== '') body[key] = Number(value);
        }
        updated = await this.api.putMarginals(session.id, body);
      }
      this.adoptSession(updated, session.revision + 1);
      this.patch({
        dirty: { ...this.view.dirty, marginals: false, beliefs: false },
        stale: { ...this.view.stale, hypers: false },
        lastError: null,
      });
    } catch (err) {
      this.fail(err);
      throw err;
    }
  }

  async saveConcordances(): Promise<void> {
    const session = this.requireSession();
    const k = session.k ?? 0;
    const concordances = pairsForK(k)
      .filter((pair) => (this.view.concordanceDrafts[pairKey(pair)] ?? '') !== '')
      .map((pair) => ({
        pair,
        p: Number(this.view.concordanceDrafts[pairKey(pair)]),
      }));
    try {
      const updated = await this.api.putConcordances(session.id, concordances);
      this.adoptSession(updated, session.revision + 1);
      this.patch({
        dirty: { ...this.view.dirty, concordances: false },
        stale: { ...this.view.stale, coherency: false },
        lastError: null,
      });
    } catch (err) {
      this.fail(err);
      throw err;
    }
  }

  markOverlaysFresh(): void {
    this.patch({ stale: { ...this.view.stale, overlays: false } });
  }

  private fail(err: unknown): void {
    const message =
      err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    this.patch({ lastError: message });
  }

  private requireSession(): SessionDto {
    const session = this.view.session;
    if (!session) throw new Error('no active session');
    return session;
  }
}

/**
 * Console state: one live session as the auditors see it.
 *
 * Every number on display originates in a service response; the view model
 * only stores, groups and replays them.  Entry is disabled for ordinals the
 * service already confirmed as recorded, while the session is not RUNNING,
 * and while the service is unreachable.
 */

import { AuditApi, ConflictError, DomainError, OfflineError } from "./api.js";
import type {
  ApiErrorPayload,
  DrawInstruction,
  OpenSessionRequest,
  SessionSnapshot,
} from "./types.js";

export interface RiskPoint {
  draw: number;
  risk: string; // decimal string straight from the service
}

export interface HistoryEntry {
  ordinal: number;
  votes: Record<string, string>;
  risks: Record<string, string>;
}

export interface ConflictPrompt {
  ordinal: number;
  message: string;
  currentRevision?: number;
}

export class ConsoleViewModel {
  snapshot: SessionSnapshot | null = null;
  riskHistory = new Map<string, RiskPoint[]>();
  history: HistoryEntry[] = [];
  lastError: ApiErrorPayload | null = null;
  conflict: ConflictPrompt | null = null;
  offline = false;
  busy = false;

  constructor(private api: AuditApi) {}

  get running(): boolean {
    return this.snapshot?.status === "RUNNING";
  }

  /** Ordinals drawn but not yet recorded, in draw order. */
  pendingEntries(): DrawInstruction[] {
    if (!this.snapshot) return [];
    const recorded = new Set(this.snapshot.recorded);
    return this.snapshot.pending.filter((p) => !recorded.has(p.ordinal));
  }

  canEnter(ordinal: number): boolean {
    if (!this.snapshot || this.offline || !this.running) return false;
    if (new Set(this.snapshot.recorded).has(ordinal)) return false;
    return this.snapshot.pending.some((p) => p.ordinal === ordinal);
  }

  /** Pull list: pending retrieval work grouped by container, positions sorted. */
  pullList(): Array<{ container: string; positions: number[] }> {
    const byContainer = new Map<string, number[]>();
    for (const p of this.pendingEntries()) {
      const positions = byContainer.get(p.container) ?? [];
      positions.push(p.position);
      byContainer.set(p.container, positions);
    }
    return [...byContainer.entries()]
      .sort(([a], [b]) => a.localeCompare(b))
      .map(([container, positions]) => ({
        container,
        positions: positions.sort((a, b) => a - b),
      }));
  }

  async open(inputs: OpenSessionRequest): Promise<void> {
    await this.guard(async () => {
      const snap = await this.api.openSession(inputs);
      this.adopt(snap);
    });
  }

  /** Join a session another station opened. */
  async attach(sessionId: string): Promise<void> {
    await this.guard(async () => {
      this.adopt(await this.api.getSession(sessionId));
    });
  }

  async refresh(): Promise<void> {
    if (!this.snapshot) return;
    await this.guard(async () => {
      this.adopt(await this.api.getSession(this.snapshot!.session_id));
    });
  }

  async drawNext(count = 1): Promise<void> {
    if (!this.snapshot) return;
    await this.guard(async () => {
      const resp = await this.api.postDraws(
        this.snapshot!.session_id,
        count,
        this.snapshot!.revision,
      );
      this.snapshot = {
        ...this.snapshot!,
        revision: resp.revision,
        status: resp.status,
        pending: [...this.snapshot!.pending, ...resp.instructions],
      };
    });
  }

  async submitEntry(
    ordinal: number,
    votes: Record<string, string>,
  ): Promise<boolean> {
    if (!this.snapshot) return false;
    return this.guard(async () => {
      const snap = this.snapshot!;
      const resp = await this.api.postMvr(
        snap.session_id,
        ordinal,
        votes,
        snap.revision,
      );
      const risks: Record<string, string> = {};
      for (const u of resp.assertions) {
        risks[u.assertion] = u.measured_risk;
        const series = this.riskHistory.get(u.assertion) ?? [];
        series.push({ draw: this.history.length + 1, risk: u.measured_risk });
        this.riskHistory.set(u.assertion, series);
      }
      this.history.push({ ordinal, votes, risks });
      this.snapshot = {
        ...snap,
        revision: resp.revision,
        status: resp.status,
        risks: { ...snap.risks, ...risks },
        recorded: [...snap.recorded, ordinal],
        cards_recorded: snap.cards_recorded + 1,
        pending: snap.pending.filter((p) => p.ordinal !== ordinal),
      };
      return true;
    }, ordinal).then((ok) => ok === true);
  }

  dismissConflict(): void {
    this.conflict = null;
  }

  async downloadTranscript(): Promise<string> {
    if (!this.snapshot) throw new Error("no session");
    return this.api.fetchTranscript(this.snapshot.session_id);
  }

  /** Run one service call, translating failures into view state. */
  private async guard<T>(
    fn: () => Promise<T>,
    ordinal?: number,
  ): Promise<T | undefined> {
    this.busy = true;
    this.lastError = null;
    try {
      const out = await fn();
      this.offline = false;
      return out;
    } catch (err) {
      if (err instanceof ConflictError) {
        this.conflict = {
          ordinal: ordinal ?? -1,
          message: err.payload.message,
          currentRevision: err.currentRevision,
        };
        // another station moved the session forward; resync before retrying
        await this.resync();
      } else if (err instanceof DomainError) {
        this.lastError = err.payload; // surfaced verbatim
      } else if (err instanceof OfflineError) {
        this.offline = true;
      } else {
        throw err;
      }
      return undefined;
    } finally {
      this.busy = false;
    }
  }

  private async resync(): Promise<void> {
    if (!this.snapshot) return;
    try {
      this.adopt(await this.api.getSession(this.snapshot.session_id));
      this.offline = false;
    } catch (err) {
      if (err instanceof OfflineError) this.offline = true;
      else throw err;
    }
  }

  private adopt(snap: SessionSnapshot): void {
    this.snapshot = snap;
    for (const assertion of snap.assertions) {
      if (!this.riskHistory.has(assertion)) this.riskHistory.set(assertion, []);
    }
  }
}

/**
 * Wire types for the audit service.
 *
 * Risk and assorter values arrive as decimal strings and must stay strings:
 * the console never does risk arithmetic, it renders what the service said.
 */

export interface DrawInstruction {
  ordinal: number;
  container: string;
  position: number;
  group: string;
  card_id?: string;
  cvr_votes?: Record<string, string>;
}

export interface SessionSnapshot {
  session_id: string;
  revision: number;
  status: "RUNNING" | "CONFIRMED" | "FULL_COUNT" | "STALLED";
  contest: string;
  candidates: string[];
  reported_winner: string;
  risk_limit: string;
  cards_total: number;
  cards_recorded: number;
  recorded: number[];
  pending: DrawInstruction[];
  risks: Record<string, string>;
  assertions: string[];
}

export interface DrawResponse {
  instructions: DrawInstruction[];
  revision: number;
  status: SessionSnapshot["status"];
}

export interface AssertionUpdate {
  assertion: string;
  comparison_value: string;
  measured_risk: string;
}

export interface MvrResponse {
  revision: number;
  status: SessionSnapshot["status"];
  assertions: AssertionUpdate[];
}

export interface ApiErrorPayload {
  error: string;
  message: string;
  details: Record<string, unknown>;
}

export interface OpenSessionRequest {
  contest: string;
  manifest: string;
  subtotals: string;
  cvrs: string;
  seed: string;
  method: "alpha" | "sprt";
}

/** Payload shapes of the review HTTP API. Offsets are Unicode scalar indices. */

export interface SpanView {
  start: number;
  end: number;
  type: string;
  surface: string;
  origin: "AUTO" | "HUMAN";
  item_id?: number;
}

export interface ConflictView {
  start: number;
  end: number;
  candidates: string[];
  chosen: string;
}

export type Status = "PENDING" | "ACCEPTED" | "CORRECTED" | "SKIPPED";

export interface RecordView {
  sent_id: string;
  text: string;
  source: string;
  status: Status;
  revision: number;
  spans: SpanView[];
  conflicts: ConflictView[];
  annotator_id: string | null;
}

export interface PageView {
  total: number;
  offset: number;
  limit: number;
  records: RecordView[];
}

export interface TypeConfig {
  name: string;
  display: string;
  color: string;
}

export interface Progress {
  total: number;
  by_status: Record<Status, number>;
  spans_by_type: Record<string, number>;
}

export type Action = "accept" | "skip" | "add_span" | "edit_span" | "delete_span";

export interface SpanPayload {
  start: number;
  end: number;
  type: string;
}

export interface DecisionBody {
  annotator_id: string;
  revision: number;
  action: Action;
  span?: SpanPayload;
  old_span?: SpanPayload;
}

// Wire shapes for the /v1 API. Field names mirror the server payloads.

export interface Gps {
  lat: number;
  lon: number;
}

export interface CaptureBody {
  user_id: string;
  gps: Gps;
  timestamp: string;
  transcript?: string | null;
  scene_text?: string | null;
  image_b64?: string | null;
  space_label?: string | null;
}

export interface Classification {
  query_type: string;
  granularity: string | null;
}

export interface AnswerView {
  answer_text: string;
  rationale: string;
  confidence: number;
  needs_verification: boolean;
  referenced_memory_ids: string[];
  mode: Classification;
}

export interface Outcome {
  kind: string;
  classification: Classification;
  response: AnswerView | null;
  routing: string | null;
  verification_id: string | null;
  summary: string | null;
  stored_memory_id: string | null;
}

export interface SketchView {
  space_label: string;
  scene_description: string;
  referent: string | null;
  timestamp: string;
  gps: Gps;
  intent: string | null;
  transcript: string | null;
}

export interface MemoryView {
  record: string;
  id: string;
  user_id: string;
  created_at: string;
  sketch: SketchView;
  query_text: string;
  response_text: string;
  source_kind: string;
  confidence: number;
}

export interface PendingView {
  record: string;
  id: string;
  kind: string;
  payload: Record<string, unknown>;
  summary: string;
  created_at: string;
  expires_at: string;
}

export interface VerifyResult {
  verification_id: string;
  outcome: string;
  memory_id: string | null;
}

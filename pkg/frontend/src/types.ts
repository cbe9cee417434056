// Mirrors the study service wire schemas. The client renders exactly what
// the payload carries; it never builds asset URLs on its own.

export interface ProgressInfo {
  answered: number;
  total: number;
}

export interface FramePayload {
  url: string;
  timestamp: number;
}

export interface ConditionPayload {
  subtitle_text?: string;
  frames?: FramePayload[];
}

export type Stage = 'single' | 'combined';

export interface Task {
  done: false;
  question_id: string;
  question: string;
  choices: string[];
  condition: string;
  stage: Stage;
  progress: ProgressInfo;
  payload: ConditionPayload;
}

export interface DoneNotice {
  done: true;
  progress: ProgressInfo;
}

export type NextResponse = Task | DoneNotice;

export interface AnswerBody {
  question_id: string;
  condition: string;
  choice: number;
  confidence: number;
}

export interface AnswerAck {
  accepted: boolean;
  progress: ProgressInfo;
  done: boolean;
}

// What the session flow needs from the transport; StudyClient implements it,
// tests substitute fakes.
export interface TaskSource {
  nextTask(): Promise<NextResponse>;
  submitAnswer(body: AnswerBody): Promise<AnswerAck>;
}

// Shapes of the session API resources. The client renders these verbatim:
// all semantics stays on the server.

export interface GuardQuestion {
    kind: 'guard';
    atom: string;
}

export interface OracleQuestion {
    kind: 'oracle';
    query: string;
    text: string;
    levels: string[];
    certificate_kinds: string[];
    payload: string[];
}

export type PendingQuestion = GuardQuestion | OracleQuestion;

export interface TraceEvent {
    step: number;
    kind: string;
    payload: Record<string, unknown>;
    before: string;
    after: string;
}

export interface SessionResource {
    id: string;
    scenario: string;
    status: 'running' | 'waiting' | 'completed' | 'failed' | 'aborted';
    abox: Record<string, string[]>;
    trace: TraceEvent[];
    answers: unknown[];
    pending: PendingQuestion | null;
    exit_status?: number;
    failures?: string[];
    error?: string;
}

export interface OracleAnswer {
    trust: string;
    certificates: string[];
}

export type Answer = string | OracleAnswer;

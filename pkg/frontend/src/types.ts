/** Shapes mirrored from the session service's JSON responses. */

export type Rolename = 'analyst' | 'consumer';

export type SessionStage = 'baseline' | 'negotiation' | 'resolution' | 'closed';

export interface Verdict {
    strong: boolean;
    weak: boolean;
    sup_norm: number;
    p_norm: number;
    epsilon: number;
    p: number;
}

export interface BaselineBlock {
    difference: number[];
    verdict: Verdict;
}

export interface ResolutionBlock {
    overall: number[];
    residual: number[];
    analyst_adjustment: number[];
    consumer_adjustment: number[];
    verdict: Verdict;
}

export interface SessionView {
    session_id: string;
    principles: { names: string[]; reference_index: number };
    epsilon: number;
    p: number;
    stage: SessionStage;
    /** keys look like "analyst:baseline" */
    submissions: Record<string, number[]>;
    baseline: BaselineBlock | null;
    resolution: ResolutionBlock | null;
    created_at: string;
    updated_at: string;
}

export interface SuggestResponse {
    analyst_weights: number[];
    consumer_weights: number[];
    predicted_D: number[];
    predicted_verdict: Verdict;
}

export function submissionFor(
    view: SessionView,
    role: Rolename,
    stage: 'baseline' | 'resolution',
): number[] | null {
    return view.submissions[`${role}:${stage}`] ?? null;
}

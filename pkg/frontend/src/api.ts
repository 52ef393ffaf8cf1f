/** Typed fetch client for the session service. */

import { Rolename, SessionView, SuggestResponse } from './types.js';

export class ApiError extends Error {
    constructor(
        public readonly status: number,
        public readonly detail: string,
    ) {
        super(`HTTP ${status}: ${detail}`);
    }
}

async function parseError(response: Response): Promise<ApiError> {
    let detail = response.statusText;
    try {
        const body = await response.json();
        if (body && typeof body.detail === 'string') {
            detail = body.detail;
        } else if (body && body.detail !== undefined) {
            detail = JSON.stringify(body.detail);
        }
    } catch {
        // non-JSON error body; keep the status text
    }
    return new ApiError(response.status, detail);
}

export class WorkbenchApi {
    constructor(private readonly baseUrl: string = '') {}

    private async request<T>(path: string, init?: RequestInit): Promise<T> {
        const response = await fetch(this.baseUrl + path, {
            headers: { 'Content-Type': 'application/json' },
            ...init,
        });
        if (!response.ok) {
            throw await parseError(response);
        }
        return (await response.json()) as T;
    }

    createSession(
        principles: string[] | null,
        epsilon: number,
        p: number,
    ): Promise<{ session_id: string; stage: string }> {
        return this.request('/api/sessions', {
            method: 'POST',
            body: JSON.stringify({ principles, epsilon, p }),
        });
    }

    getSession(sessionId: string): Promise<SessionView> {
        return this.request(`/api/sessions/${sessionId}`);
    }

    submitAllocations(
        sessionId: string,
        role: Rolename,
        stage: 'baseline' | 'resolution',
        weights: number[],
    ): Promise<SessionView> {
        return this.request(
            `/api/sessions/${sessionId}/parties/${role}/allocations`,
            { method: 'POST', body: JSON.stringify({ stage, weights }) },
        );
    }

    suggest(
        sessionId: string,
        gammaA: number,
        gammaC: number,
    ): Promise<SuggestResponse> {
        return this.request(`/api/sessions/${sessionId}/suggest`, {
            method: 'POST',
            body: JSON.stringify({ gamma_a: gammaA, gamma_c: gammaC }),
        });
    }

    advance(sessionId: string, toStage: string): Promise<SessionView> {
        return this.request(`/api/sessions/${sessionId}/advance`, {
            method: 'POST',
            body: JSON.stringify({ to_stage: toStage }),
        });
    }

    exportUrl(sessionId: string): string {
        return `${this.baseUrl}/api/sessions/${sessionId}/export`;
    }
}

import type { Answer, PendingQuestion, SessionResource } from './types';

export class ApiError extends Error {
    constructor(public status: number, message: string) {
        super(message);
    }
}

async function asJson<T>(response: Response): Promise<T> {
    const body = response.status === 204 ? null : await response.json();
    if (!response.ok) {
        const detail = body && typeof body === 'object' && 'error' in body
            ? String((body as { error: unknown }).error)
            : response.statusText;
        throw new ApiError(response.status, detail);
    }
    return body as T;
}

export class SessionClient {
    constructor(private baseUrl: string) {}

    async createSession(scenario: string): Promise<SessionResource> {
        const response = await fetch(`${this.baseUrl}/sessions`, {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ scenario }),
        });
        return asJson<SessionResource>(response);
    }

    async getSession(id: string): Promise<SessionResource> {
        return asJson<SessionResource>(await fetch(`${this.baseUrl}/sessions/${id}`));
    }

    async getPending(id: string): Promise<PendingQuestion | null> {
        const body = await asJson<{ pending: PendingQuestion | null }>(
            await fetch(`${this.baseUrl}/sessions/${id}/pending`));
        return body.pending;
    }

    async answer(id: string, answer: Answer): Promise<SessionResource> {
        const response = await fetch(`${this.baseUrl}/sessions/${id}/answer`, {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ answer }),
        });
        return asJson<SessionResource>(response);
    }

    async deleteSession(id: string): Promise<void> {
        await fetch(`${this.baseUrl}/sessions/${id}`, { method: 'DELETE' });
    }
}

// Wires the renderer to the session API: create a session from pasted
// scenario text, poll while it runs, and let the human answer questions.
// Every state shown is server-confirmed; answering re-fetches and re-renders.

import { ApiError, SessionClient } from './api';
import { renderSession } from './view';
import type { Answer, SessionResource } from './types';

const POLL_MS = 1500;

export class SessionApp {
    private current: SessionResource | null = null;
    private timer: ReturnType<typeof setInterval> | null = null;
    private notice = '';

    constructor(private client: SessionClient, private root: HTMLElement) {}

    async start(scenario: string): Promise<void> {
        this.current = await this.client.createSession(scenario);
        this.render();
        this.schedule();
    }

    private schedule(): void {
        if (this.timer !== null) clearInterval(this.timer);
        this.timer = setInterval(() => void this.refresh(), POLL_MS);
    }

    private async refresh(): Promise<void> {
        if (!this.current) return;
        try {
            this.current = await this.client.getSession(this.current.id);
        } catch (err) {
            this.notice = err instanceof Error ? err.message : String(err);
        }
        this.render();
        if (this.current && this.current.status !== 'running'
            && this.current.status !== 'waiting' && this.timer !== null) {
            clearInterval(this.timer);
            this.timer = null;
        }
    }

    private async submit(answer: Answer): Promise<void> {
        if (!this.current) return;
        try {
            this.current = await this.client.answer(this.current.id, answer);
            this.notice = '';
        } catch (err) {
            if (err instanceof ApiError && err.status === 409) {
                this.notice = 'No question is pending.';
                this.current = await this.client.getSession(this.current.id);
            } else {
                this.notice = err instanceof Error ? err.message : String(err);
            }
        }
        this.render();
    }

    private render(): void {
        if (!this.current) return;
        this.root.replaceChildren(
            renderSession(this.current, { onAnswer: (a) => void this.submit(a) }));
        if (this.notice) {
            const banner = document.createElement('div');
            banner.className = 'notice';
            banner.textContent = this.notice;
            this.root.prepend(banner);
        }
    }
}

export function bootstrap(): void {
    const base = (document.getElementById('api-base') as HTMLInputElement | null)
        ?.value || 'http://127.0.0.1:8420';
    const root = document.getElementById('session-root');
    const textarea = document.getElementById('scenario-text');
    const button = document.getElementById('start-session');
    if (!root || !(textarea instanceof HTMLTextAreaElement) || !button) return;
    const app = new SessionApp(new SessionClient(base), root);
    button.addEventListener('click', () => {
        void app.start(textarea.value);
    });
}

if (typeof document !== 'undefined' && document.readyState !== 'loading') {
    // loaded as a module at the bottom of index.html
    bootstrap();
} else if (typeof document !== 'undefined') {
    document.addEventListener('DOMContentLoaded', bootstrap);
}

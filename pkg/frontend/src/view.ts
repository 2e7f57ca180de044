// Deterministic rendering of a session resource. The view is a pure
// function of the last fetched resource: every assertion, atom, level, and
// certificate kind shown here is a verbatim server string.

import type { Answer, SessionResource, TraceEvent } from './types';

export interface ViewHandlers {
    onAnswer: (answer: Answer) => void;
}

const HOLD_CAUSES = ['below-threshold', 'rejected', 'deferred',
                     't-incompatible', 'no-answer'];

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
}

function groupChips(assertions: string[]): Map<string, string[]> {
    // group by the leading subject token: "a : C @ U" and "(a, b) : r @ U"
    const groups = new Map<string, string[]>();
    for (const assertion of assertions) {
        const subject = assertion.startsWith('(')
            ? assertion.slice(1, assertion.indexOf(','))
            : assertion.split(' ')[0];
        const bucket = groups.get(subject) ?? [];
        bucket.push(assertion);
        groups.set(subject, bucket);
    }
    return groups;
}

function renderAbox(resource: SessionResource): HTMLElement {
    const panel = el('section', 'abox-panel');
    panel.appendChild(el('h2', undefined, 'Knowledge state'));
    for (const context of Object.keys(resource.abox).sort()) {
        const block = el('div', 'abox-context');
        block.appendChild(el('h3', undefined, `@ ${context}`));
        for (const [subject, assertions] of groupChips(resource.abox[context])) {
            const group = el('div', 'chip-group');
            group.appendChild(el('span', 'chip-subject', subject));
            for (const assertion of assertions) {
                group.appendChild(el('span', 'chip', assertion));
            }
            block.appendChild(group);
        }
        panel.appendChild(block);
    }
    return panel;
}

function eventSummary(event: TraceEvent): string {
    const payload = event.payload;
    switch (event.kind) {
        case 'guard':
            return `guard ${payload['guard']} : ${payload['value'] ? 't' : 'f'}`;
        case 'pbox-rule':
            return payload['assertion'] !== undefined
                ? `${payload['rule']} ${payload['assertion']}`
                : String(payload['rule']);
        case 'consult': {
            const outcome = payload['outcome'];
            const cause = payload['cause'] ? ` (${payload['cause']})` : '';
            return `consult ${payload['query'] ?? ''}: ${outcome}${cause}`;
        }
        case 'static-derivation':
            return `check ${payload['assertion']}: ` +
                (payload['derivable'] ? 'derivable' : 'not derivable');
        case 'glue':
            return `glue: ${payload['kind']}`;
        default:
            return event.kind;
    }
}

function renderTimeline(resource: SessionResource): HTMLElement {
    const panel = el('section', 'timeline-panel');
    panel.appendChild(el('h2', undefined, 'Timeline'));
    const list = el('ol', 'timeline');
    if (resource.trace.length === 0) {
        panel.appendChild(el('p', 'timeline-empty', 'No events yet.'));
        return panel;
    }
    for (const event of resource.trace) {
        const item = el('li', `event event-${event.kind}`);
        item.appendChild(el('span', 'event-step', `step ${event.step}`));
        item.appendChild(el('span', 'event-text', eventSummary(event)));
        item.appendChild(el('span', 'event-digest',
                            `${event.before} -> ${event.after}`));
        list.appendChild(item);
    }
    panel.appendChild(list);
    return panel;
}

function renderHoldBanner(resource: SessionResource): HTMLElement | null {
    const holds = resource.trace.filter(
        (event) => event.kind === 'consult' && event.payload['outcome'] === 'hold');
    if (holds.length === 0) return null;
    const last = holds[holds.length - 1];
    const cause = String(last.payload['cause'] ?? 'hold');
    const banner = el('div', 'hold-banner');
    banner.appendChild(el('strong', undefined, `import held: ${cause}`));
    const gates = el('ul', 'hold-gates');
    gates.appendChild(el('li', undefined,
                         `answered: ${last.payload['answered'] ? 'yes' : 'no'}`));
    gates.appendChild(el('li', undefined,
                         `trust gate: ${last.payload['trust_ok'] ? 'passed' : 'failed'}`));
    gates.appendChild(el('li', undefined,
                         `policy verdict: ${last.payload['policy_verdict'] || 'n/a'}`));
    gates.appendChild(el('li', undefined,
                         `tbox compatible: ${last.payload['t_compatible'] ? 'yes' : 'no'}`));
    banner.appendChild(gates);
    if (!HOLD_CAUSES.includes(cause)) {
        banner.appendChild(el('p', 'hold-unknown-cause', cause));
    }
    return banner;
}

function renderPending(resource: SessionResource,
                       handlers: ViewHandlers): HTMLElement {
    const panel = el('section', 'pending-panel');
    const pending = resource.pending;
    if (!pending) {
        panel.appendChild(el('p', 'pending-none',
                             resource.status === 'waiting'
                                 ? 'Waiting for the server...'
                                 : `Session ${resource.status}.`));
        return panel;
    }
    if (pending.kind === 'guard') {
        panel.appendChild(el('h2', undefined, 'Guard question'));
        panel.appendChild(el('code', 'guard-atom', pending.atom));
        const yes = el('button', 'answer-true', 't');
        yes.addEventListener('click', () => handlers.onAnswer('t'));
        const no = el('button', 'answer-false', 'f');
        no.addEventListener('click', () => handlers.onAnswer('f'));
        panel.appendChild(yes);
        panel.appendChild(no);
        return panel;
    }
    panel.appendChild(el('h2', undefined, 'Oracle question'));
    panel.appendChild(el('p', 'oracle-text', pending.text));
    const payloadList = el('ul', 'oracle-payload');
    for (const assertion of pending.payload) {
        payloadList.appendChild(el('li', 'chip', assertion));
    }
    panel.appendChild(payloadList);

    const trustSelect = el('select', 'trust-select');
    for (const level of pending.levels) {
        const option = el('option', undefined, level);
        option.value = level;
        trustSelect.appendChild(option);
    }
    panel.appendChild(trustSelect);

    const checklist = el('div', 'cert-checklist');
    const boxes: HTMLInputElement[] = [];
    for (const kind of pending.certificate_kinds) {
        const label = el('label', 'cert-kind');
        const box = el('input');
        box.type = 'checkbox';
        box.value = kind;
        box.checked = true;
        boxes.push(box);
        label.appendChild(box);
        label.appendChild(el('span', undefined, kind));
        checklist.appendChild(label);
    }
    panel.appendChild(checklist);

    const submit = el('button', 'answer-oracle', 'Answer');
    submit.addEventListener('click', () => handlers.onAnswer({
        trust: trustSelect.value,
        certificates: boxes.filter((box) => box.checked).map((box) => box.value),
    }));
    panel.appendChild(submit);
    return panel;
}

export function renderSession(resource: SessionResource,
                              handlers: ViewHandlers): HTMLElement {
    const root = el('div', 'session-view');
    const header = el('header');
    header.appendChild(el('h1', undefined, resource.scenario));
    header.appendChild(el('span', `status status-${resource.status}`,
                          resource.status));
    header.appendChild(el('span', 'session-id', resource.id));
    root.appendChild(header);
    if (resource.error) {
        root.appendChild(el('div', 'error-banner', resource.error));
    }
    const hold = renderHoldBanner(resource);
    if (hold) root.appendChild(hold);
    root.appendChild(renderPending(resource, handlers));
    root.appendChild(renderAbox(resource));
    root.appendChild(renderTimeline(resource));
    if (resource.failures && resource.failures.length > 0) {
        const failures = el('section', 'failures-panel');
        failures.appendChild(el('h2', undefined, 'Expectation failures'));
        for (const failure of resource.failures) {
            failures.appendChild(el('p', 'failure', failure));
        }
        root.appendChild(failures);
    }
    return root;
}

/** Workbench bootstrap: join or create a session, then run the stage loop.
 *
 * Two modes, chosen by the `role` query parameter:
 *   ?session=<id>&role=analyst      one browser per party
 *   ?session=<id>&role=facilitator  one operator enters both roles
 * A `blind=1` parameter hides the other party's numbers until the stage
 * completes, for blind baseline elicitation.
 */

import { WorkbenchApi, ApiError } from './api.js';
import { renderDashboard } from './dashboard.js';
import { startPolling } from './polling.js';
import { AllocationEditor } from './sliders.js';
import { Rolename, SessionView, submissionFor } from './types.js';
import { dashboardViewModel, sessionPhase } from './viewmodel.js';
import { WhatIfPanel } from './whatif.js';

function query(name: string): string | null {
    return new URLSearchParams(window.location.search).get(name);
}

// same-origin by default; ?api=http://127.0.0.1:8000 when served separately
const api = new WorkbenchApi(query('api') ?? '');

function element(id: string): HTMLElement {
    const found = document.getElementById(id);
    if (!found) {
        throw new Error(`missing #${id} in index.html`);
    }
    return found;
}

async function createSessionFromForm(): Promise<void> {
    const namesText = (element('create-principles') as HTMLInputElement).value;
    const names = namesText
        .split(',')
        .map((name) => name.trim())
        .filter((name) => name.length > 0);
    const epsilon = Number((element('create-epsilon') as HTMLInputElement).value);
    const p = Number((element('create-p') as HTMLInputElement).value);
    const created = await api.createSession(names.length ? names : null, epsilon, p);
    const url = new URL(window.location.href);
    url.searchParams.set('session', created.session_id);
    url.searchParams.set('role', 'facilitator');
    window.location.href = url.toString();
}

interface Workbench {
    sessionId: string;
    roles: Rolename[];
    blind: boolean;
    editors: Partial<Record<Rolename, AllocationEditor>>;
    whatif: WhatIfPanel | null;
    lastStage: string | null;
}

function stageToSubmit(view: SessionView): 'baseline' | 'resolution' | null {
    switch (view.stage) {
        case 'baseline':
            return 'baseline';
        case 'negotiation':
        case 'resolution':
            return 'resolution';
        default:
            return null;
    }
}

async function submit(
    bench: Workbench,
    role: Rolename,
    weights: number[],
): Promise<void> {
    const view = await api.getSession(bench.sessionId);
    const stage = stageToSubmit(view);
    if (stage === null) {
        reportError(new Error('session is closed'));
        return;
    }
    try {
        const updated = await api.submitAllocations(
            bench.sessionId,
            role,
            stage,
            weights,
        );
        render(bench, updated);
    } catch (error) {
        reportError(error);
    }
}

function reportError(error: unknown): void {
    element('errors').textContent =
        error instanceof ApiError ? error.message : String(error);
}

function renderSubmissions(bench: Workbench, view: SessionView): void {
    const box = element('submissions');
    box.innerHTML = '';
    const phase = sessionPhase(view);
    const stageDone = (stage: 'baseline' | 'resolution') =>
        submissionFor(view, 'analyst', stage) !== null &&
        submissionFor(view, 'consumer', stage) !== null;
    for (const role of ['analyst', 'consumer'] as Rolename[]) {
        for (const stage of ['baseline', 'resolution'] as const) {
            const weights = submissionFor(view, role, stage);
            if (weights === null) {
                continue;
            }
            const mine = bench.roles.includes(role);
            const visible = mine || !bench.blind || stageDone(stage);
            const row = document.createElement('div');
            row.className = 'submission-row';
            row.textContent = visible
                ? `${role} ${stage}: ${weights.map((w) => (100 * w).toFixed(1) + '%').join(' / ')}`
                : `${role} ${stage}: submitted (hidden until ${stage} completes)`;
            box.appendChild(row);
        }
    }
    element('phase').textContent = `phase: ${phase}`;
}

function render(bench: Workbench, view: SessionView): void {
    renderDashboard(element('dashboard'), dashboardViewModel(view));
    renderSubmissions(bench, view);
    if (
        bench.whatif === null &&
        view.baseline !== null &&
        view.stage !== 'closed'
    ) {
        bench.whatif = new WhatIfPanel(
            api,
            bench.sessionId,
            view.principles.names,
            bench.editors,
        );
        element('whatif-slot').appendChild(bench.whatif.root);
    }
    if (bench.lastStage !== view.stage) {
        bench.lastStage = view.stage;
        element('export-link').innerHTML =
            `<a href="${api.exportUrl(bench.sessionId)}">download session CSV</a>`;
    }
}

async function startWorkbench(sessionId: string): Promise<void> {
    const roleParam = query('role') ?? 'facilitator';
    const roles: Rolename[] =
        roleParam === 'facilitator'
            ? ['analyst', 'consumer']
            : [roleParam as Rolename];
    const view = await api.getSession(sessionId);
    const bench: Workbench = {
        sessionId,
        roles,
        blind: query('blind') === '1',
        editors: {},
        whatif: null,
        lastStage: null,
    };
    const editorsBox = element('editors');
    for (const role of roles) {
        const editor = new AllocationEditor(role, view.principles.names, {
            onSubmit: (weights) => void submit(bench, role, weights),
        });
        const existing = submissionFor(view, role, 'baseline');
        if (existing !== null) {
            editor.setDraft(existing);
        }
        bench.editors[role] = editor;
        editorsBox.appendChild(editor.root);
    }
    render(bench, view);
    startPolling(async () => {
        render(bench, await api.getSession(bench.sessionId));
    }, reportError);
}

export function boot(): void {
    const sessionId = query('session');
    if (sessionId) {
        element('create-panel').style.display = 'none';
        void startWorkbench(sessionId).catch(reportError);
    } else {
        element('create-button').addEventListener('click', () => {
            void createSessionFromForm().catch(reportError);
        });
    }
}

boot();

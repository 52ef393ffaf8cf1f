/** What-if concession panel: slider-driven suggest calls, debounced, with an
 * adopt button that copies suggestions into the draft editors. The human
 * decides what to submit; this panel never submits on its own. */

import { WorkbenchApi, ApiError } from './api.js';
import { AllocationEditor } from './sliders.js';
import { whatifViewModel } from './viewmodel.js';

export const SUGGEST_DEBOUNCE_MS = 300;

export function debounce<Args extends unknown[]>(
    fn: (...args: Args) => void,
    waitMs: number,
): (...args: Args) => void {
    let timer: ReturnType<typeof setTimeout> | null = null;
    return (...args: Args) => {
        if (timer !== null) {
            clearTimeout(timer);
        }
        timer = setTimeout(() => {
            timer = null;
            fn(...args);
        }, waitMs);
    };
}

export class WhatIfPanel {
    readonly root: HTMLElement;
    private gammaA = 0.5;
    private gammaC = 0.5;
    private output: HTMLElement;
    private errorBox: HTMLElement;
    private readonly requestSuggestion: () => void;
    private lastSuggestion: ReturnType<typeof whatifViewModel> | null = null;

    constructor(
        private readonly api: WorkbenchApi,
        private readonly sessionId: string,
        private readonly principleNames: string[],
        private readonly editors: Partial<Record<'analyst' | 'consumer', AllocationEditor>>,
    ) {
        this.root = document.createElement('div');
        this.root.className = 'whatif';
        const title = document.createElement('h3');
        title.textContent = 'what-if concessions';
        this.root.appendChild(title);

        this.root.appendChild(
            this.concessionSlider('analyst concession', (value) => {
                this.gammaA = value;
                this.requestSuggestion();
            }),
        );
        this.root.appendChild(
            this.concessionSlider('consumer concession', (value) => {
                this.gammaC = value;
                this.requestSuggestion();
            }),
        );

        this.output = document.createElement('div');
        this.output.className = 'whatif-output';
        this.errorBox = document.createElement('div');
        this.errorBox.className = 'whatif-error';
        this.root.append(this.output, this.errorBox);

        const adopt = document.createElement('button');
        adopt.textContent = 'adopt as draft';
        adopt.addEventListener('click', () => this.adopt());
        this.root.appendChild(adopt);

        this.requestSuggestion = debounce(() => {
            void this.refresh();
        }, SUGGEST_DEBOUNCE_MS);
        void this.refresh();
    }

    private concessionSlider(
        label: string,
        onChange: (value: number) => void,
    ): HTMLElement {
        const row = document.createElement('div');
        row.className = 'slider-row';
        const text = document.createElement('label');
        text.textContent = label;
        const slider = document.createElement('input');
        slider.type = 'range';
        slider.min = '0';
        slider.max = '100';
        slider.value = '50';
        const reading = document.createElement('span');
        reading.textContent = '0.50';
        slider.addEventListener('input', () => {
            const value = Number(slider.value) / 100;
            reading.textContent = value.toFixed(2);
            onChange(value);
        });
        row.append(text, slider, reading);
        return row;
    }

    async refresh(): Promise<void> {
        try {
            const suggestion = await this.api.suggest(
                this.sessionId,
                this.gammaA,
                this.gammaC,
            );
            this.lastSuggestion = whatifViewModel(suggestion, this.principleNames);
            this.errorBox.textContent = '';
            this.renderSuggestion();
        } catch (error) {
            // surface server refusals (409 before baselines, 422 bad gammas)
            // verbatim rather than masking them
            this.lastSuggestion = null;
            this.output.innerHTML = '';
            this.errorBox.textContent =
                error instanceof ApiError ? error.message : String(error);
        }
    }

    private renderSuggestion(): void {
        const vm = this.lastSuggestion;
        if (vm === null) {
            return;
        }
        const rows = vm.rows
            .map(
                (row) =>
                    `<tr><td>${row.principle}</td><td>${row.predicted.toFixed(6)}</td></tr>`,
            )
            .join('');
        this.output.innerHTML = `
            <table class="whatif-table">
                <thead><tr><th>principle</th><th>predicted difference</th></tr></thead>
                <tbody>${rows}</tbody>
            </table>
            <div class="gauge-reading">predicted sup-norm ${vm.supGauge.value.toPrecision(6)}
                / p-norm ${vm.pNormGauge.value.toPrecision(6)} vs ε=${vm.supGauge.epsilon}</div>
            <div class="badge ${vm.strongBadge ? 'badge-on' : 'badge-off'}">
                ${vm.strongBadge ? 'predicted strongly aligned' : 'not strongly aligned'}</div>
            <div class="badge ${vm.weakBadge ? 'badge-on' : 'badge-off'}">
                ${vm.weakBadge ? 'predicted weakly aligned' : 'not weakly aligned'}</div>
        `;
    }

    private adopt(): void {
        const vm = this.lastSuggestion;
        if (vm === null) {
            return;
        }
        this.editors.analyst?.setDraft(vm.analystWeights);
        this.editors.consumer?.setDraft(vm.consumerWeights);
    }
}

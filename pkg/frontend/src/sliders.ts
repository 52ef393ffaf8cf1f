/** Simplex slider logic: moving one weight proportionally renormalizes the
 * rest, so a draft always sums to 1 and never pins a principle to zero. */

import { Rolename } from './types.js';

export const MIN_WEIGHT = 0.001;

export function equalWeights(count: number): number[] {
    return new Array(count).fill(1 / count);
}

export function renormalize(weights: number[]): number[] {
    const total = weights.reduce((acc, w) => acc + w, 0);
    if (total <= 0) {
        return equalWeights(weights.length);
    }
    return weights.map((w) => w / total);
}

/** Set one component and scale the others into the remaining mass. */
export function setWeight(weights: number[], index: number, value: number): number[] {
    const count = weights.length;
    const ceiling = 1 - MIN_WEIGHT * (count - 1);
    const pinned = Math.min(Math.max(value, MIN_WEIGHT), ceiling);
    const remainder = 1 - pinned;
    const othersTotal = weights.reduce(
        (acc, w, k) => (k === index ? acc : acc + w),
        0,
    );
    const next = weights.map((w, k) => {
        if (k === index) {
            return pinned;
        }
        if (othersTotal <= 0) {
            return remainder / (count - 1);
        }
        return (w / othersTotal) * remainder;
    });
    return renormalize(next);
}

export function formatPercent(weight: number): string {
    return `${(100 * weight).toFixed(1)}%`;
}

export interface EditorOptions {
    onDraftChange?: (weights: number[]) => void;
    onSubmit?: (weights: number[]) => void;
}

/** One slider per principle plus a live total and a submit button. */
export class AllocationEditor {
    readonly root: HTMLElement;
    private draft: number[];
    private sliders: HTMLInputElement[] = [];
    private valueLabels: HTMLElement[] = [];
    private totalLabel: HTMLElement;

    constructor(
        readonly role: Rolename,
        principleNames: string[],
        private readonly options: EditorOptions = {},
    ) {
        this.draft = equalWeights(principleNames.length);
        this.root = document.createElement('div');
        this.root.className = `editor editor-${role}`;
        const title = document.createElement('h3');
        title.textContent = `${role} draft`;
        this.root.appendChild(title);

        principleNames.forEach((name, index) => {
            const row = document.createElement('div');
            row.className = 'slider-row';
            const label = document.createElement('label');
            label.textContent = name;
            const slider = document.createElement('input');
            slider.type = 'range';
            slider.min = '0';
            slider.max = '1000';
            slider.step = '1';
            slider.addEventListener('input', () => {
                this.applyChange(index, Number(slider.value) / 1000);
            });
            const value = document.createElement('span');
            value.className = 'slider-value';
            row.append(label, slider, value);
            this.root.appendChild(row);
            this.sliders.push(slider);
            this.valueLabels.push(value);
        });

        this.totalLabel = document.createElement('div');
        this.totalLabel.className = 'slider-total';
        this.root.appendChild(this.totalLabel);

        const submit = document.createElement('button');
        submit.textContent = 'submit allocations';
        submit.addEventListener('click', () => {
            this.options.onSubmit?.(this.weights());
        });
        this.root.appendChild(submit);
        this.render();
    }

    weights(): number[] {
        return [...this.draft];
    }

    setDraft(weights: number[]): void {
        this.draft = renormalize([...weights]);
        this.render();
        this.options.onDraftChange?.(this.weights());
    }

    private applyChange(index: number, value: number): void {
        this.draft = setWeight(this.draft, index, value);
        this.render();
        this.options.onDraftChange?.(this.weights());
    }

    private render(): void {
        this.draft.forEach((weight, index) => {
            this.sliders[index].value = String(Math.round(weight * 1000));
            this.valueLabels[index].textContent = formatPercent(weight);
        });
        const total = this.draft.reduce((acc, w) => acc + w, 0);
        this.totalLabel.textContent = `total: ${formatPercent(total)}`;
    }
}

/** Pure view models. Every number shown in the UI is copied verbatim from a
 * server response; nothing here recomputes a metric. */

import {
    SessionView,
    SuggestResponse,
    Verdict,
    submissionFor,
} from './types.js';

export type Phase =
    | 'baseline-empty'
    | 'baseline-partial'
    | 'negotiation'
    | 'resolution-partial'
    | 'resolution'
    | 'closed';

export function sessionPhase(view: SessionView): Phase {
    switch (view.stage) {
        case 'baseline': {
            const any =
                submissionFor(view, 'analyst', 'baseline') !== null ||
                submissionFor(view, 'consumer', 'baseline') !== null;
            return any ? 'baseline-partial' : 'baseline-empty';
        }
        case 'negotiation': {
            const any =
                submissionFor(view, 'analyst', 'resolution') !== null ||
                submissionFor(view, 'consumer', 'resolution') !== null;
            return any ? 'resolution-partial' : 'negotiation';
        }
        case 'resolution':
            return 'resolution';
        case 'closed':
            return 'closed';
    }
}

const BANNERS: Record<Phase, string> = {
    'baseline-empty': 'Baseline stage: both parties still need to submit allocations.',
    'baseline-partial': 'Baseline stage: waiting for the other party.',
    negotiation: 'Negotiation stage: discuss, explore what-ifs, then record resolutions.',
    'resolution-partial': 'Resolution stage: one party still needs to record allocations.',
    resolution: 'Resolution recorded: final alignment below.',
    closed: 'Session closed.',
};

export function stageBanner(phase: Phase): string {
    return BANNERS[phase];
}

export interface GaugeViewModel {
    label: string;
    /** server-provided norm, displayed as-is */
    value: number;
    epsilon: number;
    on: boolean;
}

export interface BarViewModel {
    principle: string;
    baseline: number;
    overall: number | null;
}

export interface DashboardViewModel {
    available: boolean;
    awaitingText: string | null;
    banner: string;
    bars: BarViewModel[];
    supGauge: GaugeViewModel | null;
    pNormGauge: GaugeViewModel | null;
    strongBadge: boolean;
    weakBadge: boolean;
    /** which server verdict the gauges mirror */
    verdictSource: 'resolution' | 'baseline' | null;
    overallPending: boolean;
}

function gauges(verdict: Verdict): {
    sup: GaugeViewModel;
    pNorm: GaugeViewModel;
} {
    return {
        sup: {
            label: 'sup-norm',
            value: verdict.sup_norm,
            epsilon: verdict.epsilon,
            on: verdict.strong,
        },
        pNorm: {
            label: `p-norm (p=${verdict.p})`,
            value: verdict.p_norm,
            epsilon: verdict.epsilon,
            on: verdict.weak,
        },
    };
}

export function dashboardViewModel(view: SessionView): DashboardViewModel {
    const phase = sessionPhase(view);
    const banner = stageBanner(phase);
    if (view.baseline === null) {
        return {
            available: false,
            awaitingText: 'Awaiting submissions: the alignment dashboard fills in once both baselines are in.',
            banner,
            bars: [],
            supGauge: null,
            pNormGauge: null,
            strongBadge: false,
            weakBadge: false,
            verdictSource: null,
            overallPending: false,
        };
    }
    const overall = view.resolution?.overall ?? null;
    const bars = view.principles.names.map((principle, index) => ({
        principle,
        baseline: view.baseline!.difference[index],
        overall: overall === null ? null : overall[index],
    }));
    const verdict = view.resolution?.verdict ?? view.baseline.verdict;
    const { sup, pNorm } = gauges(verdict);
    return {
        available: true,
        awaitingText: null,
        banner,
        bars,
        supGauge: sup,
        pNormGauge: pNorm,
        strongBadge: verdict.strong,
        weakBadge: verdict.weak,
        verdictSource: view.resolution !== null ? 'resolution' : 'baseline',
        overallPending: view.resolution === null && phase !== 'baseline-empty'
            && phase !== 'baseline-partial',
    };
}

export interface WhatIfViewModel {
    rows: { principle: string; predicted: number }[];
    supGauge: GaugeViewModel;
    pNormGauge: GaugeViewModel;
    strongBadge: boolean;
    weakBadge: boolean;
    analystWeights: number[];
    consumerWeights: number[];
}

export function whatifViewModel(
    suggestion: SuggestResponse,
    principleNames: string[],
): WhatIfViewModel {
    const verdict = suggestion.predicted_verdict;
    const { sup, pNorm } = gauges(verdict);
    return {
        rows: principleNames.map((principle, index) => ({
            principle,
            predicted: suggestion.predicted_D[index],
        })),
        supGauge: sup,
        pNormGauge: pNorm,
        strongBadge: verdict.strong,
        weakBadge: verdict.weak,
        analystWeights: suggestion.analyst_weights,
        consumerWeights: suggestion.consumer_weights,
    };
}

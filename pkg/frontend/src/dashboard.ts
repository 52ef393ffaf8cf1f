/** DOM renderer for the alignment dashboard view model. */

import { DashboardViewModel, GaugeViewModel } from './viewmodel.js';

function gaugeElement(gauge: GaugeViewModel, badgeText: string): HTMLElement {
    const wrap = document.createElement('div');
    wrap.className = 'gauge';
    const fill = Math.min(1, gauge.epsilon > 0 ? gauge.value / (2 * gauge.epsilon) : 0);
    wrap.innerHTML = `
        <div class="gauge-label">${gauge.label}</div>
        <div class="gauge-track">
            <div class="gauge-fill" style="width:${(100 * fill).toFixed(1)}%"></div>
            <div class="gauge-threshold" style="left:50%" title="epsilon = ${gauge.epsilon}"></div>
        </div>
        <div class="gauge-reading">${gauge.value.toPrecision(6)} vs ε=${gauge.epsilon}</div>
        <div class="badge ${gauge.on ? 'badge-on' : 'badge-off'}">${badgeText}</div>
    `;
    return wrap;
}

export function renderDashboard(
    container: HTMLElement,
    vm: DashboardViewModel,
): void {
    container.innerHTML = '';
    const banner = document.createElement('div');
    banner.className = 'stage-banner';
    banner.textContent = vm.banner;
    container.appendChild(banner);

    if (!vm.available) {
        const waiting = document.createElement('div');
        waiting.className = 'awaiting';
        waiting.textContent = vm.awaitingText ?? '';
        container.appendChild(waiting);
        return;
    }

    const chart = document.createElement('div');
    chart.className = 'bar-chart';
    const scale = Math.max(
        1e-9,
        ...vm.bars.map((bar) =>
            Math.max(Math.abs(bar.baseline), Math.abs(bar.overall ?? 0)),
        ),
    );
    for (const bar of vm.bars) {
        const row = document.createElement('div');
        row.className = 'bar-row';
        const label = document.createElement('span');
        label.className = 'bar-label';
        label.textContent = bar.principle;
        row.appendChild(label);
        row.appendChild(barTrack('baseline', bar.baseline, scale));
        if (bar.overall !== null) {
            row.appendChild(barTrack('overall', bar.overall, scale));
        } else if (vm.overallPending) {
            const pending = document.createElement('span');
            pending.className = 'bar-pending';
            pending.textContent = 'overall pending';
            row.appendChild(pending);
        }
        chart.appendChild(row);
    }
    container.appendChild(chart);

    const gaugeBox = document.createElement('div');
    gaugeBox.className = 'gauges';
    if (vm.supGauge) {
        gaugeBox.appendChild(
            gaugeElement(vm.supGauge, vm.strongBadge ? 'strongly aligned' : 'not strongly aligned'),
        );
    }
    if (vm.pNormGauge) {
        gaugeBox.appendChild(
            gaugeElement(vm.pNormGauge, vm.weakBadge ? 'weakly aligned' : 'not weakly aligned'),
        );
    }
    const source = document.createElement('div');
    source.className = 'verdict-source';
    source.textContent = `verdict from ${vm.verdictSource} metrics`;
    gaugeBox.appendChild(source);
    container.appendChild(gaugeBox);
}

function barTrack(kind: string, value: number, scale: number): HTMLElement {
    const track = document.createElement('span');
    track.className = `bar-track bar-${kind}`;
    const magnitude = Math.min(1, Math.abs(value) / scale);
    const fill = document.createElement('span');
    fill.className = value >= 0 ? 'bar-fill positive' : 'bar-fill negative';
    fill.style.width = `${(50 * magnitude).toFixed(1)}%`;
    const reading = document.createElement('span');
    reading.className = 'bar-reading';
    reading.textContent = `${kind} ${value.toFixed(4)}`;
    track.append(fill, reading);
    return track;
}

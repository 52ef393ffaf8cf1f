/** Fixture loading for contract tests (recorded from the live service by
 * scripts/record_fixtures.py at the repository root). */

import { readFileSync } from 'node:fs';

import type { SessionView, SuggestResponse } from '../src/types.js';

export function loadFixture<T>(name: string): T {
    const url = new URL(`./fixtures/${name}`, import.meta.url);
    return JSON.parse(readFileSync(url, 'utf-8')) as T;
}

export const sessionFixture = (name: string): SessionView =>
    loadFixture<SessionView>(name);

export const suggestFixture = (name: string): SuggestResponse =>
    loadFixture<SuggestResponse>(name);

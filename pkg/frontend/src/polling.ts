/** Fixed-interval polling; the service pushes nothing. */

export const POLL_INTERVAL_MS = 2000;

export interface PollHandle {
    stop(): void;
}

export function startPolling(
    tick: () => Promise<void>,
    onError: (error: unknown) => void,
    intervalMs: number = POLL_INTERVAL_MS,
): PollHandle {
    let active = true;
    let inFlight = false;
    const timer = setInterval(async () => {
        if (!active || inFlight) {
            return;
        }
        inFlight = true;
        try {
            await tick();
        } catch (error) {
            onError(error);
        } finally {
            inFlight = false;
        }
    }, intervalMs);
    return {
        stop() {
            active = false;
            clearInterval(timer);
        },
    };
}

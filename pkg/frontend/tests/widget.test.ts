// Widget constraint, end to end: for every understanding level the
// agreement control's active range is exactly the permitted span, boundary
// submissions land on a live server, and nothing past the boundary can
// leave the widget.

import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api';
import { AppraisalWidget, agreementSpan, appraisalSubmitter } from '../src/appraisal';
import { LiveServer, post, startServer } from './server';

let server: LiveServer;
let api: ApiClient;
let proposal: string;
let geometry: { understanding_levels: number[]; max_agreement: number };

beforeAll(async () => {
    server = await startServer();
    await post(server.baseUrl, '/deliberations', {
        id: 'ui',
        roster: ['tess', 'uma', 'vik'],
    });
    const created = await post(
        server.baseUrl,
        '/deliberations/ui/proposals',
        { body: 'shared bicycles on every corner' },
        'wren',
    );
    proposal = created.proposal;
    await post(server.baseUrl, '/deliberations/ui/advance', {});
    api = new ApiClient({ baseUrl: server.baseUrl, participant: 'tess', deliberation: 'ui' });
    const info = await api.deliberation();
    geometry = info.appraisal;
}, 60_000);

afterAll(async () => {
    await server.stop();
});

function mountWidget(): AppraisalWidget {
    const root = document.createElement('div');
    document.body.appendChild(root);
    return new AppraisalWidget(root, geometry, appraisalSubmitter(api, proposal));
}

describe('appraisal widget against the live server', () => {
    it('scales the active range to exactly the permitted span per level', () => {
        const widget = mountWidget();
        const slider = widget.root.querySelector('.agreement-range') as HTMLInputElement;
        for (const level of geometry.understanding_levels) {
            widget.setUnderstanding(level);
            const span = agreementSpan(level, geometry.max_agreement);
            if (level === 0) {
                expect(slider.disabled).toBe(true);
            } else {
                expect(slider.disabled).toBe(false);
                expect(Number(slider.min)).toBe(-span);
                expect(Number(slider.max)).toBe(span);
            }
        }
    });

    it('submits successfully at both boundaries of every level', async () => {
        const widget = mountWidget();
        for (const level of geometry.understanding_levels) {
            widget.setUnderstanding(level);
            if (level === 0) {
                const outcome = await widget.submit();
                expect(outcome.ok).toBe(true);
                continue;
            }
            const span = agreementSpan(level, geometry.max_agreement);
            for (const boundary of [span, -span]) {
                widget.setAgreement(boundary);
                expect(widget.agreement()).toBe(boundary);
                const outcome = await widget.submit();
                expect(outcome.ok).toBe(true);
            }
        }
    });

    it('cannot express one past the boundary, even under DOM tampering', async () => {
        const widget = mountWidget();
        const slider = widget.root.querySelector('.agreement-range') as HTMLInputElement;
        for (const level of geometry.understanding_levels.filter((u) => u > 0)) {
            widget.setUnderstanding(level);
            const span = agreementSpan(level, geometry.max_agreement);
            widget.setAgreement(span + 1);
            expect(widget.agreement()).toBe(span);
            widget.setAgreement(-span - 3);
            expect(widget.agreement()).toBe(-span);
            slider.value = String(span + 1); // bypass the setter entirely
            expect(widget.agreement()).toBe(span);
            const outcome = await widget.submit();
            expect(outcome.ok).toBe(true);
        }
    });

    it('disables the agreement control entirely at zero understanding', async () => {
        const widget = mountWidget();
        widget.setUnderstanding(0);
        const slider = widget.root.querySelector('.agreement-range') as HTMLInputElement;
        expect(slider.disabled).toBe(true);
        expect(widget.agreement()).toBeNull();
        widget.setAgreement(3); // inert: the control is disabled
        expect(widget.agreement()).toBeNull();
        const outcome = await widget.submit();
        expect(outcome.ok).toBe(true);
    });

    it('server backstop still rejects a hand-rolled out-of-range pair', async () => {
        const level = geometry.understanding_levels.find((u) => u > 0 && u < 1)!;
        const span = agreementSpan(level, geometry.max_agreement);
        const response = await fetch(`${server.baseUrl}/proposals/${proposal}/appraisals`, {
            method: 'POST',
            headers: { 'Content-Type': 'application/json', 'X-Participant-Id': 'uma' },
            body: JSON.stringify({ understanding: level, agreement: span + 1 }),
        });
        expect(response.status).toBe(422);
        const doc = await response.json();
        expect(doc.code).toBe('TriangleViolation');
    });
});

// Two-axis appraisal control. Picking an understanding level rescales the
// agreement slider to exactly the span that level permits; at zero
// understanding the slider is disabled and only "don't understand" can be
// sent. The server re-checks everything, but a correct widget never lets a
// bad pair leave the page.

import { ApiClient, ApiError } from './api';

export function agreementSpan(understanding: number, maxAgreement: number): number {
    return Math.floor(understanding * maxAgreement + 0.5);
}

export interface AppraisalGeometry {
    understanding_levels: number[];
    max_agreement: number;
}

export type SubmitOutcome = { ok: true } | { ok: false; message: string };

export class AppraisalWidget {
    readonly root: HTMLElement;
    private geometry: AppraisalGeometry;
    private understanding: number;
    private slider: HTMLInputElement;
    private levelSelect: HTMLSelectElement;
    private valueLabel: HTMLSpanElement;
    private status: HTMLParagraphElement;
    private submitButton: HTMLButtonElement;

    constructor(
        root: HTMLElement,
        geometry: AppraisalGeometry,
        private onSubmit: (understanding: number, agreement: number | null) => Promise<void>,
    ) {
        this.root = root;
        this.geometry = geometry;
        this.understanding = geometry.understanding_levels[geometry.understanding_levels.length - 1];
        root.innerHTML = `
            <div class="appraisal-widget">
              <label>How well do you understand it?
                <select class="understanding-level"></select>
              </label>
              <label>How much do you agree?
                <input type="range" class="agreement-range" step="1" />
                <span class="agreement-value"></span>
              </label>
              <button type="button" class="appraisal-submit">Submit appraisal</button>
              <p class="appraisal-status" role="status"></p>
            </div>`;
        this.levelSelect = root.querySelector('.understanding-level') as HTMLSelectElement;
        this.slider = root.querySelector('.agreement-range') as HTMLInputElement;
        this.valueLabel = root.querySelector('.agreement-value') as HTMLSpanElement;
        this.status = root.querySelector('.appraisal-status') as HTMLParagraphElement;
        this.submitButton = root.querySelector('.appraisal-submit') as HTMLButtonElement;

        for (const level of geometry.understanding_levels) {
            const option = document.createElement('option');
            option.value = String(level);
            option.textContent = level === 0 ? "0 — don't understand" : String(level);
            this.levelSelect.appendChild(option);
        }
        this.levelSelect.value = String(this.understanding);
        this.levelSelect.addEventListener('change', () => {
            this.setUnderstanding(Number(this.levelSelect.value));
        });
        this.slider.addEventListener('input', () => {
            this.valueLabel.textContent = String(this.agreement() ?? 0);
        });
        this.submitButton.addEventListener('click', () => {
            void this.submit();
        });
        this.applyRange();
    }

    get span(): number {
        return agreementSpan(this.understanding, this.geometry.max_agreement);
    }

    setUnderstanding(level: number): void {
        if (!this.geometry.understanding_levels.includes(level)) {
            throw new Error(`understanding ${level} is not on the grid`);
        }
        this.understanding = level;
        this.levelSelect.value = String(level);
        this.applyRange();
    }

    private applyRange(): void {
        const span = this.span;
        if (this.understanding === 0) {
            this.slider.disabled = true;
            this.slider.min = '0';
            this.slider.max = '0';
            this.slider.value = '0';
            this.valueLabel.textContent = 'cannot rate agreement';
            return;
        }
        this.slider.disabled = false;
        this.slider.min = String(-span);
        this.slider.max = String(span);
        const clamped = Math.max(-span, Math.min(span, Number(this.slider.value) || 0));
        this.slider.value = String(clamped);
        this.valueLabel.textContent = String(clamped);
    }

    setAgreement(value: number): void {
        if (this.understanding === 0) {
            return; // control is inert; nothing to set
        }
        const span = this.span;
        const clamped = Math.max(-span, Math.min(span, Math.round(value)));
        this.slider.value = String(clamped);
        this.valueLabel.textContent = String(clamped);
    }

    agreement(): number | null {
        if (this.understanding === 0 || this.slider.disabled) {
            return null;
        }
        const span = this.span;
        const raw = Math.round(Number(this.slider.value) || 0);
        return Math.max(-span, Math.min(span, raw));
    }

    async submit(): Promise<SubmitOutcome> {
        try {
            await this.onSubmit(this.understanding, this.agreement());
            this.status.textContent = 'recorded';
            return { ok: true };
        } catch (error) {
            const message = error instanceof ApiError
                ? `${error.code}: ${error.message}`
                : String(error);
            this.status.textContent = message;
            return { ok: false, message };
        }
    }
}

export function appraisalSubmitter(
    api: ApiClient,
    proposal: string,
    task?: string,
): (understanding: number, agreement: number | null) => Promise<void> {
    return async (understanding, agreement) => {
        await api.submitAppraisal(proposal, understanding, agreement, task);
    };
}

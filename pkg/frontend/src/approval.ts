// Approval prompt: the original author sees their text and the rewrite
// side by side; a decision is final, and an already-decided rewrite is
// rendered as such instead of erroring.

import { ApiClient, ApiError, Task } from './api';

export class ApprovalPrompt {
    readonly root: HTMLElement;

    constructor(
        root: HTMLElement,
        private api: ApiClient,
        private onDecided: () => void,
    ) {
        this.root = root;
    }

    async open(task: Task): Promise<void> {
        const original = await this.api.proposal(task.payload.proposal);
        this.root.innerHTML = `
            <div class="approval-prompt" data-rewrite="${task.payload.rewrite}">
              <h3>Does this still say what you meant?</h3>
              <div class="approval-columns">
                <blockquote class="approval-original"></blockquote>
                <blockquote class="approval-rewrite">(rewrite text arrives with publication)</blockquote>
              </div>
              <button type="button" class="approval-approve">approve</button>
              <button type="button" class="approval-reject">reject</button>
              <p class="approval-status" role="status"></p>
            </div>`;
        (this.root.querySelector('.approval-original') as HTMLElement).textContent = original.body;
        const status = this.root.querySelector('.approval-status') as HTMLParagraphElement;
        const decide = async (verdict: 'approve' | 'reject') => {
            try {
                const doc = await this.api.decideRewrite(task.payload.rewrite, verdict);
                status.textContent = verdict === 'approve'
                    ? doc.attribution ?? 'approved'
                    : 'rejected; the rewriter may resubmit it as their own proposal';
            } catch (error) {
                if (error instanceof ApiError && error.code === 'Conflict') {
                    status.textContent = 'already decided';
                } else {
                    throw error;
                }
            }
            this.onDecided();
        };
        (this.root.querySelector('.approval-approve') as HTMLButtonElement)
            .addEventListener('click', () => { void decide('approve'); });
        (this.root.querySelector('.approval-reject') as HTMLButtonElement)
            .addEventListener('click', () => { void decide('reject'); });
    }
}

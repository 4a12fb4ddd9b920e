// Task inbox: opening it (or refreshing) is the readiness signal; the
// server hands back at most one card. Accept routes to the matching view,
// decline tells the server never to ask this participant that again.

import { ApiClient, ApiError, Task } from './api';

const KIND_LABELS: Record<Task['kind'], string> = {
    appraise_proposal: 'Please appraise a proposal',
    appraise_pair: 'Help separate two proposals',
    rewrite_obscure: 'Rewrite a hard-to-read proposal',
    rewrite_for_blocker: 'Rewrite a proposal to win you over',
    approve_rewrite: 'A rewrite of your idea awaits your decision',
};

export interface InboxHandlers {
    onAppraise: (task: Task, proposals: string[]) => void;
    onRewrite: (task: Task) => void;
    onApprove: (task: Task) => void;
}

const MAX_ATTEMPTS = 3;

export class TaskInbox {
    readonly root: HTMLElement;
    current: Task | null = null;

    constructor(
        root: HTMLElement,
        private api: ApiClient,
        private handlers: InboxHandlers,
    ) {
        this.root = root;
    }

    async poll(): Promise<Task | null> {
        let lastError: unknown;
        for (let attempt = 0; attempt < MAX_ATTEMPTS; attempt++) {
            if (attempt > 0) {
                await new Promise((resolve) => setTimeout(resolve, 200 * 2 ** attempt));
            }
            try {
                this.current = await this.api.nextTask();
                this.render();
                return this.current;
            } catch (error) {
                if (error instanceof ApiError) {
                    throw error; // server verdicts are final; only retry transport
                }
                lastError = error;
            }
        }
        this.root.innerHTML = '<p class="inbox-error">could not reach the server</p>';
        throw lastError;
    }

    private render(): void {
        this.root.innerHTML = '';
        if (!this.current) {
            const empty = document.createElement('p');
            empty.className = 'inbox-empty';
            empty.textContent = 'Nothing requested of you right now.';
            this.root.appendChild(empty);
            return;
        }
        const task = this.current;
        const card = document.createElement('div');
        card.className = 'task-card';
        card.dataset.task = task.id;
        card.dataset.kind = task.kind;
        const title = document.createElement('h3');
        title.textContent = KIND_LABELS[task.kind];
        const detail = document.createElement('p');
        detail.className = 'task-detail';
        detail.textContent = this.describe(task);
        const accept = document.createElement('button');
        accept.type = 'button';
        accept.className = 'task-accept';
        accept.textContent = 'accept';
        accept.addEventListener('click', () => this.accept());
        const decline = document.createElement('button');
        decline.type = 'button';
        decline.className = 'task-decline';
        decline.textContent = 'decline';
        decline.addEventListener('click', () => {
            void this.decline();
        });
        card.append(title, detail, accept, decline);
        this.root.appendChild(card);
    }

    private describe(task: Task): string {
        switch (task.kind) {
            case 'appraise_proposal':
                return `proposal ${task.payload.proposal}`;
            case 'appraise_pair':
                return `pair ${task.payload.pair.join(' / ')} — missing: ${task.payload.missing.join(', ')}`;
            case 'rewrite_obscure':
                return `proposal ${task.payload.proposal} reads poorly but its readers back it`;
            case 'rewrite_for_blocker':
                return `you are the one holdout keeping ${task.payload.dominated} alive; `
                    + `rewrite ${task.payload.dominator} so it works for you too`;
            case 'approve_rewrite':
                return `rewrite ${task.payload.rewrite} of your proposal ${task.payload.proposal}`;
        }
    }

    accept(): void {
        if (!this.current) {
            return;
        }
        const task = this.current;
        if (task.kind === 'appraise_proposal') {
            this.handlers.onAppraise(task, [task.payload.proposal]);
        } else if (task.kind === 'appraise_pair') {
            this.handlers.onAppraise(task, task.payload.missing);
        } else if (task.kind === 'approve_rewrite') {
            this.handlers.onApprove(task);
        } else {
            this.handlers.onRewrite(task);
        }
    }

    async decline(): Promise<void> {
        if (!this.current) {
            return;
        }
        await this.api.declineTask(this.current.id);
        await this.poll();
    }
}

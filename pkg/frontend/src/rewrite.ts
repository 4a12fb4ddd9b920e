// Rewrite editor: the invitation's target text sits above the drafting
// area, with a line explaining why this participant was asked.

import { ApiClient, RewriteDoc, Task } from './api';

export class RewriteEditor {
    readonly root: HTMLElement;
    private textarea!: HTMLTextAreaElement;
    private status!: HTMLParagraphElement;

    constructor(
        root: HTMLElement,
        private api: ApiClient,
        private onPublished: (doc: RewriteDoc) => void,
    ) {
        this.root = root;
    }

    async open(task: Task): Promise<void> {
        const targetId: string = task.kind === 'rewrite_for_blocker'
            ? task.payload.dominator
            : task.payload.proposal;
        const target = await this.api.proposal(targetId);
        const why = task.kind === 'rewrite_for_blocker'
            ? `Everyone else behind ${task.payload.dominated} already accepts this one. `
              + 'Rewrite it so you can stand behind it too.'
            : 'Readers who understood this text support it; most could not follow it. '
              + 'Say the same thing so everyone can.';
        this.root.innerHTML = `
            <div class="rewrite-editor" data-task="${task.id}">
              <h3>Rewrite ${targetId}</h3>
              <p class="rewrite-why">${why}</p>
              <blockquote class="rewrite-target"></blockquote>
              <textarea class="rewrite-draft" rows="6"></textarea>
              <button type="button" class="rewrite-submit">Submit rewrite</button>
              <p class="rewrite-status" role="status"></p>
            </div>`;
        (this.root.querySelector('.rewrite-target') as HTMLElement).textContent = target.body;
        this.textarea = this.root.querySelector('.rewrite-draft') as HTMLTextAreaElement;
        this.textarea.value = target.body;
        this.status = this.root.querySelector('.rewrite-status') as HTMLParagraphElement;
        (this.root.querySelector('.rewrite-submit') as HTMLButtonElement).addEventListener(
            'click',
            () => {
                void this.submit(task.id);
            },
        );
    }

    async submit(taskId: string): Promise<RewriteDoc> {
        const doc = await this.api.submitRewrite(taskId, this.textarea.value);
        if (doc.published_as) {
            this.status.textContent = `published as ${doc.published_as}`;
        } else {
            this.status.textContent = 'sent to the original author for approval';
        }
        this.onPublished(doc);
        return doc;
    }
}

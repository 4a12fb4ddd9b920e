// Console wiring: login stub, cluster board as the home view, inbox and
// the task-specific views behind it.

import { ApiClient, ProposalEntry, Session, Task } from './api';
import { AppraisalWidget, appraisalSubmitter } from './appraisal';
import { ApprovalPrompt } from './approval';
import { ClusterBoard } from './board';
import { RewriteEditor } from './rewrite';
import { TaskInbox } from './inbox';

export interface Console {
    api: ApiClient;
    board: ClusterBoard;
    inbox: TaskInbox;
    openAppraisal: (proposal: ProposalEntry | string, task?: Task) => Promise<AppraisalWidget>;
}

export async function mountConsole(root: HTMLElement, session: Session): Promise<Console> {
    const api = new ApiClient(session);
    const info = await api.deliberation();

    root.innerHTML = `
        <header class="console-header">
          <h1>deliberation console</h1>
          <p class="session-line">${session.participant} @ ${session.deliberation}</p>
          <nav>
            <button type="button" id="nav-board">cluster board</button>
            <button type="button" id="nav-inbox">my requests</button>
          </nav>
        </header>
        <main>
          <section id="board-view"></section>
          <section id="inbox-view" hidden></section>
          <section id="detail-view" hidden></section>
        </main>`;

    const boardView = root.querySelector('#board-view') as HTMLElement;
    const inboxView = root.querySelector('#inbox-view') as HTMLElement;
    const detailView = root.querySelector('#detail-view') as HTMLElement;

    const show = (view: HTMLElement) => {
        for (const section of [boardView, inboxView, detailView]) {
            section.hidden = section !== view;
        }
    };

    const openAppraisal = async (proposal: ProposalEntry | string, task?: Task) => {
        const entry = typeof proposal === 'string' ? await api.proposal(proposal) : proposal;
        show(detailView);
        detailView.innerHTML = `
            <article class="appraisal-view">
              <blockquote class="appraisal-target"></blockquote>
              <div class="appraisal-mount"></div>
            </article>`;
        (detailView.querySelector('.appraisal-target') as HTMLElement).textContent = entry.body;
        const widget = new AppraisalWidget(
            detailView.querySelector('.appraisal-mount') as HTMLElement,
            info.appraisal,
            appraisalSubmitter(api, entry.proposal, task?.id),
        );
        return widget;
    };

    const board = new ClusterBoard(boardView, api, (entry) => {
        void openAppraisal(entry);
    });

    const rewriteEditor = new RewriteEditor(detailView, api, () => {
        void board.refresh();
    });
    const approvalPrompt = new ApprovalPrompt(detailView, api, () => {
        void board.refresh();
    });

    const inbox = new TaskInbox(inboxView, api, {
        onAppraise: (task, proposals) => {
            void openAppraisal(proposals[0], task);
        },
        onRewrite: (task) => {
            show(detailView);
            void rewriteEditor.open(task);
        },
        onApprove: (task) => {
            show(detailView);
            void approvalPrompt.open(task);
        },
    });

    (root.querySelector('#nav-board') as HTMLButtonElement).addEventListener('click', () => {
        show(boardView);
        void board.refresh();
    });
    (root.querySelector('#nav-inbox') as HTMLButtonElement).addEventListener('click', () => {
        show(inboxView);
        void inbox.poll();
    });

    await board.refresh();
    return { api, board, inbox, openAppraisal };
}

export function mountLogin(root: HTMLElement, onReady: (session: Session) => void): void {
    root.innerHTML = `
        <form class="login-stub">
          <h1>join a deliberation</h1>
          <label>server <input name="baseUrl" value="" placeholder="http://127.0.0.1:8400" /></label>
          <label>participant id <input name="participant" required /></label>
          <label>deliberation id <input name="deliberation" required /></label>
          <button type="submit">enter</button>
        </form>`;
    (root.querySelector('form') as HTMLFormElement).addEventListener('submit', (event) => {
        event.preventDefault();
        const data = new FormData(event.target as HTMLFormElement);
        onReady({
            baseUrl: String(data.get('baseUrl') || window.location.origin),
            participant: String(data.get('participant')),
            deliberation: String(data.get('deliberation')),
        });
    });
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
    const app = document.getElementById('app') as HTMLElement;
    mountLogin(app, (session) => {
        void mountConsole(app, session);
    });
}

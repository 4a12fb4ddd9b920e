// Cluster board: the digest is the home view, one column per cluster,
// smallest clusters included. Statistics stay hidden while the server
// reports a proposal as blinded.

import { ApiClient, DigestCluster, ProposalEntry } from './api';

export class ClusterBoard {
    readonly root: HTMLElement;

    constructor(
        root: HTMLElement,
        private api: ApiClient,
        private onAppraise: (proposal: ProposalEntry) => void,
    ) {
        this.root = root;
    }

    async refresh(): Promise<void> {
        const digest = await this.api.digest();
        this.root.innerHTML = '';
        const heading = document.createElement('p');
        heading.className = 'board-heading';
        heading.textContent = `generation ${digest.generation} — ${digest.phase} phase`;
        this.root.appendChild(heading);
        if (digest.clusters.length === 0) {
            const empty = document.createElement('p');
            empty.className = 'board-empty';
            empty.textContent = 'No proposals yet.';
            this.root.appendChild(empty);
            return;
        }
        for (const cluster of digest.clusters) {
            this.root.appendChild(this.renderCluster(cluster));
        }
    }

    private renderCluster(cluster: DigestCluster): HTMLElement {
        const column = document.createElement('section');
        column.className = 'cluster-column';
        column.dataset.cluster = cluster.cluster;
        const title = document.createElement('h3');
        title.textContent = `cluster ${cluster.cluster} (${cluster.size})`;
        column.appendChild(title);
        for (const entry of cluster.proposals) {
            column.appendChild(this.renderProposal(entry));
        }
        return column;
    }

    private renderProposal(entry: ProposalEntry): HTMLElement {
        const card = document.createElement('article');
        card.className = 'proposal-card';
        card.dataset.proposal = entry.proposal;
        const body = document.createElement('p');
        body.className = 'proposal-body';
        body.textContent = entry.body;
        const credit = document.createElement('p');
        credit.className = 'proposal-authors';
        credit.textContent = entry.authors.join(', ');
        const stats = document.createElement('p');
        stats.className = 'proposal-stats';
        if (entry.blinded || !entry.stats) {
            stats.textContent = 'stats hidden during blind review';
        } else {
            const clarity = entry.stats.clarity?.toFixed(2) ?? '—';
            stats.textContent = `${entry.stats.appraisal_count} appraisals · clarity ${clarity}`;
        }
        const appraise = document.createElement('button');
        appraise.type = 'button';
        appraise.className = 'proposal-appraise';
        appraise.textContent = 'appraise';
        appraise.addEventListener('click', () => this.onAppraise(entry));
        card.append(body, credit, stats, appraise);
        return card;
    }
}

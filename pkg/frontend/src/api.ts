// Typed client for the deliberation service. Every UI action goes through
// here; nothing in the console recomputes fronts or clusters client-side.

export interface Session {
    baseUrl: string;
    participant: string;
    deliberation: string;
}

export interface DeliberationInfo {
    id: string;
    phase: 'proposal' | 'evaluation';
    generation: number;
    appraisal: {
        understanding_levels: number[];
        max_agreement: number;
    };
}

export interface Task {
    id: string;
    kind: 'appraise_proposal' | 'appraise_pair' | 'rewrite_obscure'
        | 'rewrite_for_blocker' | 'approve_rewrite';
    assignee: string;
    payload: Record<string, any>;
    status: string;
}

export interface ProposalEntry {
    proposal: string;
    authors: string[];
    body: string;
    generation: number;
    blinded: boolean;
    stats: {
        appraisal_count: number;
        clarity: number | null;
        incomprehension_rate: number | null;
        support_among_understanders: number | null;
    } | null;
}

export interface DigestCluster {
    cluster: string;
    size: number;
    proposals: ProposalEntry[];
}

export interface RewriteDoc {
    id: string;
    target: string;
    rewriter: string;
    kind: string;
    state: string;
    published_as: string | null;
    attribution?: string;
    audience?: string[];
}

export class ApiError extends Error {
    constructor(
        public status: number,
        public code: string,
        message: string,
    ) {
        super(message);
    }
}

export class ApiClient {
    constructor(private session: Session) {}

    private headers(): Record<string, string> {
        return {
            'Content-Type': 'application/json',
            'X-Participant-Id': this.session.participant,
        };
    }

    private async request<T>(method: string, path: string, body?: unknown): Promise<T | null> {
        const response = await fetch(`${this.session.baseUrl}${path}`, {
            method,
            headers: this.headers(),
            body: body === undefined ? undefined : JSON.stringify(body),
        });
        if (response.status === 204) {
            return null;
        }
        const doc = await response.json();
        if (!response.ok) {
            throw new ApiError(response.status, doc.code ?? 'Invalid', doc.message ?? 'request failed');
        }
        return doc as T;
    }

    deliberation(): Promise<DeliberationInfo> {
        return this.request<DeliberationInfo>('GET', `/deliberations/${this.session.deliberation}`) as Promise<DeliberationInfo>;
    }

    nextTask(): Promise<Task | null> {
        const participant = encodeURIComponent(this.session.participant);
        const deliberation = encodeURIComponent(this.session.deliberation);
        return this.request<Task>('GET', `/participants/${participant}/next-task?deliberation=${deliberation}`);
    }

    declineTask(taskId: string): Promise<unknown> {
        return this.request('POST', `/tasks/${taskId}/decline`, {});
    }

    submitAppraisal(
        proposal: string,
        understanding: number,
        agreement: number | null,
        task?: string,
    ): Promise<unknown> {
        const body: Record<string, unknown> = { understanding };
        if (agreement !== null) {
            body.agreement = agreement;
        }
        if (task) {
            body.task = task;
        }
        return this.request('POST', `/proposals/${proposal}/appraisals`, body);
    }

    submitRewrite(taskId: string, body: string): Promise<RewriteDoc> {
        return this.request<RewriteDoc>('POST', `/tasks/${taskId}/rewrite`, { body }) as Promise<RewriteDoc>;
    }

    decideRewrite(rewriteId: string, verdict: 'approve' | 'reject'): Promise<RewriteDoc> {
        return this.request<RewriteDoc>('POST', `/rewrites/${rewriteId}/approval`, { verdict }) as Promise<RewriteDoc>;
    }

    digest(topK?: number): Promise<{ clusters: DigestCluster[]; generation: number; phase: string }> {
        const suffix = topK ? `?top_k=${topK}` : '';
        return this.request('GET', `/deliberations/${this.session.deliberation}/digest${suffix}`) as Promise<{
            clusters: DigestCluster[]; generation: number; phase: string;
        }>;
    }

    front(): Promise<{ front: string[]; generation: number }> {
        return this.request('GET', `/deliberations/${this.session.deliberation}/front`) as Promise<{
            front: string[]; generation: number;
        }>;
    }

    proposal(id: string): Promise<ProposalEntry> {
        return this.request<ProposalEntry>('GET', `/proposals/${id}`) as Promise<ProposalEntry>;
    }

    submitProposal(body: string): Promise<{ proposal: string }> {
        return this.request('POST', `/deliberations/${this.session.deliberation}/proposals`, { body }) as Promise<{
            proposal: string;
        }>;
    }
}

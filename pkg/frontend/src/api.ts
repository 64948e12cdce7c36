// Thin fetch wrappers over the gateway. Errors arrive as {code, detail}
// JSON; GatewayError carries the code so the UI can react ("voting-closed"
// gets a toast, everything else a console line).

import type {
  ChatResponse,
  CurrentResponse,
  FeedResponse,
  JoinResponse,
  VoteResponse,
} from "./types.js"

export class GatewayError extends Error {
  readonly code: string
  readonly status: number

  constructor(code: string, detail: string, status: number) {
    super(detail)
    this.code = code
    this.status = status
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const response = await fetch(url, {
    ...init,
    headers: { "content-type": "application/json", ...(init?.headers ?? {}) },
  })
  if (response.status === 204) return undefined as T
  const body = await response.json().catch(() => ({}))
  if (!response.ok) {
    throw new GatewayError(
      typeof body.code === "string" ? body.code : "unknown",
      typeof body.detail === "string" ? body.detail : response.statusText,
      response.status,
    )
  }
  return body as T
}

export type Client = ReturnType<typeof createClient>

export function createClient(base: string, adminToken?: string) {
  let token: string | null = null

  const userHeaders = (): Record<string, string> =>
    token ? { "x-user-token": token } : {}
  const adminHeaders = (): Record<string, string> =>
    adminToken ? { "x-admin-token": adminToken } : {}

  return {
    get token() {
      return token
    },

    async join(displayName = "guest"): Promise<JoinResponse> {
      const joined = await request<JoinResponse>(`${base}/join`, {
        method: "POST",
        body: JSON.stringify({ display_name: displayName }),
      })
      token = joined.token
      return joined
    },

    feed: () => request<FeedResponse>(`${base}/story/feed`),

    current: () => request<CurrentResponse>(`${base}/story/current`),

    vote: (choiceIndex: number) =>
      request<VoteResponse>(`${base}/story/vote`, {
        method: "POST",
        headers: userHeaders(),
        body: JSON.stringify({ choice_index: choiceIndex }),
      }),

    chat: (text: string, channel = "main") =>
      request<ChatResponse>(`${base}/chat`, {
        method: "POST",
        headers: userHeaders(),
        body: JSON.stringify({ text, channel }),
      }),

    closeDay: () =>
      request<{ released: string; day_index: number; finished: boolean }>(
        `${base}/admin/close-day`,
        { method: "POST", headers: adminHeaders() },
      ),

    trace: (traceId: string) =>
      request<Record<string, unknown>>(`${base}/trace/${traceId}`, {
        headers: adminHeaders(),
      }),

    eventsUrl: () => `${base}/events`,
  }
}

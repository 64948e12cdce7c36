// Wire types for the gateway. Everything here mirrors the HTTP/stream
// contract and nothing else — the client has no other coupling to the server.

export type ChoicePayload = {
  index: number
  emoji: string
  caption: string
}

export type NodePayload = {
  id: string
  day_index: number
  body: string
  summary: string | null
  illustrations: string[]
  choices: ChoicePayload[]
  terminal: boolean
}

export type FeedResponse = {
  character: { name: string }
  nodes: NodePayload[]
  finished: boolean
}

export type CurrentResponse = {
  finished: boolean
  now: number
  node: NodePayload | null
  day_index?: number
  opened_at?: number
  closes_at?: number
  tally?: Record<string, number>
  voters?: number
}

export type JoinResponse = {
  token: string
  user_id: string
  display_name: string
}

export type VoteResponse = {
  tally: Record<string, number>
  voters: number
}

export type ChatResponse = {
  reply: string
  illustrations: string[]
  channel: string
  trace_id: string
}

// One line of the NDJSON event stream. `kind` decides which fields exist.
export type EventRecord = {
  kind: string
  ts?: number
  channel?: string
  text?: string
  illustrations?: string[]
  choices?: ChoicePayload[]
  tally?: Record<string, number>
  voters?: number
  node_id?: string
  day_index?: number
  reply_to?: string
  trace_id?: string
  final?: boolean
  [key: string]: unknown
}

// The UI is a fold over the event stream: every record passes through
// `reduce` and the DOM is re-rendered from the result. Reconnects re-seed
// the same state from /story/feed + /story/current, so both paths meet in
// one shape.

import type { CurrentResponse, EventRecord, FeedResponse, NodePayload } from "./types.js"

export type StoryCard = {
  nodeId: string
  dayIndex: number
  body: string
  illustrations: string[]
  choices: { index: number; emoji: string; caption: string }[]
}

export type ChatLine = {
  author: "you" | "character"
  text: string
  illustrations: string[]
}

export type UiState = {
  characterName: string
  cards: StoryCard[]
  tally: Record<string, number>
  voters: number
  finished: boolean
  // index the local user picked, shown highlighted until the next release
  myChoice: number | null
  chat: ChatLine[]
  notices: string[]
}

export function initialState(): UiState {
  return {
    characterName: "",
    cards: [],
    tally: {},
    voters: 0,
    finished: false,
    myChoice: null,
    chat: [],
    notices: [],
  }
}

function toCard(node: NodePayload): StoryCard {
  return {
    nodeId: node.id,
    dayIndex: node.day_index,
    body: node.body,
    illustrations: node.illustrations ?? [],
    choices: node.choices ?? [],
  }
}

/** Seed (or re-seed, after a reconnect) from the REST snapshot endpoints. */
export function seedFromServer(
  state: UiState,
  feed: FeedResponse,
  current: CurrentResponse,
): UiState {
  return {
    ...state,
    characterName: feed.character.name,
    cards: feed.nodes.map(toCard),
    tally: current.tally ?? {},
    voters: current.voters ?? 0,
    finished: feed.finished,
  }
}

/**
 * Apply one stream record. Unknown kinds are ignored on purpose.
 *
 * A story_release can't tell us by itself whether the story just ended (a
 * choice-less release is either a warm-up day or the finale), so `finished`
 * is only ever set from the server snapshot via seedFromServer.
 */
export function reduce(state: UiState, record: EventRecord): UiState {
  switch (record.kind) {
    case "story_release": {
      const card: StoryCard = {
        nodeId: record.node_id ?? "",
        dayIndex: record.day_index ?? 0,
        body: record.text ?? "",
        illustrations: record.illustrations ?? [],
        choices: record.choices ?? [],
      }
      // a release opens a fresh day: old tally and old pick are history
      return { ...state, cards: [...state.cards, card], tally: {}, voters: 0, myChoice: null }
    }
    case "tally_update":
      return { ...state, tally: record.tally ?? {}, voters: record.voters ?? 0 }
    case "chat_reply":
      return {
        ...state,
        chat: [
          ...state.chat,
          {
            author: "character",
            text: record.text ?? "",
            illustrations: record.illustrations ?? [],
          },
        ],
      }
    case "system":
      return { ...state, notices: [...state.notices, record.text ?? ""] }
    default:
      return state
  }
}

/** Local echo for the message the user just sent. */
export function addOwnMessage(state: UiState, text: string): UiState {
  return { ...state, chat: [...state.chat, { author: "you", text, illustrations: [] }] }
}

/** Optimistic vote highlight; confirmed or corrected by the next tally_update. */
export function pickChoice(state: UiState, index: number): UiState {
  return { ...state, myChoice: index }
}

export function clearChoice(state: UiState): UiState {
  return { ...state, myChoice: null }
}

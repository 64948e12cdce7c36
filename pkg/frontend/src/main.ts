import { createClient, GatewayError } from "./api.js"
import {
  addOwnMessage,
  clearChoice,
  initialState,
  pickChoice,
  reduce,
  seedFromServer,
  type UiState,
} from "./state.js"
import { openEventStream } from "./stream.js"
import { renderChat, renderNotices, renderStory, showToast } from "./ui.js"

const params = new URLSearchParams(window.location.search)
const base = params.get("api") ?? ""
const adminToken = params.get("admin_token") ?? undefined
const client = createClient(base, adminToken)

const storyEl = document.getElementById("story")!
const chatEl = document.getElementById("chat-log")!
const noticesEl = document.getElementById("notices")!
const toastEl = document.getElementById("toast")!
const chatForm = document.getElementById("chat-form") as HTMLFormElement
const chatInput = document.getElementById("chat-input") as HTMLInputElement
const modPanel = document.getElementById("mod-panel")!

let state: UiState = initialState()

function setState(next: UiState): void {
  state = next
  renderStory(storyEl, state, castVote)
  renderChat(chatEl, state)
  renderNotices(noticesEl, state)
}

async function resync(): Promise<void> {
  const [feed, current] = await Promise.all([client.feed(), client.current()])
  setState(seedFromServer(state, feed, current))
  document.title = `${feed.character.name} — live story`
}

async function castVote(index: number): Promise<void> {
  setState(pickChoice(state, index))
  try {
    const result = await client.vote(index)
    setState({ ...state, tally: result.tally, voters: result.voters })
  } catch (err) {
    setState(clearChoice(state))
    if (err instanceof GatewayError && err.code === "voting-closed") {
      showToast(toastEl, "Voting for this day has closed.")
    } else if (err instanceof GatewayError && err.code === "story-finished") {
      showToast(toastEl, "The story has ended — no more votes.")
    } else {
      console.error("vote failed", err)
      showToast(toastEl, "Vote failed. Try again.")
    }
  }
}

chatForm.addEventListener("submit", async (event) => {
  event.preventDefault()
  const text = chatInput.value.trim()
  if (!text) return
  chatInput.value = ""
  setState(addOwnMessage(state, text))
  try {
    // the reply itself arrives on the event stream as a chat_reply record
    await client.chat(text)
  } catch (err) {
    console.error("chat failed", err)
    showToast(toastEl, "Message rejected.")
  }
})

if (params.get("mod") === "1") {
  modPanel.hidden = false
  document.getElementById("close-day")!.addEventListener("click", async () => {
    try {
      const closed = await client.closeDay()
      showToast(toastEl, `Released ${closed.released}`)
      await resync()
    } catch (err) {
      const detail = err instanceof GatewayError ? err.code : String(err)
      showToast(toastEl, `Close failed: ${detail}`)
    }
  })
  const traceForm = document.getElementById("trace-form") as HTMLFormElement
  traceForm.addEventListener("submit", async (event) => {
    event.preventDefault()
    const id = (document.getElementById("trace-id") as HTMLInputElement).value.trim()
    const out = document.getElementById("trace-out")!
    try {
      out.textContent = JSON.stringify(await client.trace(id), null, 2)
    } catch (err) {
      out.textContent = err instanceof GatewayError ? `${err.code}: ${err.message}` : String(err)
    }
  })
}

async function boot(): Promise<void> {
  await client.join()
  await resync()
  openEventStream(client.eventsUrl(), {
    onOpen: () => {
      // on every (re)connect, records may have been missed: re-seed
      void resync()
    },
    onRecord: (record) => {
      setState(reduce(state, record))
      if (record.kind === "story_release") {
        // a choice-less release might be the finale; the snapshot knows
        void resync()
      }
    },
  })
}

void boot().catch((err) => {
  console.error("boot failed", err)
  showToast(toastEl, "Could not reach the story server.")
})

// DOM rendering. Small enough to rebuild each section from state on every
// change; no virtual anything.

import type { UiState } from "./state.js"

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag)
  if (className) node.className = className
  if (text !== undefined) node.textContent = text
  return node
}

export function renderStory(
  container: HTMLElement,
  state: UiState,
  onVote: (index: number) => void,
): void {
  container.replaceChildren()
  state.cards.forEach((card, position) => {
    const isLatest = position === state.cards.length - 1
    const section = el("article", "card")
    section.dataset.nodeId = card.nodeId
    section.append(el("h3", "card-day", `Day ${card.dayIndex}`))
    for (const paragraph of card.body.split("\n\n")) {
      section.append(el("p", "card-body", paragraph))
    }
    for (const src of card.illustrations) {
      const img = el("img", "card-illustration")
      img.src = src
      img.alt = `illustration for day ${card.dayIndex}`
      section.append(img)
    }
    if (card.choices.length > 0) {
      const row = el("div", "choices")
      for (const choice of card.choices) {
        const button = el("button", "choice")
        button.dataset.choiceIndex = String(choice.index)
        if (isLatest && state.myChoice === choice.index) button.classList.add("picked")
        button.disabled = !isLatest || state.finished
        const count = state.tally[String(choice.index)] ?? 0
        button.append(
          el("span", "choice-emoji", choice.emoji),
          el("span", "choice-caption", choice.caption),
          el("span", "tally-badge", isLatest ? String(count) : ""),
        )
        button.addEventListener("click", () => onVote(choice.index))
        row.append(button)
      }
      section.append(row)
    }
    container.append(section)
  })
  if (state.finished) {
    container.append(el("p", "finished-note", "The story has ended."))
  }
}

export function renderChat(container: HTMLElement, state: UiState): void {
  container.replaceChildren()
  for (const line of state.chat) {
    const entry = el("div", `chat-line ${line.author}`)
    const who = line.author === "you" ? "You" : state.characterName || "…"
    entry.append(el("strong", "chat-author", `${who}: `))
    entry.append(el("span", "chat-text", line.text))
    for (const src of line.illustrations) {
      const figure = el("figure", "clue-card")
      const img = el("img")
      img.src = src
      img.alt = "clue"
      figure.append(img)
      entry.append(figure)
    }
    container.append(entry)
  }
  container.scrollTop = container.scrollHeight
}

export function renderNotices(container: HTMLElement, state: UiState): void {
  container.replaceChildren()
  for (const notice of state.notices) {
    container.append(el("p", "notice", notice))
  }
}

let toastTimer: ReturnType<typeof setTimeout> | undefined

export function showToast(target: HTMLElement, message: string): void {
  target.textContent = message
  target.classList.add("visible")
  clearTimeout(toastTimer)
  toastTimer = setTimeout(() => target.classList.remove("visible"), 4000)
}

// NDJSON event stream reader. The gateway sends one JSON record per line:
// a stream_open first, heartbeats while idle, real records otherwise. On
// any break we reconnect with backoff and let the caller re-seed its state
// from the REST endpoints, since records may have been missed in between.

import type { EventRecord } from "./types.js"

/** Split a byte stream into parsed NDJSON records. Unparseable lines are skipped. */
export async function readNdjson(
  stream: ReadableStream<Uint8Array>,
  onRecord: (record: EventRecord) => void,
): Promise<void> {
  const reader = stream.getReader()
  const decoder = new TextDecoder()
  let buffer = ""
  for (;;) {
    const { done, value } = await reader.read()
    if (done) break
    buffer += decoder.decode(value, { stream: true })
    let newline
    while ((newline = buffer.indexOf("\n")) >= 0) {
      const line = buffer.slice(0, newline).trim()
      buffer = buffer.slice(newline + 1)
      if (!line) continue
      try {
        onRecord(JSON.parse(line))
      } catch {
        console.warn("skipping unparseable stream line", line)
      }
    }
  }
}

export type StreamOptions = {
  /** called for every record except stream_open / heartbeat */
  onRecord: (record: EventRecord) => void
  /** called once per (re)connection, after stream_open arrives */
  onOpen: () => void
  retryMs?: number
}

/** Connect to /events and keep the connection alive. Returns a stop function. */
export function openEventStream(url: string, options: StreamOptions): () => void {
  let stopped = false
  let controller: AbortController | null = null
  const retryMs = options.retryMs ?? 2000

  const connect = async () => {
    while (!stopped) {
      controller = new AbortController()
      try {
        const response = await fetch(url, { signal: controller.signal })
        if (!response.ok || !response.body) throw new Error(`stream HTTP ${response.status}`)
        await readNdjson(response.body, (record) => {
          if (record.kind === "stream_open") {
            options.onOpen()
          } else if (record.kind !== "heartbeat") {
            options.onRecord(record)
          }
        })
      } catch (err) {
        if (stopped) return
        console.warn("event stream dropped", err)
      }
      if (stopped) return
      await new Promise((resolve) => setTimeout(resolve, retryMs))
      console.log("reconnecting event stream..")
    }
  }

  void connect()
  return () => {
    stopped = true
    controller?.abort()
  }
}

import { afterEach, describe, expect, it, vi } from "vitest"

import { createClient, GatewayError } from "../src/api.js"

type Call = { url: string; init?: RequestInit }

function stubFetch(handler: (url: string, init?: RequestInit) => Response) {
  const calls: Call[] = []
  vi.stubGlobal("fetch", async (url: string, init?: RequestInit) => {
    calls.push({ url, init })
    return handler(url, init)
  })
  return calls
}

const json = (body: unknown, status = 200) =>
  new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  })

afterEach(() => vi.unstubAllGlobals())

describe("createClient", () => {
  it("join stores the token and later calls send it as a header", async () => {
    const calls = stubFetch((url) => {
      if (url.endsWith("/join")) {
        return json({ token: "tok-1", user_id: "u-abc", display_name: "guest" })
      }
      return json({ tally: { "0": 1 }, voters: 1 })
    })
    const client = createClient("http://gw")
    await client.join()
    expect(client.token).toBe("tok-1")
    await client.vote(0)

    const voteCall = calls.find((c) => c.url.endsWith("/story/vote"))!
    const voteHeaders = voteCall.init!.headers as Record<string, string>
    expect(voteHeaders["x-user-token"]).toBe("tok-1")
    // the token header must merge with, not replace, the json content type
    expect(voteHeaders["content-type"]).toBe("application/json")
    expect(JSON.parse(voteCall.init!.body as string)).toEqual({ choice_index: 0 })
  })

  it("maps the error envelope to a GatewayError with the code", async () => {
    stubFetch(() => json({ code: "voting-closed", detail: "day 1 closed" }, 409))
    const client = createClient("http://gw")
    const failure = await client.vote(1).catch((err) => err)
    expect(failure).toBeInstanceOf(GatewayError)
    expect(failure.code).toBe("voting-closed")
    expect(failure.status).toBe(409)
    expect(failure.message).toBe("day 1 closed")
  })

  it("tolerates non-JSON error bodies", async () => {
    stubFetch(() => new Response("<h1>bad gateway</h1>", { status: 502 }))
    const client = createClient("http://gw")
    const failure = await client.vote(1).catch((err) => err)
    expect(failure).toBeInstanceOf(GatewayError)
    expect(failure.code).toBe("unknown")
    expect(failure.status).toBe(502)
  })

  it("chat posts text and channel", async () => {
    const calls = stubFetch(() =>
      json({ reply: "ok", illustrations: [], channel: "main", trace_id: "trace-1" }))
    const client = createClient("http://gw")
    const reply = await client.chat("hello there")
    expect(reply.trace_id).toBe("trace-1")
    expect(JSON.parse(calls[0]!.init!.body as string)).toEqual({
      text: "hello there",
      channel: "main",
    })
  })

  it("admin calls carry the admin token when configured", async () => {
    const calls = stubFetch(() => json({ released: "c2", day_index: 2, finished: false }))
    const client = createClient("http://gw", "hunter2")
    await client.closeDay()
    expect((calls[0]!.init!.headers as Record<string, string>)["x-admin-token"]).toBe("hunter2")
  })

  it("eventsUrl points at the stream endpoint", () => {
    expect(createClient("http://gw").eventsUrl()).toBe("http://gw/events")
  })
})

import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api";

function fakeFetch(
  handler: (url: string, init?: RequestInit) => { status: number; body: string; type?: string },
) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const fn = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init });
    const { status, body, type } = handler(url, init);
    return new Response(body, {
      status,
      headers: { "content-type": type ?? "application/json" },
    });
  };
  return { fn, calls };
}

describe("ApiClient", () => {
  it("posts JSON bodies and parses JSON responses", async () => {
    const { fn, calls } = fakeFetch(() => ({
      status: 200,
      body: JSON.stringify({ job_id: "acm-1" }),
    }));
    const api = new ApiClient("http://x", fn);
    const out = await api.startAcmJob({ samples: 100, seed: 7 });
    expect(out.job_id).toBe("acm-1");
    expect(calls[0].url).toBe("http://x/api/acm/jobs");
    expect(JSON.parse(calls[0].init!.body as string)).toEqual({ samples: 100, seed: 7 });
  });

  it("raises ApiError carrying the service error envelope", async () => {
    const { fn } = fakeFetch(() => ({
      status: 409,
      body: JSON.stringify({ code: "conflict", message: "job running", element: "acm-1" }),
    }));
    const api = new ApiClient("", fn);
    const err = await api.startAcmJob({ samples: 1, seed: 1 }).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.code).toBe("conflict");
    expect(err.message).toBe("job running");
    expect(err.element).toBe("acm-1");
  });

  it("returns XML responses as raw text", async () => {
    const { fn } = fakeFetch(() => ({
      status: 200,
      body: '<robot name="x"/>',
      type: "application/xml",
    }));
    const api = new ApiClient("", fn);
    expect(await api.srdfXml()).toBe('<robot name="x"/>');
  });

  it("keeps non-JSON error bodies readable", async () => {
    const { fn } = fakeFetch(() => ({
      status: 500,
      body: "boom",
      type: "text/plain",
    }));
    const api = new ApiClient("", fn);
    const err = await api.getWorld().catch((e) => e);
    expect(err.code).toBe("error");
    expect(err.message).toBe("boom");
  });
});

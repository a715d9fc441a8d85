import type { ScreeningRequest, ScreeningResponse } from "./types.js";

/** The service said no: carries its status code and detail message. */
export class ScoreRequestError extends Error {
  constructor(
    public readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ScoreRequestError";
  }
}

/** The service could not be reached at all. */
export class ServiceUnreachableError extends Error {
  constructor() {
    super("The screening service is unreachable. Check that it is running, then retry.");
    this.name = "ServiceUnreachableError";
  }
}

async function detailOf(resp: Response): Promise<string> {
  try {
    const body = (await resp.json()) as { detail?: unknown };
    if (typeof body.detail === "string" && body.detail.length > 0) {
      return body.detail;
    }
  } catch {
    // non-JSON error body; fall through to the generic message
  }
  return `request failed with status ${resp.status}`;
}

export async function scoreDescription(
  baseUrl: string,
  request: ScreeningRequest,
): Promise<ScreeningResponse> {
  let resp: Response;
  try {
    resp = await fetch(`${baseUrl}/api/v1/score`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(request),
    });
  } catch {
    throw new ServiceUnreachableError();
  }
  if (!resp.ok) {
    throw new ScoreRequestError(resp.status, await detailOf(resp));
  }
  return (await resp.json()) as ScreeningResponse;
}
